// Command-line front end: one subcommand per scenario.
//
// Exit codes: 0 success, 2 configuration error, 3 integration error,
// 4 validation failure (including --strict convergence breaches).

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "iongate/cli/scenarios.hpp"
#include "iongate/errors.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kIntegrationError = 3;
constexpr int kValidationFailure = 4;

}  // namespace

int main(int argc, char** argv) {
  using namespace iongate;

  CLI::App app{"Trapped-ion gate and buffer-gas cooling simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "runs";
  std::vector<std::string> overrides;
  int jobs = 0, nmax = 0;
  bool strict = false;
  app.add_option("--config", config_path, "Config file (INI) or a manifest.json to reproduce");
  app.add_option("--out", out_dir, "Output root directory")->capture_default_str();
  app.add_option("--set", overrides, "Override, section.key=value (repeatable)");
  app.add_option("--jobs", jobs, "Concurrent jobs")->check(CLI::PositiveNumber);
  app.add_option("--nmax", nmax, "Fock cutoff per mode")->check(CLI::Range(2, 64));
  app.add_flag("--strict", strict, "Fail when a convergence metric breaches its limit");

  const std::pair<const char*, cli::Scenario> subs[] = {
      {"cool", cli::Scenario::cool},   {"phase-space", cli::Scenario::phase_space},
      {"gate", cli::Scenario::gate},   {"sweep", cli::Scenario::sweep},
      {"validate", cli::Scenario::validate}};
  const char* help[] = {"Chain temperature vs time for the curve families",
                        "Centre-of-mass phase-space loop during one gate",
                        "Process fidelity of one gate cycle",
                        "Infidelity and cooling rate across scattering lengths",
                        "Structural and convergence checks"};
  for (std::size_t k = 0; k < std::size(subs); ++k) {
    app.add_subcommand(subs[k].first, help[k])->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);

  cli::Scenario scenario = cli::Scenario::gate;
  for (const auto& [name, s] : subs) {
    if (app.got_subcommand(name)) scenario = s;
  }

  try {
    cli::Config cfg;
    if (!config_path.empty()) cfg = cli::Config::load(config_path);
    for (const std::string& o : overrides) cfg.set(o);
    if (jobs > 0) cfg.set("solver.jobs", std::to_string(jobs));
    if (nmax > 0) {
      cfg.set("solver.n_max", std::to_string(nmax));
      if (scenario == cli::Scenario::validate) cfg.set("validate.n_max", std::to_string(nmax));
    }

    cli::Emitted e;
    const std::string dir = cli::run_and_write(scenario, cfg, out_dir, &e);
    std::cout << e.report << "output: " << dir << "\n";
    if (!e.validation_ok) return kValidationFailure;
    if (strict && !e.convergence_ok) {
      std::cerr << "strict: convergence metric above its limit\n";
      return kValidationFailure;
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const CalibrationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IntegrationError& e) {
    std::cerr << "integration error: " << e.what() << "\n";
    return kIntegrationError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
