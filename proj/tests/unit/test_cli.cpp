#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "iongate/cli/config.hpp"
#include "iongate/cli/output.hpp"
#include "iongate/cli/scenarios.hpp"
#include "iongate/errors.hpp"
#include "iongate/units.hpp"

using namespace iongate;
using namespace iongate::cli;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("iongate_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("quantity parsing") {
  const double tp = 2.0 * units::pi;
  CHECK(parse_quantity("k", "2*pi*500 kHz", Dim::angular_frequency) == doctest::Approx(tp * 5e5));
  CHECK(parse_quantity("k", "2 * pi * 2*sqrt(3) kHz", Dim::angular_frequency) ==
        doctest::Approx(tp * 2e3 * std::sqrt(3.0)));
  CHECK(parse_quantity("k", "200 nK", Dim::temperature) == doctest::Approx(200e-9));
  CHECK(parse_quantity("k", "1e13 cm^-3", Dim::density) == doctest::Approx(1e19));
  CHECK(parse_quantity("k", "20 s^-1", Dim::rate) == 20.0);
  CHECK(parse_quantity("k", "20 1/s", Dim::rate) == 20.0);
  CHECK(parse_quantity("k", "-(1 + 0.3) nm", Dim::length) == doctest::Approx(-1.3e-9));
  CHECK(parse_quantity("k", "2^3 us", Dim::time) == doctest::Approx(8e-6));
  CHECK(parse_quantity("k", "173.938866 u", Dim::mass) == doctest::Approx(units::mass_yb174));

  UnitContext ctx;
  ctx.t_gate = 2.5e-4;
  ctx.R_star = 7.5e-8;
  CHECK(parse_quantity("k", "t_gate", Dim::time, ctx) == 2.5e-4);
  CHECK(parse_quantity("k", "2 t_gate", Dim::time, ctx) == 5e-4);
  CHECK(parse_quantity("k", "-1.3 R*", Dim::length, ctx) == doctest::Approx(-1.3 * 7.5e-8));

  // Bare numbers, wrong dimensions and unavailable units name the key.
  CHECK(error_of([] { parse_quantity("bath.T", "200", Dim::temperature); }).find("bath.T") == 0);
  CHECK(error_of([] { parse_quantity("bath.T", "2*pi", Dim::temperature); }).find("no recognised") !=
        std::string::npos);
  CHECK(error_of([] { parse_quantity("bath.T", "200 nm", Dim::temperature); }).find("length") !=
        std::string::npos);
  CHECK(error_of([] { parse_quantity("x", "1 T_R", Dim::time); }).find("not available") !=
        std::string::npos);
  CHECK_THROWS_AS(parse_quantity("x", "1 + kHz", Dim::angular_frequency), ConfigError);
  CHECK_THROWS_AS(parse_number("x", "1 / 0"), ConfigError);
  CHECK(parse_number("x", "1e-8") == 1e-8);
}

TEST_CASE("config file parsing and overrides") {
  const std::string text = R"(
# comment
[bath]
a_ai = "-1.3 R*"   ; trailing comment
T = 100 nK
[solver]
n_max = 6
)";
  Config c = Config::parse(text);
  CHECK(c.raw("bath.a_ai") == "-1.3 R*");
  CHECK(c.raw("bath.T") == "100 nK");
  c.set("solver.n_max=5");
  c.set("heating.gamma_Nbar = 3 s^-1");
  const RunConfig rc = resolve(Scenario::gate, c);
  CHECK(rc.a_ai == doctest::Approx(-1.3 * rc.species.R_star));
  CHECK(rc.T == doctest::Approx(100e-9));
  CHECK(rc.n_cm == 5);
  CHECK(rc.n_wb == 5);
  CHECK(rc.heating.gamma_Nbar == 3.0);
  CHECK(rc.chain.t_gate == doctest::Approx(2.5e-4));
  CHECK(rc.solver.steps_per_period == 128);
  CHECK(rc.sweep_points.size() == 13);
  CHECK(rc.sweep_points.front() == doctest::Approx(-2.5));
  CHECK(rc.sweep_points.back() == doctest::Approx(2.5));

  CHECK_THROWS_AS(Config::parse("a = 1"), ConfigError);
  CHECK_THROWS_AS(Config::parse("[x]\nnovalue"), ConfigError);
  CHECK(error_of([] { resolve(Scenario::gate, Config::parse("[bath]\ntypo = 1 K")); })
            .find("bath.typo") != std::string::npos);
  CHECK(error_of([] { resolve(Scenario::gate, Config::parse("[bath]\nn0 = 1e13")); })
            .find("bath.n0") == 0);
  CHECK_THROWS_AS(resolve(Scenario::gate, Config::parse("[bath]\nb = 0.4 R*")), ConfigError);
  CHECK_THROWS_AS(Config().set("nodot=1"), ConfigError);
}

TEST_CASE("scenario defaults") {
  CHECK(resolve(Scenario::cool, {}).heating.gamma_Nbar == 200.0);
  CHECK(resolve(Scenario::gate, {}).heating.gamma_Nbar == 20.0);
  CHECK(resolve(Scenario::sweep, {}).heating.gamma_Nbar == 20.0);
  CHECK_FALSE(resolve(Scenario::phase_space, {}).toggles.heating);
  CHECK(scenario_from_string("phase-space") == Scenario::phase_space);
  CHECK_THROWS_AS(scenario_from_string("nope"), ConfigError);
}

TEST_CASE("fermi gas parses but is out of scope at run time") {
  Config c;
  c.set("bath.species", "li6");
  const RunConfig rc = resolve(Scenario::gate, c);
  CHECK(rc.species.fermion);
  CHECK(error_of([&] { Physics::make(rc, true); }).find("out of scope") == 0);
}

TEST_CASE("spin initial states") {
  CHECK(spin_matrix(SpinInit::uu)(0, 0) == 1.0);
  CHECK(spin_matrix(SpinInit::ud)(1, 1) == 1.0);
  CHECK(spin_matrix(SpinInit::dd)(3, 3) == 1.0);
  CHECK(spin_matrix(SpinInit::pp).trace().real() == doctest::Approx(1.0));
  CHECK(spin_from_string("++") == SpinInit::pp);
  CHECK_THROWS_AS(spin_from_string("u"), ConfigError);
}

TEST_CASE("csv table") {
  Table t;
  t.add("t", "s", {0.0, 0.1});
  t.add("x", "K", {1.0 / 3.0, -2e-300});
  CHECK_THROWS(t.add("bad", "1", {1.0}));
  const std::string csv = t.to_csv();
  std::istringstream in(csv);
  std::string head, unit, r1, r2;
  std::getline(in, head);
  std::getline(in, unit);
  std::getline(in, r1);
  std::getline(in, r2);
  CHECK(head == "t,x");
  CHECK(unit == "s,K");
  CHECK(std::stod(r1.substr(r1.find(',') + 1)) == 1.0 / 3.0);
  CHECK(std::stod(r2.substr(r2.find(',') + 1)) == -2e-300);

  t.label_name = "name";
  t.labels = {"a", "b"};
  CHECK(t.to_csv().substr(0, 9) == "name,t,x\n");
}

TEST_CASE("run directory, manifest and bit-identical reproduction") {
  const auto root = scratch("repro");
  Config c;
  c.set("solver.n_max", "3");
  c.set("cool.duration", "12 T_R");
  c.set("cool.families", "gas, heating");
  c.set("cool.drive", "on");
  c.set("solver.convergence", "false");
  Emitted e;
  const std::string dir = run_and_write(Scenario::cool, c, root.string(), &e);
  for (const char* f : {"data.csv", "manifest.json", "report.txt"}) {
    CHECK(std::filesystem::exists(std::filesystem::path(dir) / f));
  }
  const nlohmann::json m = nlohmann::json::parse(slurp(dir + "/manifest.json"));
  CHECK(m["scenario"] == "cool");
  CHECK(m["config"]["solver.n_max"] == "3");
  CHECK(m.contains("dissipator"));
  CHECK(m.contains("internal"));
  CHECK(m["gate_branch"]["branch"] == "formula");
  CHECK(m["results"]["curves"].size() == 2);

  const Config again = Config::load(dir + "/manifest.json");
  const std::string dir2 = run_and_write(Scenario::cool, again, root.string());
  CHECK(dir2 != dir);
  CHECK(slurp(dir + "/data.csv") == slurp(dir2 + "/data.csv"));
  std::filesystem::remove_all(root);
}

TEST_CASE("phase-space and gate runners on the cm-only chain") {
  // |alpha| reaches 1, so the cutoff must hold a displaced thermal state.
  Config c;
  c.set("chain.cm_only", "true");
  c.set("solver.n_max", "12");
  c.set("solver.n_wb", "2");  // undriven: the c0/c1 mix is exact on two levels
  c.set("solver.convergence", "false");
  c.set("toggles.heating", "false");

  SUBCASE("closed loop follows the closed form") {
    c.set("phase_space.gas", "off");
    const PhaseSpaceResult r = run_phase_space(resolve(Scenario::phase_space, c));
    REQUIRE(r.curves.size() == 2);
    CHECK(r.curves[0].spin == SpinInit::uu);
    CHECK(r.curves[0].max_abs == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(r.curves[0].closure_gap < 1e-3);
    CHECK(r.curves[0].oracle_defect < 1e-6);
    CHECK(r.curves[1].max_abs < 1e-6);
  }
  SUBCASE("closed-system cm-only gate is ideal") {
    c.set("toggles.gas", "false");
    const GateResult g = run_gate(resolve(Scenario::gate, c));
    CHECK(g.infidelity < 1e-6);
    CHECK_FALSE(g.baseline_F.has_value());
    CHECK((g.plus_output - g.plus_ideal).cwiseAbs().maxCoeff() < 1e-5);
  }
}
