#pragma once

// Run configuration: a sectioned key = value file in which every physical
// value carries a unit suffix, e.g.
//
//   [chain]
//   omega_cm = 2*pi*500 kHz
//   [bath]
//   a_ai = -1.3 R*
//
// Values are kept as strings in a flat "section.key" map until a scenario
// resolves them, so the manifest can store exactly what was parsed.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iongate/bath.hpp"
#include "iongate/chain.hpp"
#include "iongate/evolve.hpp"

namespace iongate::cli {

enum class Dim { angular_frequency, rate, time, temperature, length, density, energy, mass, none };

std::string to_string(Dim d);

// Values of the context-dependent units. A unit whose value is unset is
// rejected with ConfigError.
struct UnitContext {
  std::optional<double> t_gate;  // s
  std::optional<double> T_R;     // s, Raman period
  std::optional<double> R_star;  // m
};

// Arithmetic expression (+ - * / ^, parentheses, pi, sqrt) followed by a
// unit. A value without a unit throws ConfigError naming `key`.
double parse_quantity(const std::string& key, const std::string& text, Dim dim,
                      const UnitContext& ctx = {});
// Expression without a unit.
double parse_number(const std::string& key, const std::string& text);

enum class Scenario { cool, phase_space, gate, sweep, validate };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

class Config {
 public:
  // INI text or the "config" object of a manifest.json.
  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::string& path);
  // Defaults for the scenario; file values and overrides go on top.
  static Config defaults(Scenario s);

  // "section.key=value".
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);
  void merge(const Config& other);

  bool has(const std::string& key) const;
  const std::string& raw(const std::string& key) const;  // ConfigError if missing
  const std::map<std::string, std::string>& entries() const { return entries_; }

  double quantity(const std::string& key, Dim dim, const UnitContext& ctx = {}) const;
  double number(const std::string& key) const;
  int integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::string text(const std::string& key) const;
  std::vector<std::string> list(const std::string& key) const;

  // Throws ConfigError for keys no scenario reads.
  void check_known_keys() const;

 private:
  std::map<std::string, std::string> entries_;
};

enum class SpinInit { uu, ud, du, dd, pp };

SpinInit spin_from_string(const std::string& s);
std::string to_string(SpinInit s);
// 4x4 spin density matrix in the (uu, ud, du, dd) basis.
Mat spin_matrix(SpinInit s);

struct Toggles {
  bool gas = true;
  bool drive = true;
  bool heating = true;
};

// Every value resolved to SI. Built once per run and then read-only.
struct RunConfig {
  Scenario scenario = Scenario::gate;
  Config source;

  ChainParams chain;
  bool cm_only = false;

  SpeciesParams species;
  std::string species_name;
  CalibrationOptions calibration;
  double a_ai = 0.0;                  // m
  std::optional<PotentialParams> explicit_potential;
  double n0 = 0.0, T = 0.0, mu_B = 0.0;

  HeatingParams heating;
  SpinInit spin = SpinInit::uu;
  double c0 = 0.9, c1 = 0.1;
  int n_cm = 10, n_wb = 10;

  SolverOptions solver;
  bool convergence = true;
  int convergence_extra = 4;
  double convergence_limit = 0.005;
  Toggles toggles;

  // cool
  double cool_duration = 0.0;
  std::vector<std::string> cool_families;
  std::vector<bool> cool_drives;
  // phase-space
  double ps_duration = 0.0;
  std::vector<SpinInit> ps_spins;
  std::vector<bool> ps_gas;
  // gate
  double gate_duration = 0.0;
  bool gate_baseline = true;
  // sweep
  std::vector<double> sweep_points;  // in R*
  double fit_t0 = 0.0, fit_t1 = 0.0;
  double sweep_cool_duration = 0.0;
  // validate
  int validate_n_max = 10;
  int magnus_n_max = 12;

  UnitContext units() const;
  HilbertLayout layout() const { return HilbertLayout::make(n_cm, n_wb); }
};

RunConfig resolve(Scenario s, const Config& cfg);

}  // namespace iongate::cli
