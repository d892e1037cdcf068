#pragma once

// Scenario runners. Each returns typed results; emit() turns them into the
// CSV table, the report text and the manifest.

#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iongate/cli/config.hpp"
#include "iongate/cli/output.hpp"
#include "iongate/evolve.hpp"
#include "iongate/observables.hpp"

namespace iongate::cli {

// Immutable physics for one run configuration.
struct Physics {
  ChainParams chain;  // drive as configured
  std::optional<BathParams> bath;
  std::optional<DissipatorCoeffs> coeffs;
  HeatingParams heating;  // as configured, independent of toggles
  HilbertLayout layout;
  double c0 = 0.9, c1 = 0.1;
  Mat rho_m;  // c0/c1 thermal mix on both modes

  // Throws ConfigError for a Fermi gas (no dissipator available) and
  // CalibrationError when a_ai cannot be realised.
  static Physics make(const RunConfig& rc, bool need_bath);
  // Same physics on a different Fock layout.
  Physics with_layout(const HilbertLayout& l) const;

  RhsContext context(const Toggles& t) const;
};

ChainParams without_drive(ChainParams p);

// Index-aligned shifts of temperature and <a_cm> between two runs with the
// same sample times, each normalised by the reference maximum. Writes the
// "temperature" and, when <a_cm> is not ~0, "phase" entries.
void trajectory_shifts(const TimeSeries& ref, const TimeSeries& alt,
                       std::map<std::string, double>& into);
double raman_period(const ChainParams& p);

// Relative shifts between the reference run and the n_max + k and dt / 2
// re-runs. Empty when disabled.
struct Convergence {
  std::map<std::string, double> cutoff;       // observable -> relative shift
  std::map<std::string, double> step_halving;
  std::map<std::string, double> info;  // reported, not held to the limit
  bool enabled = false;
  double limit = 0.0;
  double worst() const;
  bool ok() const { return !enabled || worst() <= limit; }
  nlohmann::json to_json() const;
};

struct CoolCurve {
  std::string family;  // unitary, heating, gas, all
  bool drive = true;
  TimeSeries series;
  PropagationResult diag;  // final state and stepping telemetry (series moved out)
};

struct CoolResult {
  Physics physics;
  std::vector<CoolCurve> curves;
  Convergence convergence;
};

struct PhaseSpaceCurve {
  SpinInit spin = SpinInit::uu;
  bool gas = false;
  TimeSeries series;  // adds phase_I_re / phase_I_im and phase-space oracle columns
  double max_abs = 0.0;
  double closure_gap = 0.0;  // |<a>(t_end)|
  double oracle_defect = 0.0;  // max |<a>_I - phi_tot| (closed system only)
};

struct PhaseSpaceResult {
  Physics physics;
  std::vector<PhaseSpaceCurve> curves;
  Convergence convergence;
};

struct GateResult {
  Physics physics;
  GateBranch branch = GateBranch::formula;
  double branch_distance = 0.0;
  double F = 0.0, infidelity = 0.0;
  std::optional<double> baseline_F;
  Mat plus_output;  // |++> after the gate, spin reduced
  Mat plus_ideal;
  double max_trace_drift = 0.0;
  double max_hermiticity_defect = 0.0;
  double duration = 0.0;
  Convergence convergence;
  TimeSeries series;  // all-ones spin input; trace 4
};

struct SweepPoint {
  double a_over_Rstar = 0.0;
  bool ok = false;
  std::string error;
  double b = 0.0, c = 0.0;  // m
  int bound_states = 0;
  double a_realised = 0.0;  // m
  double F = 0.0, infidelity = 0.0;
  FitResult fit;
  double kappa_log = 0.0;  // log-slope cross-check
  double kappa_rel_diff = 0.0;
  Convergence convergence;
};

struct SweepResult {
  Physics physics;
  std::vector<SweepPoint> points;
  std::optional<double> baseline_infidelity;
};

struct Check {
  std::string name;
  double measured = 0.0;
  double limit = 0.0;
  std::string relation;  // "<", "<=", ">=", "within"
  bool pass = false;
  std::string detail;
};

struct ValidateResult {
  Physics physics;
  std::vector<Check> checks;
  bool all_pass() const;
};

CoolResult run_cool(const RunConfig& rc);
PhaseSpaceResult run_phase_space(const RunConfig& rc);
GateResult run_gate(const RunConfig& rc);
SweepResult run_sweep(const RunConfig& rc);
ValidateResult run_validate(const RunConfig& rc);

// Emission. The manifest gains scenario-specific sections.
struct Emitted {
  Table data;
  std::string report;
  nlohmann::json manifest;
  bool validation_ok = true;
  bool convergence_ok = true;
};

nlohmann::json base_manifest(const RunConfig& rc, const Physics* phys);

Emitted emit(const RunConfig& rc, const CoolResult& r);
Emitted emit(const RunConfig& rc, const PhaseSpaceResult& r);
Emitted emit(const RunConfig& rc, const GateResult& r);
Emitted emit(const RunConfig& rc, const SweepResult& r);
Emitted emit(const RunConfig& rc, const ValidateResult& r);

// Resolves, runs and emits one scenario. Returns the run directory.
std::string run_and_write(Scenario s, const Config& cfg, const std::string& out_dir,
                          Emitted* emitted = nullptr);

}  // namespace iongate::cli
