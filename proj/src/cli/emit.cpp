#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "iongate/cli/scenarios.hpp"
#include "iongate/errors.hpp"
#include "iongate/kernels.hpp"
#include "iongate/units.hpp"

namespace iongate::cli {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// JSON has no NaN; non-finite values become null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json chain_json(const ChainParams& c) {
  json j;
  j["ion_mass_kg"] = c.ion_mass;
  j["omega_R_rad_s"] = c.omega_R;
  j["t_gate_s"] = c.t_gate;
  j["raman_k_1_m"] = c.raman_k;
  j["T_R_s"] = raman_period(c);
  for (std::size_t mu = 0; mu < c.modes.size(); ++mu) {
    const ModeSpec& m = c.modes[mu];
    json k;
    k["b"] = m.b;
    k["eigenvalue"] = m.eigenvalue;
    k["omega_rad_s"] = m.omega;
    k["detuning_rad_s"] = m.detuning;
    k["drive_rad_s"] = m.drive;
    k["mode_length_m"] = m.mode_length;
    k["lamb_dicke"] = c.lamb_dicke(int(mu));
    j["modes"][to_string(m.name)] = k;
  }
  return j;
}

json bath_json(const BathParams& b) {
  json j;
  const SpeciesParams& s = b.species;
  j["species"] = {{"atom", s.atom_name},   {"atom_mass_kg", s.atom_mass},
                  {"ion_mass_kg", s.ion_mass}, {"reduced_mass_kg", s.reduced_mass},
                  {"polarizability_SI", s.polarizability}, {"C4_J_m4", s.C4},
                  {"R_star_m", s.R_star},  {"E_star_J", s.E_star}};
  const PotentialParams& p = b.potential;
  j["potential"] = {{"b_m", p.b},
                    {"c_m", p.c},
                    {"a_ai_m", p.a_ai},
                    {"a_ai_over_Rstar", p.a_ai / s.R_star},
                    {"b_over_Rstar", p.b / s.R_star},
                    {"c_over_Rstar", p.c / s.R_star},
                    {"bound_states", p.bound_state_count}};
  j["n0_m3"] = b.n0;
  j["T_K"] = b.T;
  j["mu_B_J"] = b.mu_B;
  j["Gamma_1_m_s"] = b.Gamma;
  return j;
}

json coeffs_json(const DissipatorCoeffs& d) {
  json j;
  j["q_R_1_m"] = d.q_R;
  j["n_q_R"] = d.n_q_R;
  j["f_R_m"] = d.f_R;
  j["f2q3_R_1_m"] = d.f2q3_R;
  j["Gamma_1_m_s"] = d.Gamma;
  const char* names[] = {"cm", "wb"};
  for (std::size_t mu = 0; mu < d.modes.size() && mu < 2; ++mu) {
    const ModeCoeffs& m = d.modes[mu];
    j["modes"][names[mu]] = {{"q_1_m", m.q},
                             {"n_q", m.n_q},
                             {"f_m", m.f},
                             {"f2q3_1_m", m.f2q3},
                             {"alpha_prefactor", m.alpha_prefactor},
                             {"h", m.h},
                             {"h_nq", m.h_nq}};
  }
  return j;
}

json internal_json(const RhsContext& c) {
  json j;
  j["time_unit"] = "1/omega_cm";
  j["omega_unit_rad_s"] = c.omega_unit;
  j["omega_R"] = c.omega_R;
  j["delta"] = c.delta;
  j["g"] = c.g;
  j["P"] = c.P;
  j["G"] = c.G;
  j["X"] = c.X;
  j["alpha"] = c.alpha;
  j["n_q"] = c.n_q;
  j["h"] = c.h;
  j["h_nq"] = c.h_nq;
  j["gamma_down"] = c.gamma_down;
  j["gamma_up"] = c.gamma_up;
  return j;
}

json solver_json(const RunConfig& rc) {
  const SolverOptions& s = rc.solver;
  json j;
  j["method"] = s.method == SolverOptions::Method::rk4 ? "rk4" : "dopri5";
  j["steps_per_period"] = s.steps_per_period;
  j["dt_nominal_s"] = raman_period(rc.chain) / s.steps_per_period;
  j["rtol"] = s.rtol;
  j["atol"] = s.atol;
  j["sample_every_s"] = s.sample_every;
  j["max_steps"] = s.max_steps;
  j["jobs"] = s.jobs;
  j["n_cm"] = rc.n_cm;
  j["n_wb"] = rc.n_wb;
  return j;
}

std::string curve_tag(const std::string& family, bool drive) {
  return family + (drive ? "_drive" : "_nodrive");
}

std::string ps_tag(SpinInit s, bool gas) {
  return (s == SpinInit::pp ? std::string("pp") : to_string(s)) + (gas ? "_gas" : "_closed");
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

void report_convergence(std::ostringstream& r, const Convergence& c) {
  if (!c.enabled) {
    r << "convergence: not run\n";
    return;
  }
  r << "convergence (limit " << fmt(c.limit) << "): " << (c.ok() ? "ok" : "BREACH") << "\n";
  for (const auto& [k, v] : c.cutoff) r << "  cutoff shift " << k << ": " << fmt(v) << "\n";
  for (const auto& [k, v] : c.step_halving) r << "  step-halving shift " << k << ": " << fmt(v) << "\n";
  for (const auto& [k, v] : c.info) r << "  " << k << ": " << fmt(v) << "\n";
}

}  // namespace

json base_manifest(const RunConfig& rc, const Physics* phys) {
  json m;
  m["version"] = version();
  m["scenario"] = to_string(rc.scenario);
  m["kernel"] = std::string(kernels::active().name);
  m["config"] = rc.source.entries();
  m["solver"] = solver_json(rc);
  m["chain"] = chain_json(rc.chain);
  double dist = 0.0;
  const GateBranch br = realized_gate_branch(rc.chain, &dist);
  m["gate_branch"] = {{"branch", to_string(br)}, {"distance", dist}};
  if (phys != nullptr) {
    if (phys->bath) m["bath"] = bath_json(*phys->bath);
    if (phys->coeffs) m["dissipator"] = coeffs_json(*phys->coeffs);
    Toggles t = rc.toggles;
    t.gas = t.gas && phys->coeffs.has_value();
    m["internal"] = internal_json(phys->context(t));
    m["heating"] = {{"gamma_Nbar_1_s", phys->heating.gamma_Nbar},
                    {"rate_down_1_s", phys->heating.rate_down()},
                    {"rate_up_1_s", phys->heating.rate_up()}};
  }
  return m;
}

Emitted emit(const RunConfig& rc, const CoolResult& r) {
  Emitted e;
  e.manifest = base_manifest(rc, &r.physics);
  Table& t = e.data;
  std::ostringstream rep;
  rep << "cool: chain temperature vs time, spin " << to_string(rc.spin) << ", "
      << fmt(rc.cool_duration * 1e3) << " ms\n";
  if (!r.curves.empty()) t.add("t", "s", r.curves.front().series.times);
  json curves = json::array();
  for (const CoolCurve& c : r.curves) {
    const std::string tag = curve_tag(c.family, c.drive);
    for (const char* col : {"temperature_K", "T_cm_K", "T_wb_K", "n_cm", "n_wb", "purity"}) {
      const std::size_t idx = std::distance(
          c.series.columns.begin(),
          std::find_if(c.series.columns.begin(), c.series.columns.end(),
                       [&](const auto& p) { return p.first == col; }));
      t.add(tag + "." + col, c.series.units.at(idx), c.series.column(col));
    }
    const auto& T = c.series.column("temperature_K");
    rep << "  " << tag << ": T(0) = " << fmt(T.front() * 1e6) << " uK, T(end) = "
        << fmt(T.back() * 1e6) << " uK, max trace drift " << fmt(c.diag.max_trace_drift, 3)
        << "\n";
    curves.push_back({{"family", c.family},
                      {"drive", c.drive},
                      {"T_start_K", T.front()},
                      {"T_end_K", T.back()},
                      {"steps", c.diag.steps},
                      {"dt_s", c.diag.dt},
                      {"max_trace_drift", c.diag.max_trace_drift},
                      {"max_hermiticity_defect", c.diag.max_hermiticity_defect}});
  }
  report_convergence(rep, r.convergence);
  e.manifest["results"] = {{"curves", curves}};
  e.manifest["convergence"] = r.convergence.to_json();
  e.convergence_ok = r.convergence.ok();
  e.report = rep.str();
  return e;
}

Emitted emit(const RunConfig& rc, const PhaseSpaceResult& r) {
  Emitted e;
  e.manifest = base_manifest(rc, &r.physics);
  Table& t = e.data;
  std::ostringstream rep;
  rep << "phase-space: <a_cm> over " << fmt(rc.ps_duration * 1e3) << " ms\n"
      << "  phase_re/phase_im: frame rotating with omega_R; phase_I_*: interaction picture\n";
  if (!r.curves.empty()) t.add("t", "s", r.curves.front().series.times);
  json curves = json::array();
  for (const PhaseSpaceCurve& c : r.curves) {
    const std::string tag = ps_tag(c.spin, c.gas);
    for (const char* col : {"phase_re", "phase_im", "phase_I_re", "phase_I_im", "phase_oracle_I_re",
                            "phase_oracle_I_im", "temperature_K"}) {
      t.add(tag + "." + col, std::string(col) == "temperature_K" ? "K" : "1", c.series.column(col));
    }
    rep << "  " << tag << ": max |<a>| = " << fmt(c.max_abs) << ", closure gap = "
        << fmt(c.closure_gap, 4);
    if (std::isfinite(c.oracle_defect)) rep << ", closed-form defect = " << fmt(c.oracle_defect, 3);
    rep << "\n";
    curves.push_back({{"spin", to_string(c.spin)},
                      {"gas", c.gas},
                      {"max_abs", c.max_abs},
                      {"closure_gap", c.closure_gap},
                      {"oracle_defect", num(c.oracle_defect)}});
  }
  report_convergence(rep, r.convergence);
  e.manifest["results"] = {{"curves", curves}};
  e.manifest["convergence"] = r.convergence.to_json();
  e.convergence_ok = r.convergence.ok();
  e.report = rep.str();
  return e;
}

Emitted emit(const RunConfig& rc, const GateResult& r) {
  Emitted e;
  e.manifest = base_manifest(rc, &r.physics);
  Table& t = e.data;
  std::vector<double> row, col, pr, pi, ir, ii;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      row.push_back(i);
      col.push_back(j);
      pr.push_back(r.plus_output(i, j).real());
      pi.push_back(r.plus_output(i, j).imag());
      ir.push_back(r.plus_ideal(i, j).real());
      ii.push_back(r.plus_ideal(i, j).imag());
    }
  }
  t.add("row", "1", row);
  t.add("col", "1", col);
  t.add("plus_out_re", "1", pr);
  t.add("plus_out_im", "1", pi);
  t.add("plus_ideal_re", "1", ir);
  t.add("plus_ideal_im", "1", ii);

  std::ostringstream rep;
  rep << "gate: channel over " << fmt(r.duration * 1e3) << " ms, branch " << to_string(r.branch)
      << " (distance " << fmt(r.branch_distance, 3) << ")\n"
      << "  gas " << (rc.toggles.gas ? "on" : "off") << ", heating "
      << (rc.toggles.heating ? "on" : "off") << ", drive " << (rc.toggles.drive ? "on" : "off")
      << (rc.cm_only ? ", cm mode only" : "") << "\n"
      << "  F = " << fmt(r.F, 12) << ", 1 - F = " << fmt(r.infidelity, 8) << "\n";
  if (r.baseline_F) rep << "  no-gas baseline 1 - F = " << fmt(1.0 - *r.baseline_F, 8) << "\n";
  rep << "  max |<++|out - ideal|++>| elementwise = "
      << fmt((r.plus_output - r.plus_ideal).cwiseAbs().maxCoeff(), 4) << "\n";
  report_convergence(rep, r.convergence);
  e.manifest["results"] = {{"F", r.F},
                           {"infidelity", r.infidelity},
                           {"baseline_F", r.baseline_F ? json(*r.baseline_F) : json(nullptr)},
                           {"baseline_infidelity",
                            r.baseline_F ? json(1.0 - *r.baseline_F) : json(nullptr)},
                           {"max_trace_drift", r.max_trace_drift},
                           {"max_hermiticity_defect", r.max_hermiticity_defect}};
  e.manifest["convergence"] = r.convergence.to_json();
  e.convergence_ok = r.convergence.ok();
  e.report = rep.str();
  return e;
}

Emitted emit(const RunConfig& rc, const SweepResult& r) {
  Emitted e;
  e.manifest = base_manifest(rc, &r.physics);
  Table& t = e.data;
  const double Rs = rc.species.R_star;
  std::vector<double> a, ok, b, c, nb, inf, F, kap, skap, A, B, res, klog, kdiff, cF, ck, hF, hk;
  json pts = json::array();
  std::ostringstream rep;
  rep << "sweep: " << r.points.size() << " scattering lengths, gas on, gamma Nbar = "
      << fmt(rc.heating.gamma_Nbar) << " 1/s\n";
  if (r.baseline_infidelity) rep << "  no-gas baseline 1 - F = " << fmt(*r.baseline_infidelity, 8) << "\n";
  for (const SweepPoint& p : r.points) {
    a.push_back(p.a_over_Rstar);
    ok.push_back(p.ok ? 1.0 : 0.0);
    b.push_back(p.ok ? p.b / Rs : kNaN);
    c.push_back(p.ok ? p.c / Rs : kNaN);
    nb.push_back(p.ok ? p.bound_states : kNaN);
    inf.push_back(p.infidelity);
    F.push_back(p.F);
    kap.push_back(p.ok ? p.fit.kappa : kNaN);
    skap.push_back(p.ok ? p.fit.sigma_kappa : kNaN);
    A.push_back(p.ok ? p.fit.A : kNaN);
    B.push_back(p.ok ? p.fit.B : kNaN);
    res.push_back(p.ok ? p.fit.residual_rms : kNaN);
    klog.push_back(p.kappa_log);
    kdiff.push_back(p.kappa_rel_diff);
    auto get = [](const std::map<std::string, double>& m, const char* k) {
      const auto it = m.find(k);
      return it == m.end() ? kNaN : it->second;
    };
    cF.push_back(get(p.convergence.cutoff, "F"));
    ck.push_back(get(p.convergence.cutoff, "kappa_cm"));
    hF.push_back(get(p.convergence.step_halving, "F"));
    hk.push_back(get(p.convergence.step_halving, "kappa_cm"));
    rep << "  a = " << fmt(p.a_over_Rstar, 5) << " R*: ";
    if (p.ok) {
      rep << "1-F = " << fmt(p.infidelity, 6) << ", kappa_cm = " << fmt(p.fit.kappa, 6)
          << " 1/s (log-slope " << fmt(p.kappa_log, 6) << "), bound states " << p.bound_states
          << "\n";
    } else {
      rep << "FAILED: " << p.error << "\n";
    }
    json jp = {{"a_over_Rstar", p.a_over_Rstar}, {"ok", p.ok}, {"error", p.error}};
    if (p.ok) {
      jp["b_m"] = p.b;
      jp["c_m"] = p.c;
      jp["a_realised_m"] = p.a_realised;
      jp["bound_states"] = p.bound_states;
      jp["F"] = p.F;
      jp["infidelity"] = p.infidelity;
      jp["fit"] = {{"A_K", p.fit.A},         {"kappa_1_s", p.fit.kappa},
                   {"B_K", p.fit.B},         {"sigma_kappa_1_s", p.fit.sigma_kappa},
                   {"residual_rms_K", p.fit.residual_rms},
                   {"window_s", {p.fit.window.first, p.fit.window.second}},
                   {"samples", p.fit.samples}};
      jp["kappa_log_slope_1_s"] = p.kappa_log;
      if (p.convergence.enabled) jp["convergence"] = p.convergence.to_json();
    }
    pts.push_back(jp);
    if (p.convergence.enabled) {
      if (!p.convergence.ok()) e.convergence_ok = false;
      rep << "    convergence checked at this point:\n";
      std::ostringstream sub;
      report_convergence(sub, p.convergence);
      std::istringstream lines(sub.str());
      for (std::string l; std::getline(lines, l);) rep << "    " << l << "\n";
    }
  }
  t.add("a_over_Rstar", "R*", a);
  t.add("ok", "1", ok);
  t.add("b_over_Rstar", "R*", b);
  t.add("c_over_Rstar", "R*", c);
  t.add("bound_states", "1", nb);
  t.add("infidelity", "1", inf);
  t.add("F", "1", F);
  t.add("kappa_cm", "1/s", kap);
  t.add("sigma_kappa_cm", "1/s", skap);
  t.add("fit_A", "K", A);
  t.add("fit_B", "K", B);
  t.add("residual_rms", "K", res);
  t.add("kappa_cm_log_slope", "1/s", klog);
  t.add("kappa_rel_diff", "1", kdiff);
  t.add("cutoff_shift_F", "1", cF);
  t.add("cutoff_shift_kappa", "1", ck);
  t.add("step_shift_F", "1", hF);
  t.add("step_shift_kappa", "1", hk);
  e.manifest["results"] = {{"points", pts},
                           {"baseline_infidelity", r.baseline_infidelity
                                                       ? json(*r.baseline_infidelity)
                                                       : json(nullptr)}};
  e.report = rep.str();
  return e;
}

Emitted emit(const RunConfig& rc, const ValidateResult& r) {
  Emitted e;
  e.manifest = base_manifest(rc, &r.physics);
  Table& t = e.data;
  t.label_name = "check";
  std::vector<double> meas, lim, pass;
  json checks = json::array();
  std::ostringstream rep;
  rep << "validate: n_max = " << rc.validate_n_max << ", kernel " << kernels::active().name << "\n";
  for (const Check& c : r.checks) {
    t.labels.push_back(c.name);
    meas.push_back(c.measured);
    lim.push_back(c.limit);
    pass.push_back(c.pass ? 1.0 : 0.0);
    rep << (c.pass ? "  PASS " : "  FAIL ") << c.name << ": " << fmt(c.measured, 8) << " "
        << c.relation << " " << fmt(c.limit, 8) << (c.detail.empty() ? "" : "  (" + c.detail + ")")
        << "\n";
    checks.push_back({{"name", c.name},
                      {"measured", num(c.measured)},
                      {"limit", c.limit},
                      {"relation", c.relation},
                      {"pass", c.pass},
                      {"detail", c.detail}});
  }
  t.add("measured", "-", meas);
  t.add("limit", "-", lim);
  t.add("pass", "1", pass);
  rep << (r.all_pass() ? "all checks passed\n" : "some checks FAILED\n");
  e.manifest["results"] = {{"checks", checks}, {"all_pass", r.all_pass()}};
  e.validation_ok = r.all_pass();
  e.report = rep.str();
  return e;
}

std::string run_and_write(Scenario s, const Config& cfg, const std::string& out_dir,
                          Emitted* emitted) {
  const RunConfig rc = resolve(s, cfg);
  const std::string dir = make_run_dir(out_dir, to_string(s));
  namespace fs = std::filesystem;
  const auto t0 = std::chrono::steady_clock::now();
  Emitted e;
  try {
    switch (s) {
      case Scenario::cool: e = emit(rc, run_cool(rc)); break;
      case Scenario::phase_space: e = emit(rc, run_phase_space(rc)); break;
      case Scenario::gate: e = emit(rc, run_gate(rc)); break;
      case Scenario::sweep: e = emit(rc, run_sweep(rc)); break;
      case Scenario::validate: e = emit(rc, run_validate(rc)); break;
    }
  } catch (const std::exception& ex) {
    json m = base_manifest(rc, nullptr);
    m["error"] = ex.what();
    write_file((fs::path(dir) / "manifest.json").string(), m.dump(2) + "\n");
    throw;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  e.manifest["wall_time_s"] = secs;
  e.manifest["outputs"] = {"data.csv", "manifest.json", "report.txt"};
  write_file((fs::path(dir) / "data.csv").string(), e.data.to_csv());
  write_file((fs::path(dir) / "manifest.json").string(), e.manifest.dump(2) + "\n");
  write_file((fs::path(dir) / "report.txt").string(), e.report);
  if (emitted != nullptr) *emitted = std::move(e);
  return dir;
}

}  // namespace iongate::cli
