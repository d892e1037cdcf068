// Acceptance criteria C1..C10. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Arguments select a subset, e.g. "C4 C5".
// The lines are also written to acceptance.txt in the working directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "iongate/bath.hpp"
#include "iongate/chain.hpp"
#include "iongate/cli/scenarios.hpp"
#include "iongate/observables.hpp"
#include "iongate/units.hpp"

using namespace iongate;
using namespace iongate::cli;

namespace {

struct Outcome {
  bool pass = false;
  std::string measured;
};

template <typename... A>
std::string fmt(const char* f, A... a) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

Config quiet() {
  Config c;
  c.set("solver.convergence", "false");
  return c;
}

const CoolCurve& curve(const CoolResult& r, const std::string& family, bool drive) {
  for (const CoolCurve& c : r.curves)
    if (c.family == family && c.drive == drive) return c;
  throw std::logic_error("missing curve " + family);
}

// Mean of column over samples with t in [t0, t1].
double window_mean(const TimeSeries& s, const std::string& col, double t0, double t1) {
  const auto& y = s.column(col);
  double acc = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s.times[k] >= t0 - 1e-12 && s.times[k] <= t1 + 1e-12) {
      acc += y[k];
      ++n;
    }
  }
  if (n == 0) throw std::logic_error("empty window");
  return acc / n;
}

constexpr double kGroundK = 20.45e-6;

// ---------------------------------------------------------------------------

Outcome c1_magnus() {
  const ChainParams p = testing::table_chain();
  const double f1 = oracle::magnus_vacuum_fidelity(p, p.t_gate, 12);
  const double f2 = oracle::magnus_vacuum_fidelity(p, 2.0 * p.t_gate, 12);
  const double worst = std::min(f1, f2);
  return {worst >= 1.0 - 1e-8, fmt("1-F(t_gate)=%.3e 1-F(2 t_gate)=%.3e limit 1e-8", 1.0 - f1, 1.0 - f2)};
}

Outcome c2_gate_closed() {
  // Target: (|++> - i|-->)/sqrt2 in the (uu, ud, du, dd) basis.
  const double h = 0.5;
  const Vec pp = (Vec(4) << h, h, h, h).finished();
  const Vec mm = (Vec(4) << h, -h, -h, h).finished();
  const Vec psi = (pp - cplx(0.0, 1.0) * mm) / std::sqrt(2.0);
  const Mat target = psi * psi.adjoint();

  Config c = quiet();
  c.set("toggles.gas", "false");
  c.set("toggles.heating", "false");
  c.set("chain.cm_only", "true");
  c.set("solver.n_max", "12");
  c.set("solver.n_wb", "2");  // undriven: the c0/c1 mix is exact on two levels
  const GateResult cm = run_gate(resolve(Scenario::gate, c));
  const double elem = (cm.plus_output - target).cwiseAbs().maxCoeff();
  const double conj = (cm.plus_output - target.conjugate()).cwiseAbs().maxCoeff();

  Config w = quiet();
  w.set("toggles.gas", "false");
  w.set("toggles.heating", "false");
  const GateResult full = run_gate(resolve(Scenario::gate, w));

  const bool pass = elem <= 1e-5 && full.infidelity < 1e-3;
  return {pass, fmt("cm-only max|rho-target|=%.3e (limit 1e-5; vs conjugate %.3f) branch=%s; "
                    "with wb 1-F=%.3e (limit 1e-3)",
                    elem, conj, to_string(cm.branch).c_str(), full.infidelity)};
}

Outcome c3_phase_arithmetic() {
  const ChainParams p = cm_only(testing::table_chain());
  const double J = spin_phase_J(1, 3, p.t_gate, p);
  double phi_max = 0.0;
  for (int j : {1, 3}) phi_max = std::max(phi_max, std::abs(phi(j, 0, p.t_gate, p)));

  // Independent value from the integrated cm sectors: at t_gate the vacuum
  // returns with a pure phase, and arg(c_ud / c_uu) = 4 J13 since the ud
  // sector feels no force when b1 = b3.
  const auto uu = oracle::sector_mode_state(p, 0, 0, p.t_gate, 12);
  const auto ud = oracle::sector_mode_state(p, 1, 0, p.t_gate, 12);
  const double J_ode = std::abs(std::arg(ud[0] / uu[0])) / 4.0;

  const double target = units::pi / 8.0;
  const bool pass = std::abs(J - target) < 1e-12 && std::abs(J_ode - target) < 1e-8 && phi_max < 1e-12;
  return {pass, fmt("J13=%.15f integrated=%.12f pi/8=%.15f max|phi_cm(t_gate)|=%.2e", J, J_ode,
                    target, phi_max)};
}

Outcome c4_ground_asymptote() {
  Config c = quiet();
  c.set("cool.families", "gas");
  c.set("cool.drive", "off");
  c.set("cool.duration", "6 ms");
  const auto t0 = std::chrono::steady_clock::now();
  const CoolResult r = run_cool(resolve(Scenario::cool, c));
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto& T = curve(r, "gas", false).series.column("temperature_K");
  const double Tf = T.back();
  const double rel = std::abs(Tf / kGroundK - 1.0);
  return {rel <= 0.02 && wall <= 600.0,
          fmt("T(6 ms)=%.4f uK vs 20.45 uK rel %.4f (limit 0.02); T(0)=%.4f uK; wall %.0f s (limit 600)",
              Tf * 1e6, rel, T.front() * 1e6, wall)};
}

Outcome c5_heating_slope() {
  Config c = quiet();
  c.set("cool.families", "heating");
  c.set("cool.drive", "off");
  c.set("cool.duration", "1 ms");
  const RunConfig rc = resolve(Scenario::cool, c);
  const CoolResult r = run_cool(rc);
  const TimeSeries& s = curve(r, "heating", false).series;
  const auto& T = s.column("temperature_K");
  // Ordinary least-squares slope.
  const double n = double(s.size());
  const double mt = std::accumulate(s.times.begin(), s.times.end(), 0.0) / n;
  const double mT = std::accumulate(T.begin(), T.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    sxy += (s.times[k] - mt) * (T[k] - mT);
    sxx += (s.times[k] - mt) * (s.times[k] - mt);
  }
  const double slope = sxy / sxx;
  const double analytic =
      rc.heating.gamma_Nbar * units::hbar * rc.chain.cm().omega / (2.0 * units::k_B);
  const double rel = std::abs(slope / 2.4e-3 - 1.0);
  return {rel <= 0.02, fmt("dT/dt=%.5f mK/s vs 2.4 mK/s rel %.4f (limit 0.02); analytic %.5f mK/s",
                           slope * 1e3, rel, analytic * 1e3)};
}

Outcome c6_equilibrium() {
  Config c = quiet();
  c.set("cool.families", "all");
  c.set("cool.drive", "on, off");
  c.set("cool.duration", "3 ms");
  const RunConfig rc = resolve(Scenario::cool, c);
  const CoolResult r = run_cool(rc);
  const double tg = rc.chain.t_gate;
  bool pass = true;
  std::string msg;
  for (bool drive : {false, true}) {
    const TimeSeries& s = curve(r, "all", drive).series;
    // Gate-period running means remove the spin-force oscillation.
    const double T_ss = window_mean(s, "temperature_K", 2e-3, 3e-3);
    const double T_half = window_mean(s, "temperature_K", 0.5e-3 - 0.5 * tg, 0.5e-3 + 0.5 * tg);
    const double dev = std::abs(T_half - T_ss) / T_ss;
    pass = pass && dev <= 0.1 && T_ss > kGroundK;
    msg += fmt("%s: T_ss=%.4f uK T(0.5 ms)=%.4f uK dev %.4f (limit 0.1) T(0)=%.4f uK; ",
               drive ? "drive" : "no drive", T_ss * 1e6, T_half * 1e6, dev,
               s.column("temperature_K").front() * 1e6);
  }
  return {pass, msg + "ground 20.45 uK"};
}

Outcome c7_phase_space() {
  Config c = quiet();
  c.set("phase_space.spins", "uu");
  c.set("phase_space.gas", "on, off");
  const PhaseSpaceResult r = run_phase_space(resolve(Scenario::phase_space, c));
  double gas = -1.0, closed = -1.0;
  for (const PhaseSpaceCurve& k : r.curves) (k.gas ? gas : closed) = k.closure_gap;
  const double ratio = gas / closed;
  return {ratio > 10.0, fmt("gap with gas %.4e, closed %.4e, ratio %.3g (limit > 10)", gas, closed, ratio)};
}

// First-run regression constants per grid point (a / R* = -2.5 + 5 k / 12).
struct Frozen {
  double infidelity, kappa;
};
constexpr Frozen kFrozen[] = {
    {0.0044463681488076112, 31.674060361460164},
    {0.0036320918792567269, 18.487919564627997},
    {0.0028500824664344782, 5.8302862033106058},
    {0.0025040218407952342, 0.37315238661371547},
    {0.0039057652460248171, 22.519364482018059},
    {0.010478010517475878, 129.43941083734018},
    {0.025231516406461596, 378.88316030418878},
    {0.037685401055545964, 600.13389855139133},
    {0.040351381934921493, 648.85745310620189},
    {0.031346741019181001, 486.86829331265108},
    {0.027572115819932685, 420.47330535853098},
    {0.024876099057716483, 373.57976389196961},
    {0.022911082086152001, 339.67372677636604},
};
constexpr double kFrozenRel = 1e-6;

Outcome c8_sweep() {
  const SweepResult r = run_sweep(resolve(Scenario::sweep, quiet()));
  const auto& P = r.points;
  std::string msg;
  bool all_ok = P.size() == 13;
  for (const SweepPoint& p : P) {
    std::printf("  sweep a=%+.4f R* ok=%d 1-F=%.17g kappa=%.17g %s\n", p.a_over_Rstar, int(p.ok),
                p.infidelity, p.fit.kappa, p.error.c_str());
    all_ok = all_ok && p.ok;
  }
  if (!all_ok) return {false, "not every grid point succeeded"};

  const std::size_t n = P.size();
  std::size_t imin = 0, kmax = 0;
  for (std::size_t k = 1; k < n; ++k) {
    if (P[k].infidelity < P[imin].infidelity) imin = k;
    if (P[k].fit.kappa > P[kmax].fit.kappa) kmax = k;
  }
  const double a_min = P[imin].a_over_Rstar;
  const bool interior = imin > 0 && imin + 1 < n;
  const bool near = std::abs(a_min + 1.3) <= 0.3;
  const bool not_zero = std::abs(a_min) > 1e-9;

  // Upper tercile: at or above the 2/3 quantile (linear interpolation).
  std::vector<double> sorted;
  for (const SweepPoint& p : P) sorted.push_back(p.infidelity);
  std::sort(sorted.begin(), sorted.end());
  const double pos = (n - 1) * 2.0 / 3.0;
  const std::size_t lo = std::size_t(pos);
  const double q = sorted[lo] + (pos - lo) * (sorted[std::min(lo + 1, n - 1)] - sorted[lo]);
  const bool tercile = P[kmax].infidelity >= q;

  bool frozen = true;
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (kFrozen[k].infidelity == 0.0) {
      frozen = false;
      continue;
    }
    worst = std::max({worst, std::abs(P[k].infidelity / kFrozen[k].infidelity - 1.0),
                      std::abs(P[k].fit.kappa / kFrozen[k].kappa - 1.0)});
  }
  frozen = frozen && worst <= kFrozenRel;

  msg = fmt("argmin 1-F at %+.4f R* (interior %d, |a+1.3|<=0.3 %d, a!=0 %d); kappa argmax at %+.4f R* "
            "with 1-F %.4e vs 2/3 quantile %.4e (%d); frozen levels rel %.2e (limit %.0e, %d)",
            a_min, int(interior), int(near), int(not_zero), P[kmax].a_over_Rstar,
            P[kmax].infidelity, q, int(tercile), worst, kFrozenRel, int(frozen));
  return {interior && near && not_zero && tercile && frozen, msg};
}

Outcome c9_structural() {
  const ValidateResult v = run_validate(resolve(Scenario::validate, Config{}));
  std::string failed;
  for (const Check& k : v.checks) {
    std::printf("  check %-44s %.4e %s %.4e %s\n", k.name.c_str(), k.measured, k.relation.c_str(),
                k.limit, k.pass ? "ok" : "FAIL");
    if (!k.pass) failed += k.name + "; ";
  }
  return {v.all_pass(), fmt("%zu checks, failing: %s", v.checks.size(),
                            failed.empty() ? "none" : failed.c_str())};
}

Outcome c10_constants() {
  const SpeciesParams sp = yb174_li7();
  const ChainParams ch = testing::table_chain();
  const double v = std::sqrt(2.0 * units::hbar * ch.cm().omega / sp.atom_mass);
  const double v_lib = atom_velocity(ch.cm().omega, sp.atom_mass);
  const double v_rel = std::abs(v / 0.24 - 1.0);

  // Radial solver on C4 x 1e-3 against direct Born quadrature. The Born
  // amplitude is linear in C4 at fixed (b, c).
  const SpeciesParams weak = sp.with_C4_scaled(1e-3);
  double worst = 0.0;
  std::string detail;
  for (double a : {1.0, -1.3}) {
    const PotentialParams p = calibrate_potential(a * sp.R_star, {}, sp);
    const double a_solver = scattering_length(p, weak).a;
    const double a_born = -1e-3 * sp.R_star * oracle::born_quadrature(1e-5, p.b / sp.R_star, p.c / sp.R_star);
    const double rel = std::abs(a_solver / a_born - 1.0);
    worst = std::max(worst, rel);
    detail += fmt(" a=%+.1f R*: solver %.6e m, Born %.6e m;", a, a_solver, a_born);
  }
  const bool pass = v_rel <= 0.02 && std::abs(v_lib / v - 1.0) < 1e-12 && worst <= 0.01;
  return {pass, fmt("v=%.5f m/s rel %.4f (limit 0.02); Born vs solver worst rel %.2e (limit 0.01);", v,
                    v_rel, worst) +
                    detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"C1", c1_magnus},          {"C2", c2_gate_closed},   {"C3", c3_phase_arithmetic},
      {"C4", c4_ground_asymptote}, {"C5", c5_heating_slope}, {"C6", c6_equilibrium},
      {"C7", c7_phase_space},     {"C8", c8_sweep},         {"C9", c9_structural},
      {"C10", c10_constants}};
  const std::set<std::string> only(argv + 1, argv + argc);

  std::FILE* log = std::fopen("acceptance.txt", "w");
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s %s [%.0f s]\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.measured.c_str(), wall);
    std::fflush(stdout);
    if (log) {
      std::fprintf(log, "%s %s %s [%.0f s]\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.measured.c_str(), wall);
      std::fflush(log);
    }
    failures += !o.pass;
  }
  if (log) std::fclose(log);
  return failures == 0 ? 0 : 1;
}
