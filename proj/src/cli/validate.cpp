#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <random>

#include "iongate/cli/scenarios.hpp"
#include "iongate/kernels.hpp"
#include "iongate/units.hpp"

namespace iongate::cli {

namespace {

using Amp = std::vector<cplx>;

// Interaction-picture amplitudes of one mode in spin sector s, integrated
// from the vacuum: i dc/dt = -F (a e^{i delta t} + a^dag e^{-i delta t}) c.
Amp sector_amplitudes(const ChainParams& p, int s, int mu, double t, int n) {
  const ModeSpec& m = p.modes.at(mu);
  const double F = 0.5 * m.drive * (m.b[0] * spin_value(s, 1) + m.b[2] * spin_value(s, 3));
  const double d = m.detuning;
  std::vector<double> sq(n);
  for (int k = 0; k < n; ++k) sq[k] = std::sqrt(double(k));
  auto rhs = [&](const Amp& x, Amp& dx, double tt) {
    const cplx e = std::exp(cplx(0.0, d * tt));
    for (int k = 0; k < n; ++k) {
      cplx hx = 0.0;
      if (k + 1 < n) hx += e * sq[k + 1] * x[k + 1];
      if (k >= 1) hx += std::conj(e) * sq[k] * x[k - 1];
      dx[k] = cplx(0.0, F) * hx;
    }
  };
  Amp x(n, 0.0);
  x[0] = 1.0;
  namespace ode = boost::numeric::odeint;
  ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_dopri5<Amp>>(1e-14, 1e-14), rhs, x,
                          0.0, t, 2.0 * units::pi / std::abs(d) / 200.0);
  return x;
}

// |Tr(V_analytic^dag V_numeric)|^2 / 16 on spin (x) |0,0>.
double magnus_fidelity(const ChainParams& p, double t, int n) {
  const HilbertLayout l = HilbertLayout::make(n, n);
  const Mat u = analytic_propagator(t, p, l).matrix;
  const int dm = l.motional_dim();
  cplx tr = 0.0;
  for (int s = 0; s < 4; ++s) {
    const Amp c = sector_amplitudes(p, s, 0, t, n);
    const Amp w = sector_amplitudes(p, s, 1, t, n);
    for (int i = 0; i < dm; ++i) tr += std::conj(u(s * dm + i, s * dm)) * c[i / n] * w[i % n];
  }
  return std::norm(tr) / 16.0;
}

Mat random_density(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
  Mat rho = a * a.adjoint();
  return rho / rho.trace();
}

// Block right-hand side on all stored blocks, as a dense matrix in 1/s.
Mat block_rhs_dense(const Mat& rho, double t, const RhsContext& c) {
  const BlockState st = BlockState::from_dense(rho, c.layout);
  BlockState out = st;
  std::vector<double> work(st.block_size());
  const std::size_t half = std::size_t(st.D()) * st.D();
  for (std::size_t k = 0; k < st.blocks.size(); ++k) {
    block_rhs(c, st.blocks[k].s, st.blocks[k].sp, t * c.omega_unit, st.re(k), st.im(k), out.re(k),
              out.im(k), work.data(), work.data() + half);
  }
  return out.to_dense() * c.omega_unit;
}

Check below(std::string name, double v, double limit, std::string detail = {}) {
  return {std::move(name), v, limit, "<", std::isfinite(v) && v < limit, std::move(detail)};
}

Check at_least(std::string name, double v, double limit, std::string detail = {}) {
  return {std::move(name), v, limit, ">=", std::isfinite(v) && v >= limit, std::move(detail)};
}

Check at_most(std::string name, double v, double limit, std::string detail = {}) {
  return {std::move(name), v, limit, "<=", std::isfinite(v) && v <= limit, std::move(detail)};
}

Check within(std::string name, double v, double target, double rel, std::string detail = {}) {
  const bool ok = std::isfinite(v) && std::abs(v / target - 1.0) <= rel;
  return {std::move(name), v, target, "within " + format_double(rel * 100) + "% of", ok,
          std::move(detail)};
}

}  // namespace

ValidateResult run_validate(const RunConfig& rc0) {
  RunConfig rc = rc0;
  rc.n_cm = rc.n_wb = rc.validate_n_max;
  ValidateResult out;
  out.physics = Physics::make(rc, true);
  const Physics& ph = out.physics;
  const ChainParams& ch = ph.chain;
  const double tg = ch.t_gate;
  const Toggles all = rc.toggles;
  const SolverOptions& opts = rc.solver;
  const GateBranch branch = realized_gate_branch(ch);
  const int n_hi = rc.validate_n_max + rc.convergence_extra;
  const Physics big = ph.with_layout(HilbertLayout::make(n_hi, n_hi));

  auto uu_run = [&](const Physics& p, const Toggles& t, double dur, const SolverOptions& o) {
    const BlockState init = BlockState::product(spin_matrix(SpinInit::uu), p.rho_m, p.layout);
    return propagate(init, dur, p.context(t), o);
  };
  auto gate_run = [&](const Physics& p, const SolverOptions& o) {
    return propagate_channel_blocks(p.rho_m, tg, p.context(all), o);
  };

  // Structural invariants on the configured physics.
  const PropagationResult long_uu = uu_run(ph, all, 4.0 * tg, opts);
  const BlockChannel g10 = gate_run(ph, opts);
  const double F10 = process_fidelity(g10.table, ideal_channel(branch));
  out.checks.push_back(below("trace preservation",
                             std::max(long_uu.max_trace_drift, g10.run.max_trace_drift / 4.0), 1e-7,
                             "max |Tr rho(t) - Tr rho(0)|: uu over 4 t_gate and the gate channel"));
  out.checks.push_back(below(
      "hermiticity", std::max(long_uu.max_hermiticity_defect, g10.run.max_hermiticity_defect / 4.0),
      1e-8, "max ||rho - rho^dag||_F"));

  {
    Physics pure = ph;
    pure.rho_m = kron(thermal_mix(1.0, 0.0, rc.n_cm), thermal_mix(1.0, 0.0, rc.n_wb));
    const BlockState init = BlockState::product(spin_matrix(SpinInit::pp), pure.rho_m, pure.layout);
    const PropagationResult r = propagate(init, tg, pure.context({false, true, false}), opts);
    const double p0 = r.series.column("purity").front();
    double d = 0.0;
    for (double p : r.series.column("purity")) d = std::max(d, std::abs(p - p0));
    out.checks.push_back(below("closed-system purity", d, 1e-8, "|++>|0,0> over one gate time"));
  }

  {
    const HilbertLayout l = HilbertLayout::make(4, 3);
    const Physics small = ph.with_layout(l);
    const RhsContext c = small.context(all);
    std::mt19937_64 rng(20240611);
    const Mat r1 = random_density(l.total_dim(), rng), r2 = random_density(l.total_dim(), rng);
    const cplx a(0.3, -1.1), b(-0.7, 0.4);
    const double t = 3.3e-6;
    const Mat lhs = master_rhs(a * r1 + b * r2, t, c);
    const Mat rhs = a * master_rhs(r1, t, c) + b * master_rhs(r2, t, c);
    // Block route: inputs must be Hermitian, so combine with real weights.
    const Mat blhs = block_rhs_dense(0.3 * r1 + 0.7 * r2, t, c);
    const Mat brhs = 0.3 * block_rhs_dense(r1, t, c) + 0.7 * block_rhs_dense(r2, t, c);
    out.checks.push_back(below("superoperator linearity",
                               std::max(relative_frobenius(lhs, rhs), relative_frobenius(blhs, brhs)),
                               1e-12, "dense and block right-hand sides"));

    const HilbertLayout l2 = HilbertLayout::make(5, 4);
    const RhsContext c2 = ph.with_layout(l2).context(all);
    double worst = 0.0;
    for (double tt : {0.0, 1.3e-7, 4.1e-5}) {
      const Mat rho = random_density(l2.total_dim(), rng);
      worst = std::max(worst, relative_frobenius(block_rhs_dense(rho, tt, c2), master_rhs(rho, tt, c2)));
    }
    out.checks.push_back(below("block vs dense equation", worst, 1e-11, "n = 5 x 4, three times"));

    if (kernels::avx2_table() != nullptr && kernels::cpu_has_avx2()) {
      const std::string active(kernels::active().name);
      const Mat rho = random_density(l2.total_dim(), rng);
      kernels::select("scalar");
      const Mat s = block_rhs_dense(rho, 2.2e-6, c2);
      kernels::select("avx2");
      const Mat v = block_rhs_dense(rho, 2.2e-6, c2);
      kernels::select(active);
      out.checks.push_back(below("kernel equivalence", relative_frobenius(s, v), 1e-13,
                                 "scalar vs avx2 block right-hand side"));
    } else {
      out.checks.push_back({"kernel equivalence", 0.0, 1e-13, "<", true, "avx2 not available"});
    }
  }

  // Cutoff convergence n -> n + extra.
  const PropagationResult uu10 = uu_run(ph, all, tg, opts);
  {
    const PropagationResult uu14 = uu_run(big, all, tg, opts);
    const BlockChannel g14 = gate_run(big, opts);
    const double F14 = process_fidelity(g14.table, ideal_channel(branch));
    std::map<std::string, double> sh;
    trajectory_shifts(uu10.series, uu14.series, sh);
    const double T10 = g10.run.series.column("temperature_K").back();
    const double T14 = g14.run.series.column("temperature_K").back();
    const std::string tag = std::to_string(rc.validate_n_max) + " -> " + std::to_string(n_hi);
    out.checks.push_back(below("cutoff shift: temperature", std::max(sh["temperature"],
                                                                     std::abs(T14 - T10) / T10),
                               rc.convergence_limit, tag + ", uu trajectory and gate input"));
    out.checks.push_back(below("cutoff shift: <a_cm>", sh["phase"], rc.convergence_limit,
                               tag + ", uu trajectory"));
    out.checks.push_back(below("cutoff shift: process fidelity", std::abs(F14 - F10) / F10,
                               rc.convergence_limit,
                               tag + ", 1-F: " + format_double(1 - F10) + " -> " +
                                   format_double(1 - F14)));
  }

  // Step halving dt -> dt / 2.
  {
    SolverOptions h = opts;
    h.steps_per_period *= 2;
    const PropagationResult uuh = uu_run(ph, all, tg, h);
    std::map<std::string, double> sh;
    trajectory_shifts(uu10.series, uuh.series, sh);
    const double lim = 10.0 * opts.rtol;
    const std::string tag = "T_R/" + std::to_string(opts.steps_per_period) + " vs T_R/" +
                            std::to_string(h.steps_per_period);
    out.checks.push_back(below("step halving: temperature", sh["temperature"], lim, tag));
    out.checks.push_back(below("step halving: <a_cm>", sh["phase"], lim, tag));
  }

  {
    const int n = rc.magnus_n_max;
    out.checks.push_back(at_least("Magnus fidelity at t_gate", magnus_fidelity(ch, tg, n), 1 - 1e-8,
                                  "n_max = " + std::to_string(n)));
    out.checks.push_back(at_least("Magnus fidelity at 2 t_gate", magnus_fidelity(ch, 2 * tg, n),
                                  1 - 1e-8, "n_max = " + std::to_string(n)));
  }

  {
    // A closed-form comparison, so run at the oracle cutoff: the displaced
    // |1> component leaks ~3e-5 out of n_cm = 10. Within a spin eigenstate the
    // modes factorise, so <a_cm> does not depend on the wb cutoff.
    const int n = rc.magnus_n_max;
    const Physics loop = ph.with_layout(HilbertLayout::make(n, 2));
    const PropagationResult r = uu_run(loop, {false, true, false}, tg, opts);
    double d = 0.0;
    const double dl = ch.cm().detuning;
    for (std::size_t k = 0; k < r.series.size(); ++k) {
      const double t = r.series.times[k];
      const cplx rot(r.series.column("phase_re")[k], r.series.column("phase_im")[k]);
      const cplx orc = phi(1, 0, t, ch) + phi(3, 0, t, ch);
      d = std::max(d, std::abs(std::exp(cplx(0.0, -dl * t)) * rot - orc));
    }
    out.checks.push_back(
        below("closed phase-space loop vs closed form", d, 1e-6,
              "uu, interaction picture, n_cm = " + std::to_string(n) + ", n_wb = 2"));
  }

  {
    const double ground = units::hbar * (ch.cm().omega + ch.wb().omega) / (4.0 * units::k_B);
    const Mat g = kron(thermal_mix(1.0, 0.0, rc.n_cm), thermal_mix(1.0, 0.0, rc.n_wb));
    out.checks.push_back(within("ground-state temperature",
                                motional_temperature(g, ch, ph.layout), 20.45e-6, 0.02,
                                "two-mode vacuum, K; exact value " + format_double(ground)));
    out.checks.push_back(within("atom velocity", atom_velocity(ch.cm().omega, rc.species.atom_mass),
                                0.24, 0.02, "sqrt(2 hbar omega_cm / m), m/s"));
    const double cs = sound_speed(1e20, 5.0 * units::bohr, rc.species.atom_mass);
    out.checks.push_back({"sound speed (context)", cs, 0.005, "~", true,
                          "n0 = 1e14 cm^-3, a_bb = 5 a0, m/s; reported only"});
  }

  {
    // Weak coupling: the calibrated (b, c) with C4 scaled by 1e-3.
    const SpeciesParams weak = rc.species.with_C4_scaled(1e-3);
    double worst = 0.0;
    for (double a : {1.0, -1.3}) {
      const PotentialParams p = calibrate_potential(a * rc.species.R_star, rc.calibration, rc.species);
      const ScatteringResult r = scattering_length(p, weak);
      worst = std::max(worst, std::abs(r.a / r.born_estimate - 1.0));
    }
    out.checks.push_back(at_most("Born limit vs radial solver", worst, 0.01,
                               "C4 x 1e-3 on the a = R* and -1.3 R* potentials"));
  }
  return out;
}

}  // namespace iongate::cli
