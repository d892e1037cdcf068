#include "iongate/chain.hpp"

#include <cmath>
#include <string>

#include "iongate/errors.hpp"
#include "iongate/units.hpp"

namespace iongate {

namespace {

constexpr double kEtaCm = 0.1;

double mode_length(double M, double omega) { return std::sqrt(units::hbar / (2.0 * M * omega)); }

int spin_factor(int j) { return j == 1 ? kSpin1 : kSpin3; }

int mode_factor(int mu) { return mu == 0 ? kCm : kWb; }

}  // namespace

std::string to_string(ModeName m) { return m == ModeName::cm ? "cm" : "wb"; }

double ChainParams::force() const {
  const double eta = lamb_dicke(0);
  return eta > 0.0 ? cm().drive * raman_k / eta : 0.0;
}

ChainParams default_modes(double omega_cm, double delta_cm, double Omega_cm, double M) {
  if (!(omega_cm > 0.0) || !(delta_cm > 0.0) || !(Omega_cm > 0.0) || !(M > 0.0)) {
    throw ConfigError("default_modes: omega_cm, delta_cm, Omega_cm and M must be positive");
  }
  ChainParams p;
  p.ion_mass = M;
  p.omega_R = omega_cm + delta_cm;

  const double s3 = 1.0 / std::sqrt(3.0);
  const double s6 = 1.0 / std::sqrt(6.0);

  ModeSpec cm;
  cm.name = ModeName::cm;
  cm.b = {s3, s3, s3};
  cm.eigenvalue = 1.0;
  cm.omega = omega_cm;
  cm.detuning = p.omega_R - cm.omega;
  cm.drive = Omega_cm;
  cm.mode_length = mode_length(M, cm.omega);

  ModeSpec wb;
  wb.name = ModeName::wb;
  wb.b = {s6, -2.0 * s6, s6};
  wb.eigenvalue = 29.0 / 5.0;
  wb.omega = omega_cm * std::sqrt(wb.eigenvalue);
  wb.detuning = p.omega_R - wb.omega;
  wb.drive = Omega_cm * std::sqrt(omega_cm / wb.omega);
  wb.mode_length = mode_length(M, wb.omega);

  p.modes = {cm, wb};
  p.raman_k = kEtaCm / cm.mode_length;
  p.t_gate = 2.0 * units::pi / cm.detuning;
  return p;
}

ChainParams cm_only(ChainParams p) {
  for (std::size_t mu = 1; mu < p.modes.size(); ++mu) p.modes[mu].drive = 0.0;
  return p;
}

Operator build_H_chain(const ChainParams& params, const HilbertLayout& layout) {
  const int n = layout.total_dim();
  Mat h = Mat::Zero(n, n);
  for (int mu = 0; mu < 2; ++mu) {
    const ModeSpec& m = params.modes.at(mu);
    const Ladder lad = fock_ladder(layout.fock_dims[mu]);
    const Mat num = lad.creator * lad.annihilator;
    const Mat quad = lad.annihilator + lad.creator;
    h -= m.detuning * embed(num, mode_factor(mu), layout).matrix;
    const Mat x = embed(quad, mode_factor(mu), layout).matrix;
    for (int j : {1, 3}) {
      const double c = -0.5 * m.drive * m.b[j - 1];
      if (c == 0.0) continue;
      h += c * x * embed(sigma_z(), spin_factor(j), layout).matrix;
    }
  }
  return Operator::hermitian(std::move(h), layout);
}

cplx phi(int j, int mu, double t, const ChainParams& params) {
  const ModeSpec& m = params.modes.at(mu);
  if (m.detuning == 0.0) throw DomainError("phi: resonant drive (delta = 0) has no closed form");
  const cplx one_minus = 1.0 - std::exp(cplx(0.0, -m.detuning * t));
  return (m.drive / (2.0 * m.detuning)) * m.b[j - 1] * one_minus;
}

double spin_phase_J(int i, int j, double t, const ChainParams& params) {
  double acc = 0.0;
  for (const ModeSpec& m : params.modes) {
    if (m.detuning == 0.0) throw DomainError("spin_phase_J: resonant drive (delta = 0)");
    const double dt = m.detuning * t;
    acc += m.drive * m.drive * m.b[i - 1] * m.b[j - 1] / (m.detuning * m.detuning) *
           (dt - std::sin(dt));
  }
  return 0.25 * acc;
}

Operator analytic_propagator(double t, const ChainParams& params, const HilbertLayout& layout) {
  const int dm = layout.motional_dim();
  Mat u = Mat::Zero(layout.total_dim(), layout.total_dim());

  std::array<Ladder, 2> lad{fock_ladder(layout.fock_dims[0]), fock_ladder(layout.fock_dims[1])};
  std::array<std::array<cplx, 2>, 2> ph{};  // [j-index][mu]
  for (int mu = 0; mu < 2; ++mu) {
    ph[0][mu] = phi(1, mu, t, params);
    ph[1][mu] = phi(3, mu, t, params);
  }
  const double j11 = spin_phase_J(1, 1, t, params);
  const double j13 = spin_phase_J(1, 3, t, params);
  const double j33 = spin_phase_J(3, 3, t, params);

  // U is diagonal in the spin sectors; within a sector the modes factorise.
  for (int s = 0; s < 4; ++s) {
    const int s1 = spin_value(s, 1), s3 = spin_value(s, 3);
    std::array<Mat, 2> disp;
    for (int mu = 0; mu < 2; ++mu) {
      const cplx alpha = ph[0][mu] * double(s1) + ph[1][mu] * double(s3);
      const Mat gen = alpha * lad[mu].creator - std::conj(alpha) * lad[mu].annihilator;
      disp[mu] = expm(gen);
    }
    const double phase = -(j11 * s1 * s1 + 2.0 * j13 * s1 * s3 + j33 * s3 * s3);
    u.block(s * dm, s * dm, dm, dm) = std::exp(cplx(0.0, phase)) * kron(disp[0], disp[1]);
  }
  return Operator{std::move(u), layout};
}

Operator rotating_frame_propagator(double t, const ChainParams& params,
                                   const HilbertLayout& layout) {
  Operator u = analytic_propagator(t, params, layout);
  const int nw = layout.fock_dims[1];
  const int dm = layout.motional_dim();
  for (int row = 0; row < layout.total_dim(); ++row) {
    const int i = row % dm;
    const int p = i / nw, q = i % nw;
    const double ang = (params.modes[0].detuning * p + params.modes[1].detuning * q) * t;
    u.matrix.row(row) *= std::exp(cplx(0.0, ang));
  }
  return u;
}

Operator x_R_operator(double t, const ChainParams& params, const HilbertLayout& layout) {
  const int n = layout.total_dim();
  Mat x = Mat::Zero(n, n);
  const cplx e = std::exp(cplx(0.0, -params.omega_R * t));
  for (int mu = 0; mu < 2; ++mu) {
    const ModeSpec& m = params.modes.at(mu);
    const Ladder lad = fock_ladder(layout.fock_dims[mu]);
    const Mat f = e * lad.annihilator + std::conj(e) * lad.creator;
    x += m.b[1] * m.mode_length * embed(f, mode_factor(mu), layout).matrix;
  }
  return Operator{std::move(x), layout};
}

Operator x_R_shifted(double t, double tau, const ChainParams& params,
                     const HilbertLayout& layout) {
  const int n = layout.total_dim();
  Mat x = Mat::Zero(n, n);
  const double wt = params.omega_R * t;
  for (int mu = 0; mu < 2; ++mu) {
    const ModeSpec& m = params.modes.at(mu);
    const Ladder lad = fock_ladder(layout.fock_dims[mu]);
    const double dtau = m.detuning * tau;
    const cplx ea = std::exp(cplx(0.0, -dtau - wt));
    const Mat f = ea * lad.annihilator + std::conj(ea) * lad.creator;
    const double len = m.b[1] * m.mode_length;
    x += len * embed(f, mode_factor(mu), layout).matrix;

    if (m.drive == 0.0) continue;
    if (m.detuning == 0.0) throw DomainError("x_R_shifted: resonant drive (delta = 0)");
    // Spin-dependent shift: 2 cos(delta tau + omega_R t) - 2 cos(omega_R t).
    const double bracket = 2.0 * std::cos(dtau + wt) - 2.0 * std::cos(wt);
    const double pref = len * m.drive / (2.0 * m.detuning) * bracket;
    for (int j : {1, 3}) {
      x += pref * m.b[j - 1] * embed(sigma_z(), spin_factor(j), layout).matrix;
    }
  }
  return Operator{std::move(x), layout};
}

}  // namespace iongate
