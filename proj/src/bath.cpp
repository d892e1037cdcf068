#include "iongate/bath.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include "iongate/errors.hpp"
#include "iongate/units.hpp"

namespace iongate {

namespace {

constexpr int kStepsPerSegment = 400;
constexpr double kResonanceLimit = 1e8;  // |a| / R* beyond which matching is meaningless

// Dimensionless well: u'' = W(x) u with x = r / R*.
struct Well {
  double beta, gamma;
  double operator()(double x) const {
    const double x2 = x * x;
    const double s = beta * beta + x2;
    return -(x2 - gamma * gamma) / ((x2 + gamma * gamma) * s * s);
  }
};

struct TailFit {
  double a;       // in R*
  double spread;  // over the matching window, in R*
  int nodes;
};

// Solution of the exact -1/x^4 zero-energy equation: u = x [A sin(1/x) + B cos(1/x)].
void tail_coefficients(double x, double u, double up, double& A, double& B) {
  const double s = std::sin(1.0 / x), c = std::cos(1.0 / x);
  const double m00 = x * s, m01 = x * c;
  const double m10 = s - c / x, m11 = c + s / x;
  const double det = m00 * m11 - m01 * m10;
  A = (u * m11 - m01 * up) / det;
  B = (m00 * up - m10 * u) / det;
}

TailFit integrate_zero_energy(const Well& w, int steps_per_segment) {
  const double x_match = std::max(50.0, 40.0 * std::max(w.beta, w.gamma));
  const double x_window = 0.6 * x_match;
  double seg = std::min(w.beta, w.gamma);

  double x = 0.0, u = 0.0, up = 1.0;
  int nodes = 0;
  double amin = std::numeric_limits<double>::infinity();
  double amax = -amin;
  double a_last = 0.0, B_last = 0.0;
  bool any_window = false;

  auto deriv = [&](double xx, double uu, double vv, double& du, double& dv) {
    du = vv;
    dv = w(xx) * uu;
  };

  double seg_start = 0.0;
  while (seg_start < x_match) {
    const double seg_end = std::min(seg_start + seg, x_match);
    const double h = (seg_end - seg_start) / steps_per_segment;
    for (int k = 0; k < steps_per_segment; ++k) {
      double k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v;
      deriv(x, u, up, k1u, k1v);
      deriv(x + 0.5 * h, u + 0.5 * h * k1u, up + 0.5 * h * k1v, k2u, k2v);
      deriv(x + 0.5 * h, u + 0.5 * h * k2u, up + 0.5 * h * k2v, k3u, k3v);
      deriv(x + h, u + h * k3u, up + h * k3v, k4u, k4v);
      const double un = u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
      up += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
      if ((un > 0.0) != (u > 0.0) && u != 0.0) ++nodes;
      u = un;
      x = seg_start + (k + 1) * h;
      if (x >= x_window) {
        double A, B;
        tail_coefficients(x, u, up, A, B);
        const double a = -A / B;
        amin = std::min(amin, a);
        amax = std::max(amax, a);
        a_last = a;
        B_last = B;
        any_window = true;
      }
    }
    // Each later segment doubles the covered span.
    seg_start = seg_end;
    seg = seg_start;
  }
  if (!any_window) throw IntegrationError("scattering_length: matching window not reached");

  // A node of the tail beyond x_match: u(x_match) and u(inf) ~ B x differ in sign.
  if ((u > 0.0) != (B_last > 0.0)) ++nodes;

  return {a_last, amax - amin, nodes};
}

double born_dimensionless(double Q, double beta, double gamma) {
  const double k = (std::pow(beta, 4) - std::pow(gamma, 4)) / (4.0 * beta * gamma * gamma);
  const double num = std::exp(-gamma * Q) * std::expm1(-(beta - gamma) * Q) +
                     k * Q * std::exp(-beta * Q);
  const double d = beta * beta - gamma * gamma;
  return gamma * gamma * units::pi / (d * d * Q) * num;
}

std::string family_name(CalibrationFamily f) {
  return f == CalibrationFamily::vary_c ? "vary-c" : "vary-b";
}

PotentialParams make_pot(const CalibrationOptions& opt, double p, const SpeciesParams& sp) {
  PotentialParams pot;
  if (opt.family == CalibrationFamily::vary_c) {
    pot.b = opt.fixed_over_Rstar * sp.R_star;
    pot.c = p * sp.R_star;
  } else {
    pot.b = p * sp.R_star;
    pot.c = opt.fixed_over_Rstar * sp.R_star;
  }
  return pot;
}

struct ScanPoint {
  double p;
  double a;  // in R*
  int nodes;
  bool ok;
};

std::vector<ScanPoint> scan(const CalibrationOptions& opt, const SpeciesParams& sp) {
  if (!(opt.scan_lo_over_Rstar > 0.0) || !(opt.scan_hi_over_Rstar > opt.scan_lo_over_Rstar) ||
      opt.scan_points < 2 || !(opt.fixed_over_Rstar > 0.0)) {
    throw ConfigError("calibration scan range must satisfy 0 < lo < hi, points >= 2, fixed > 0");
  }
  std::vector<ScanPoint> pts;
  pts.reserve(opt.scan_points);
  const double llo = std::log(opt.scan_lo_over_Rstar), lhi = std::log(opt.scan_hi_over_Rstar);
  for (int k = 0; k < opt.scan_points; ++k) {
    const double p = std::exp(llo + (lhi - llo) * k / (opt.scan_points - 1));
    if (std::abs(p - opt.fixed_over_Rstar) < 1e-6 * opt.fixed_over_Rstar) continue;
    ScanPoint sp_k{p, 0.0, 0, false};
    try {
      const ScatteringResult r = scattering_length(make_pot(opt, p, sp), sp);
      sp_k.a = r.a / sp.R_star;
      sp_k.nodes = r.bound_states;
      sp_k.ok = true;
    } catch (const ResonanceError&) {
    }
    pts.push_back(sp_k);
  }
  return pts;
}

}  // namespace

SpeciesParams SpeciesParams::make(std::string atom_name, double atom_mass, double ion_mass,
                                  double polarizability_au, bool fermion) {
  if (!(atom_mass > 0.0) || !(ion_mass > 0.0) || !(polarizability_au > 0.0)) {
    throw ConfigError("species: masses and polarizability must be positive");
  }
  SpeciesParams s;
  s.atom_name = std::move(atom_name);
  s.atom_mass = atom_mass;
  s.ion_mass = ion_mass;
  s.fermion = fermion;
  s.reduced_mass = atom_mass * ion_mass / (atom_mass + ion_mass);
  s.polarizability = units::polarizability_si(polarizability_au);
  const double k = 4.0 * units::pi * units::epsilon0;
  s.C4 = s.polarizability * units::e_charge * units::e_charge / (2.0 * k * k);
  s.R_star = std::sqrt(2.0 * s.reduced_mass * s.C4) / units::hbar;
  s.E_star = units::hbar * units::hbar / (2.0 * s.reduced_mass * s.R_star * s.R_star);
  return s;
}

SpeciesParams SpeciesParams::with_C4_scaled(double factor) const {
  SpeciesParams s = *this;
  s.C4 *= factor;
  s.polarizability *= factor;
  s.R_star = std::sqrt(2.0 * s.reduced_mass * s.C4) / units::hbar;
  s.E_star = units::hbar * units::hbar / (2.0 * s.reduced_mass * s.R_star * s.R_star);
  return s;
}

SpeciesParams yb174_li7() {
  return SpeciesParams::make("Li7", units::mass_li7, units::mass_yb174,
                             units::polarizability_li_au, false);
}

SpeciesParams yb174_li6() {
  return SpeciesParams::make("Li6", units::mass_li6, units::mass_yb174,
                             units::polarizability_li_au, true);
}

void PotentialParams::validate() const {
  if (!(b > 0.0) || !(c > 0.0)) throw ConfigError("potential: b and c must be positive");
  if (std::abs(b - c) < 1e-6 * b) {
    throw ConfigError("potential: b = c is degenerate for the Born amplitude");
  }
}

BathParams BathParams::make(const SpeciesParams& species, const PotentialParams& pot, double n0,
                            double T, double mu_B) {
  if (!(n0 >= 0.0)) throw ConfigError("bath: density must be non-negative");
  if (!(T >= 0.0)) throw ConfigError("bath: temperature must be non-negative");
  BathParams b;
  b.species = species;
  b.potential = pot;
  b.n0 = n0;
  b.T = T;
  b.mu_B = mu_B;
  b.Gamma = 2.0 * units::pi * species.atom_mass * units::hbar * n0 /
            (3.0 * species.reduced_mass * species.reduced_mass);
  return b;
}

double regularized_potential(double r, const PotentialParams& pot, const SpeciesParams& sp) {
  if (r < 0.0) throw DomainError("regularized_potential: r must be >= 0");
  const double r2 = r * r, b2 = pot.b * pot.b, c2 = pot.c * pot.c;
  return -sp.C4 * (r2 - c2) / ((r2 + c2) * (b2 + r2) * (b2 + r2));
}

double born_amplitude(double q, const PotentialParams& pot, const SpeciesParams& sp) {
  if (!(q > 0.0)) throw DomainError("born_amplitude: q must be > 0 (use born_amplitude_q0)");
  pot.validate();
  return sp.R_star * born_dimensionless(q * sp.R_star, pot.b / sp.R_star, pot.c / sp.R_star);
}

double born_amplitude_q0(const PotentialParams& pot, const SpeciesParams& sp) {
  pot.validate();
  const double bc = pot.b + pot.c;
  return units::pi * sp.R_star * sp.R_star / (4.0 * pot.b) * (1.0 - 2.0 * pot.c * pot.c / (bc * bc));
}

ScatteringResult scattering_length(const PotentialParams& pot, const SpeciesParams& sp) {
  if (!(pot.b > 0.0) || !(pot.c > 0.0)) throw ConfigError("potential: b and c must be positive");
  if (sp.C4 == 0.0) return {};  // free particle
  const Well w{pot.b / sp.R_star, pot.c / sp.R_star};
  const TailFit coarse = integrate_zero_energy(w, kStepsPerSegment);
  const TailFit fine = integrate_zero_energy(w, 2 * kStepsPerSegment);
  if (!std::isfinite(fine.a) || std::abs(fine.a) > kResonanceLimit) {
    throw ResonanceError("scattering_length: zero-energy resonance (|a| > 1e8 R*)", pot.b, pot.c);
  }
  ScatteringResult r;
  r.a = fine.a * sp.R_star;
  r.bound_states = fine.nodes;
  r.richardson_shift = std::abs(fine.a - coarse.a) * sp.R_star;
  r.match_spread = fine.spread * sp.R_star;
  r.born_estimate = std::abs(pot.b - pot.c) >= 1e-6 * pot.b ? -born_amplitude_q0(pot, sp) : 0.0;
  return r;
}

std::vector<CalibrationBranch> scan_branches(const CalibrationOptions& opt,
                                             const SpeciesParams& sp) {
  const std::vector<ScanPoint> pts = scan(opt, sp);
  std::vector<CalibrationBranch> out;
  std::size_t i = 0;
  while (i < pts.size()) {
    if (!pts[i].ok) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < pts.size() && pts[j + 1].ok && pts[j + 1].nodes == pts[i].nodes) ++j;
    CalibrationBranch br;
    br.bound_states = pts[i].nodes;
    br.p_lo = pts[i].p;
    br.p_hi = pts[j].p;
    br.a_lo = pts[i].a;
    br.a_hi = pts[j].a;
    int sign = 0;
    for (std::size_t k = i; k < j; ++k) {
      const double d = pts[k + 1].a - pts[k].a;
      const int sk = d > 0 ? 1 : (d < 0 ? -1 : 0);
      if (sign == 0) sign = sk;
      if (sk != 0 && sk != sign) br.monotone = false;
    }
    out.push_back(br);
    i = j + 1;
  }
  return out;
}

PotentialParams calibrate_potential(double a_target, const CalibrationOptions& opt,
                                    const SpeciesParams& sp) {
  const double target = a_target / sp.R_star;
  const std::vector<ScanPoint> pts = scan(opt, sp);

  struct Candidate {
    double p;
    double a;
    int nodes;
  };
  std::vector<Candidate> found;

  auto a_of = [&](double p) {
    return scattering_length(make_pot(opt, p, sp), sp).a / sp.R_star - target;
  };

  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const ScanPoint& lo = pts[k];
    const ScanPoint& hi = pts[k + 1];
    if (!lo.ok || !hi.ok || lo.nodes != hi.nodes || lo.nodes > opt.max_bound_states) continue;
    const double flo = lo.a - target, fhi = hi.a - target;
    if (flo == 0.0) {
      found.push_back({lo.p, lo.a, lo.nodes});
      continue;
    }
    if ((flo > 0.0) == (fhi > 0.0)) continue;
    try {
      std::uintmax_t iters = 200;
      const double tol_p = 1e-14;
      auto tol = [&](double x0, double x1) {
        return std::abs(x1 - x0) <= tol_p * std::max(std::abs(x0), std::abs(x1));
      };
      const auto br = boost::math::tools::toms748_solve(a_of, lo.p, hi.p, flo, fhi, tol, iters);
      const double p = 0.5 * (br.first + br.second);
      const ScatteringResult r = scattering_length(make_pot(opt, p, sp), sp);
      if (r.bound_states != lo.nodes) continue;
      if (std::abs(r.a / sp.R_star - target) > std::max(opt.tolerance_over_Rstar, 1e-9)) continue;
      found.push_back({p, r.a / sp.R_star, r.bound_states});
    } catch (const ResonanceError&) {
    }
  }

  if (found.empty()) {
    std::ostringstream msg;
    msg << "calibrate_potential: no root for a = " << target << " R* in family "
        << family_name(opt.family) << " (fixed " << opt.fixed_over_Rstar << " R*); branches:";
    for (const CalibrationBranch& b : scan_branches(opt, sp)) {
      msg << " [" << b.bound_states << " bound, p " << b.p_lo << ".." << b.p_hi << ", a "
          << b.a_lo << ".." << b.a_hi << "]";
    }
    throw CalibrationError(msg.str());
  }

  const auto best = std::min_element(found.begin(), found.end(), [](const auto& x, const auto& y) {
    if (x.nodes != y.nodes) return x.nodes < y.nodes;
    return x.p < y.p;
  });
  PotentialParams pot = make_pot(opt, best->p, sp);
  pot.a_ai = best->a * sp.R_star;
  pot.bound_state_count = best->nodes;
  pot.validate();
  return pot;
}

double bose_occupation(double q, double T, double mu_B, double m) {
  const double E = units::hbar * units::hbar * q * q / (2.0 * m);
  if (!(E - mu_B > 0.0)) {
    throw DomainError("bose_occupation: hbar^2 q^2 / 2m must exceed the chemical potential");
  }
  if (T <= 0.0) return 0.0;
  const double x = (E - mu_B) / (units::k_B * T);
  if (x > 700.0) return 0.0;
  return 1.0 / std::expm1(x);
}

DissipatorCoeffs dissipator_coeffs(const BathParams& bath, const ChainParams& chain) {
  const SpeciesParams& sp = bath.species;
  const double m = sp.atom_mass;
  auto q_of = [&](double omega) { return std::sqrt(2.0 * m * omega / units::hbar); };

  DissipatorCoeffs d;
  d.Gamma = bath.Gamma;
  d.q_R = q_of(chain.omega_R);
  d.n_q_R = bose_occupation(d.q_R, bath.T, bath.mu_B, m);
  d.f_R = born_amplitude(d.q_R, bath.potential, sp);
  d.f2q3_R = d.f_R * d.f_R * d.q_R * d.q_R * d.q_R;

  for (const ModeSpec& mode : chain.modes) {
    ModeCoeffs c;
    c.q = q_of(mode.omega);
    c.n_q = bose_occupation(c.q, bath.T, bath.mu_B, m);
    c.f = born_amplitude(c.q, bath.potential, sp);
    c.f2q3 = c.f * c.f * c.q * c.q * c.q;
    const double len = mode.b[1] * mode.mode_length;
    c.alpha_prefactor = len * c.f2q3;
    c.h = len * (c.f2q3 - d.f2q3_R);
    c.h_nq = len * (c.n_q * c.f2q3 - d.n_q_R * d.f2q3_R);
    d.modes.push_back(c);
  }
  return d;
}

double atom_velocity(double omega, double m) { return std::sqrt(2.0 * units::hbar * omega / m); }

double sound_speed(double n0, double a_bb, double m) {
  const double g = 4.0 * units::pi * units::hbar * units::hbar * a_bb / m;
  return std::sqrt(g * n0 / m);
}

}  // namespace iongate
