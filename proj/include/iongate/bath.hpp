#pragma once

// Atom-ion scattering and the coefficient pipeline of the condensate
// dissipator.
//
// Lengths are SI metres at the interface. The radial solver and the Born
// amplitude work internally in units of R* = sqrt(2 mu C4 / hbar^2).

#include <string>
#include <vector>

#include "iongate/chain.hpp"

namespace iongate {

struct SpeciesParams {
  std::string atom_name;
  double atom_mass = 0.0;       // kg
  double ion_mass = 0.0;        // kg
  double reduced_mass = 0.0;    // kg
  double polarizability = 0.0;  // C m^2 / V
  double C4 = 0.0;              // J m^4
  double R_star = 0.0;          // m
  double E_star = 0.0;          // J
  bool fermion = false;

  // C4 = alpha e^2 / (2 (4 pi eps0)^2) for alpha in C m^2/V.
  static SpeciesParams make(std::string atom_name, double atom_mass, double ion_mass,
                            double polarizability_au, bool fermion);
  // Same masses with C4 multiplied by `factor`; R* and E* follow.
  SpeciesParams with_C4_scaled(double factor) const;
};

SpeciesParams yb174_li7();
SpeciesParams yb174_li6();

struct PotentialParams {
  double b = 0.0;             // m
  double c = 0.0;             // m
  double a_ai = 0.0;          // m
  int bound_state_count = 0;  // diagnostic

  // b, c > 0 and |b - c| >= 1e-6 b. Throws ConfigError.
  void validate() const;
};

struct BathParams {
  SpeciesParams species;
  PotentialParams potential;
  double n0 = 0.0;    // 1/m^3
  double T = 0.0;     // K
  double mu_B = 0.0;  // J
  double Gamma = 0.0;  // 1/(m s)

  // Gamma = 2 pi m hbar n0 / (3 mu^2).
  static BathParams make(const SpeciesParams& species, const PotentialParams& pot, double n0,
                         double T, double mu_B);
};

// V(r) = -C4 (r^2 - c^2) / ((r^2 + c^2)(b^2 + r^2)^2), J.
double regularized_potential(double r, const PotentialParams& pot, const SpeciesParams& sp);

// First-order Born amplitude f(q) in metres. Requires q > 0.
double born_amplitude(double q, const PotentialParams& pot, const SpeciesParams& sp);
// q -> 0 limit: (pi R*^2 / 4b) (1 - 2 c^2 / (b + c)^2).
double born_amplitude_q0(const PotentialParams& pot, const SpeciesParams& sp);

struct ScatteringResult {
  double a = 0.0;                // m, zero-energy s-wave scattering length
  double born_estimate = 0.0;    // m, -f(0)
  int bound_states = 0;          // nodes of the zero-energy solution
  double richardson_shift = 0.0; // m, |a(h) - a(h/2)|
  double match_spread = 0.0;     // m, spread of a over the matching window
};

// Outward integration of u'' = (2 mu / hbar^2) V u from u(0) = 0, matched to
// the exact -C4/r^4 zero-energy tail x [A sin(1/x) + B cos(1/x)].
// Throws ResonanceError when |a| exceeds 1e8 R*.
ScatteringResult scattering_length(const PotentialParams& pot, const SpeciesParams& sp);

enum class CalibrationFamily { vary_c, vary_b };

struct CalibrationOptions {
  CalibrationFamily family = CalibrationFamily::vary_c;
  double fixed_over_Rstar = 0.4;  // the parameter held fixed, in R*
  double scan_lo_over_Rstar = 0.01;
  double scan_hi_over_Rstar = 50.0;
  int scan_points = 240;
  int max_bound_states = 2;
  double tolerance_over_Rstar = 1e-10;
};

struct CalibrationBranch {
  int bound_states = 0;
  double p_lo = 0.0, p_hi = 0.0;  // varied parameter range, in R*
  double a_lo = 0.0, a_hi = 0.0;  // scattering length at the ends, in R*
  bool monotone = true;
};

std::vector<CalibrationBranch> scan_branches(const CalibrationOptions& opt,
                                             const SpeciesParams& sp);

// Root-finds the varied parameter so that scattering_length = a_target.
// Among all roots with at most max_bound_states, the one on the branch with
// the fewest bound states wins. Throws CalibrationError listing the
// scanned branches when there is no root.
PotentialParams calibrate_potential(double a_target, const CalibrationOptions& opt,
                                    const SpeciesParams& sp);

// [exp((hbar^2 q^2 / 2m - mu_B) / k_B T) - 1]^-1. Zero at T = 0. Throws
// DomainError if the exponent is not positive.
double bose_occupation(double q, double T, double mu_B, double m);

struct ModeCoeffs {
  double q = 0.0;          // 1/m, sqrt(2 m omega_mu / hbar)
  double n_q = 0.0;
  double f = 0.0;          // m, Born amplitude at q
  double f2q3 = 0.0;       // 1/m, |f|^2 q^3
  // b_{2,mu} l_mu |f|^2 q^3 and the two h combinations are dimensionless.
  double alpha_prefactor = 0.0;
  double h = 0.0;
  double h_nq = 0.0;
};

struct DissipatorCoeffs {
  std::vector<ModeCoeffs> modes;
  double q_R = 0.0;
  double n_q_R = 0.0;
  double f_R = 0.0;
  double f2q3_R = 0.0;
  double Gamma = 0.0;  // 1/(m s)
};

DissipatorCoeffs dissipator_coeffs(const BathParams& bath, const ChainParams& chain);

// sqrt(2 hbar omega / m), m/s.
double atom_velocity(double omega, double m);

// Bogoliubov sound speed sqrt(g n0 / m) with g = 4 pi hbar^2 a_bb / m.
double sound_speed(double n0, double a_bb, double m);

}  // namespace iongate
