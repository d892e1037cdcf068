#pragma once

// Shared parameter sets for the test programs.

#include <random>

#include "iongate/bath.hpp"
#include "iongate/chain.hpp"
#include "iongate/evolve.hpp"
#include "iongate/units.hpp"

namespace iongate::testing {

inline ChainParams table_chain() {
  const double tp = 2.0 * units::pi;
  return default_modes(tp * 500e3, tp * 4e3, tp * 2.0 * std::sqrt(3.0) * 1e3, units::mass_yb174);
}

inline BathParams default_bath(double a_over_Rstar = 1.0, double T = 200e-9) {
  const SpeciesParams sp = yb174_li7();
  const PotentialParams pot = calibrate_potential(a_over_Rstar * sp.R_star, {}, sp);
  return BathParams::make(sp, pot, 1e19, T, 0.0);
}

inline Mat random_density(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
  Mat rho = a * a.adjoint();
  return rho / rho.trace();
}

inline Mat random_hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
  return 0.5 * (a + a.adjoint());
}

}  // namespace iongate::testing
