#include <doctest.h>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "iongate/bath.hpp"
#include "iongate/errors.hpp"

using namespace iongate;
using iongate::testing::table_chain;

namespace {
PotentialParams pot_in_rstar(double b, double c, const SpeciesParams& sp) {
  PotentialParams p;
  p.b = b * sp.R_star;
  p.c = c * sp.R_star;
  return p;
}
}  // namespace

TEST_CASE("species constants") {
  const SpeciesParams sp = yb174_li7();
  CHECK(sp.reduced_mass == doctest::Approx(sp.atom_mass * sp.ion_mass / (sp.atom_mass + sp.ion_mass)));
  CHECK(sp.R_star == doctest::Approx(std::sqrt(2.0 * sp.reduced_mass * sp.C4) / units::hbar));
  CHECK(sp.E_star == doctest::Approx(units::hbar * units::hbar / (2.0 * sp.reduced_mass * sp.R_star * sp.R_star)));
  CHECK(sp.R_star == doctest::Approx(75.16e-9).epsilon(1e-3));
  CHECK_FALSE(sp.fermion);
  CHECK(yb174_li6().fermion);
}

TEST_CASE("regularized potential") {
  const SpeciesParams sp = yb174_li7();
  const PotentialParams p = pot_in_rstar(0.4, 0.1, sp);
  CHECK(regularized_potential(p.c, p, sp) == 0.0);
  CHECK(regularized_potential(0.0, p, sp) == doctest::Approx(sp.C4 / std::pow(p.b, 4)).epsilon(1e-14));
  const double r = 100.0 * sp.R_star;
  CHECK(regularized_potential(r, p, sp) / (-sp.C4 / std::pow(r, 4)) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK_THROWS_AS(pot_in_rstar(0.4, 0.4, sp).validate(), ConfigError);
  CHECK_THROWS_AS(pot_in_rstar(-0.4, 0.1, sp).validate(), ConfigError);
}

TEST_CASE("Born amplitude") {
  const SpeciesParams sp = yb174_li7();
  const PotentialParams p = pot_in_rstar(0.4, 0.1, sp);
  const double q = 1e-6 / sp.R_star;
  CHECK(born_amplitude(q, p, sp) == doctest::Approx(born_amplitude_q0(p, sp)).epsilon(1e-9));
  CHECK(std::abs(born_amplitude(400.0 / sp.R_star, p, sp)) < 1e-12 * std::abs(born_amplitude_q0(p, sp)));
  CHECK_THROWS_AS(born_amplitude(0.0, p, sp), DomainError);
  for (double Q : {0.05, 0.7, 3.0}) {
    const double ref = oracle::born_quadrature(Q, 0.4, 0.1);
    CHECK(born_amplitude(Q / sp.R_star, p, sp) / sp.R_star == doctest::Approx(ref).epsilon(1e-8));
  }
  // No sign change across the mode / beatnote momenta at a = R*.
  const BathParams bath = iongate::testing::default_bath();
  const ChainParams ch = table_chain();
  const double q_lo = std::sqrt(2.0 * sp.atom_mass * ch.cm().omega / units::hbar);
  const double q_hi = std::sqrt(2.0 * sp.atom_mass * ch.wb().omega / units::hbar);
  const double f0 = born_amplitude(q_lo, bath.potential, sp);
  for (int k = 0; k <= 200; ++k) {
    const double qq = q_lo + (q_hi - q_lo) * k / 200.0;
    CHECK(born_amplitude(qq, bath.potential, sp) * f0 > 0.0);
  }
}

TEST_CASE("scattering length") {
  const SpeciesParams sp = yb174_li7();
  CHECK(scattering_length(pot_in_rstar(0.4, 0.1, sp), sp.with_C4_scaled(0.0)).a == 0.0);

  // Weak coupling: the same (b, c) in metres with C4 scaled by 1e-3.
  const SpeciesParams weak = sp.with_C4_scaled(1e-3);
  for (auto [b, c] : {std::pair{0.4, 0.1}, std::pair{0.4, 1.0}, std::pair{1.0, 0.3}}) {
    const ScatteringResult r = scattering_length(pot_in_rstar(b, c, sp), weak);
    CHECK(r.a == doctest::Approx(r.born_estimate).epsilon(0.01));
    CHECK(r.bound_states == 0);
  }
  const ScatteringResult r = scattering_length(pot_in_rstar(0.4, 0.45, sp), sp);
  CHECK(r.richardson_shift < 1e-8 * sp.R_star);
  // Residual -1/r^4 corrections at the matching radius are O((b/r)^2).
  CHECK(r.match_spread < 1e-4 * sp.R_star);
}

TEST_CASE("calibration") {
  const SpeciesParams sp = yb174_li7();
  const CalibrationOptions opt;
  for (double target : {1.0, -1.3, -2.5, 2.5, 0.0}) {
    const PotentialParams p = calibrate_potential(target * sp.R_star, opt, sp);
    CHECK(p.b == doctest::Approx(0.4 * sp.R_star));
    CHECK(std::abs(scattering_length(p, sp).a / sp.R_star - target) < 1e-6);
    CHECK(p.bound_state_count <= opt.max_bound_states);
  }
  // -1.3 R* and +1 R* sit on different branches; the negative side has no bound state.
  CHECK(calibrate_potential(-1.3 * sp.R_star, opt, sp).bound_state_count == 0);
  const auto branches = scan_branches(opt, sp);
  REQUIRE(branches.size() >= 2);
  for (const auto& b : branches) CHECK(b.p_hi > b.p_lo);
  CalibrationOptions narrow = opt;
  narrow.scan_lo_over_Rstar = 1.0;
  narrow.scan_hi_over_Rstar = 1.1;
  narrow.scan_points = 8;
  CHECK_THROWS_AS(calibrate_potential(40.0 * sp.R_star, narrow, sp), CalibrationError);
}

TEST_CASE("Bose occupation") {
  const SpeciesParams sp = yb174_li7();
  const ChainParams ch = table_chain();
  const double q = std::sqrt(2.0 * sp.atom_mass * ch.cm().omega / units::hbar);
  CHECK(units::hbar * ch.cm().omega / (units::k_B * 200e-9) == doctest::Approx(120.0).epsilon(0.01));
  CHECK(bose_occupation(q, 200e-9, 0.0, sp.atom_mass) < 1e-50);
  CHECK(bose_occupation(q, 0.0, 0.0, sp.atom_mass) == 0.0);
  const double T = units::hbar * ch.cm().omega / (units::k_B * std::log(2.0));
  CHECK(bose_occupation(q, T, 0.0, sp.atom_mass) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bose_occupation(q, 2 * T, 0.0, sp.atom_mass) > bose_occupation(q, T, 0.0, sp.atom_mass));
  CHECK_THROWS_AS(bose_occupation(q, T, 2.0 * units::hbar * ch.cm().omega, sp.atom_mass), DomainError);
}

TEST_CASE("dissipator coefficients") {
  const ChainParams ch = table_chain();
  const BathParams bath = iongate::testing::default_bath();
  const DissipatorCoeffs d = dissipator_coeffs(bath, ch);
  const double m = bath.species.atom_mass, mu = bath.species.reduced_mass;
  CHECK(d.Gamma == 2.0 * units::pi * m * units::hbar * bath.n0 / (3.0 * mu * mu));
  CHECK(d.q_R == std::sqrt(2.0 * m * ch.omega_R / units::hbar));
  REQUIRE(d.modes.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(d.modes[k].q == std::sqrt(2.0 * m * ch.modes[k].omega / units::hbar));
    CHECK(std::isfinite(d.modes[k].h));
    CHECK(std::abs(d.modes[k].h_nq) < 1e-40 * std::abs(d.modes[k].h));  // n_q ~ e^-120 at 200 nK
  }
  // Recomputation is bit-stable.
  const DissipatorCoeffs e = dissipator_coeffs(bath, ch);
  CHECK(e.modes[1].alpha_prefactor == d.modes[1].alpha_prefactor);
  // omega_mu = omega_R makes h vanish.
  ChainParams same = ch;
  same.modes[0].omega = ch.omega_R;
  CHECK(dissipator_coeffs(bath, same).modes[0].h == 0.0);
  // Warm gas populates h_nq.
  BathParams warm = bath;
  warm.T = 50e-6;
  CHECK(dissipator_coeffs(warm, ch).modes[0].h_nq != 0.0);

  CHECK(atom_velocity(ch.cm().omega, m) == doctest::Approx(0.24).epsilon(0.02));
  const double c_s = sound_speed(1e20, 5.0 * units::bohr, m);
  CHECK(c_s > 1e-3);
  CHECK(c_s < 2e-2);
}
