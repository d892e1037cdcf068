#include <doctest.h>

#include <random>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "iongate/chain.hpp"
#include "iongate/errors.hpp"

using namespace iongate;
using iongate::testing::table_chain;

TEST_CASE("table modes") {
  const ChainParams p = table_chain();
  const double tp = 2.0 * units::pi;
  CHECK(p.t_gate == doctest::Approx(0.25e-3).epsilon(1e-14));
  CHECK(p.wb().omega / tp == doctest::Approx(1204.1594578792296e3).epsilon(1e-13));
  CHECK(p.cm().mode_length == doctest::Approx(7.3808e-9).epsilon(1e-3));
  CHECK(p.wb().drive == doctest::Approx(p.cm().drive * std::sqrt(p.cm().omega / p.wb().omega)));
  CHECK(p.omega_R == doctest::Approx(tp * 504e3));
  for (const ModeSpec& m : p.modes) CHECK(m.detuning == p.omega_R - m.omega);
  CHECK(p.lamb_dicke(0) == doctest::Approx(0.1));
  // Orthonormal eigenvectors.
  double dot = 0, ncm = 0, nwb = 0;
  for (int j = 0; j < 3; ++j) {
    dot += p.cm().b[j] * p.wb().b[j];
    ncm += p.cm().b[j] * p.cm().b[j];
    nwb += p.wb().b[j] * p.wb().b[j];
  }
  CHECK(std::abs(dot) < 1e-15);
  CHECK(ncm == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(nwb == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(default_modes(-1.0, 1.0, 1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(default_modes(1.0, 0.0, 1.0, 1.0), ConfigError);
}

TEST_CASE("chain Hamiltonian") {
  const ChainParams p = table_chain();
  const HilbertLayout l = HilbertLayout::make(4, 3);
  const Mat h = build_H_chain(p, l).matrix;
  CHECK((h - h.adjoint()).norm() == 0.0);
  CHECK(std::abs(h(0, 0)) == 0.0);
  for (int f : {kSpin1, kSpin3}) {
    const Mat z = embed(sigma_z(), f, l).matrix;
    CHECK((h * z - z * h).norm() == 0.0);
  }
  ChainParams off = p;
  for (auto& m : off.modes) m.drive = 0.0;
  const Mat h0 = build_H_chain(off, l).matrix;
  for (int i = 0; i < l.total_dim(); ++i) {
    const int pp = (i % 12) / 3, q = i % 3;
    CHECK(h0(i, i).real() == doctest::Approx(-(p.cm().detuning * pp + p.wb().detuning * q)));
  }
  CHECK((h0 - Mat(h0.diagonal().asDiagonal())).norm() == 0.0);

  // On spin sector s the cm coupling is -(Omega/2)(b1 s1 + b3 s3)(a + a^dag).
  const Ladder lc = fock_ladder(4);
  const Mat xa = embed(lc.annihilator + lc.creator, kCm, l).matrix;
  for (int s = 0; s < 4; ++s) {
    const double F = 0.5 * p.cm().drive * (p.cm().b[0] * spin_value(s, 1) + p.cm().b[2] * spin_value(s, 3));
    const int o = s * 12;
    // Element <s, p=1, q=0 | H | s, p=0, q=0>.
    CHECK(h(o + 3, o).real() == doctest::Approx(-F * xa(o + 3, o).real()));
  }
}

TEST_CASE("displacements and spin phase") {
  const ChainParams p = table_chain();
  const ChainParams c = cm_only(p);
  for (int j : {1, 3}) {
    CHECK(std::abs(phi(j, 0, p.t_gate, p)) < 1e-15);
    CHECK(std::abs(phi(j, 0, 3 * p.t_gate, p)) < 1e-14);
    CHECK(std::abs(phi(j, 1, p.t_gate, p)) > 1e-4);
    // Half period: (Omega / 2 delta) b 2 = (sqrt3/4)(1/sqrt3) 2 = 1/2.
    CHECK(phi(j, 0, 0.5 * p.t_gate, p).real() == doctest::Approx(0.5).epsilon(1e-13));
  }
  CHECK(std::abs(phi(1, 0, 0.3e-3, p) - phi(3, 0, 0.3e-3, p)) == 0.0);
  CHECK(spin_phase_J(1, 3, c.t_gate, c) == doctest::Approx(units::pi / 8).epsilon(1e-13));
  CHECK(spin_phase_J(1, 3, 0.0, p) == 0.0);

  // J13 against quadrature of the Magnus double integral
  //   J = (1/4) sum Omega^2 b b int_0^t ds int_0^s du sin(delta (s - u)).
  const double t = 0.7 * p.t_gate;
  double ref = 0.0;
  for (const ModeSpec& m : p.modes) {
    auto inner = [&](double s) { return (1.0 - std::cos(m.detuning * s)) / m.detuning; };
    const double q = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(inner, 0.0, t, 15, 1e-14);
    ref += 0.25 * m.drive * m.drive * m.b[0] * m.b[2] * q;
  }
  CHECK(spin_phase_J(1, 3, t, p) == doctest::Approx(ref).epsilon(1e-10));

  ChainParams bad = p;
  bad.modes[0].detuning = 0.0;
  CHECK_THROWS_AS(phi(1, 0, 1e-4, bad), DomainError);
}

TEST_CASE("analytic propagator") {
  const ChainParams p = table_chain();
  const HilbertLayout l = HilbertLayout::make(10, 10);
  const Mat u0 = analytic_propagator(0.0, p, l).matrix;
  CHECK((u0 - Mat::Identity(l.total_dim(), l.total_dim())).norm() < 1e-14);
  // Unitary on the low-Fock subspace, away from truncation.
  const Mat u = analytic_propagator(0.5 * p.t_gate, p, l).matrix;
  const Mat g = u.adjoint() * u;
  CHECK(std::abs(g(0, 0) - 1.0) < 1e-10);
  for (double t : {0.13, 0.5, 1.0, 1.6, 2.0}) {
    CHECK(oracle::magnus_vacuum_fidelity(p, t * p.t_gate, 12) > 1.0 - 1e-8);
  }
}

TEST_CASE("position operator") {
  const ChainParams p = table_chain();
  const HilbertLayout l = HilbertLayout::make(4, 4);
  const Mat x0 = x_R_operator(0.0, p, l).matrix;
  Mat ref = Mat::Zero(l.total_dim(), l.total_dim());
  for (int mu = 0; mu < 2; ++mu) {
    const Ladder lad = fock_ladder(4);
    ref += p.modes[mu].b[1] * p.modes[mu].mode_length *
           embed(lad.annihilator + lad.creator, mu == 0 ? kCm : kWb, l).matrix;
  }
  CHECK(relative_frobenius(x0, ref) < 1e-15);
  const Mat x = x_R_operator(0.1 / p.omega_R, p, l).matrix;
  CHECK((x - x.adjoint()).norm() < 1e-15 * x.norm());
  const Mat x2 = x0 * x0;
  const double vac = std::pow(p.cm().b[1] * p.cm().mode_length, 2) + std::pow(p.wb().b[1] * p.wb().mode_length, 2);
  CHECK(x2(0, 0).real() == doctest::Approx(vac).epsilon(1e-14));
}

TEST_CASE("shifted position operator against dense conjugation") {
  const ChainParams p = table_chain();
  const HilbertLayout l = HilbertLayout::make(22, 8);
  CHECK(relative_frobenius(x_R_shifted(3e-6, 0.0, p, l).matrix, x_R_operator(3e-6, p, l).matrix) < 1e-15);

  const Mat h = build_H_chain(p, l).matrix;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ut(0.0, 2.0 * p.t_gate);
  // Compare on the low-Fock corner where truncation of the dense evolution is irrelevant.
  std::vector<int> keep;
  for (int s = 0; s < 4; ++s)
    for (int pp = 0; pp < 5; ++pp)
      for (int q = 0; q < 4; ++q) keep.push_back((s * 22 + pp) * 8 + q);
  for (int k = 0; k < 3; ++k) {
    const double t = ut(rng), tau = ut(rng);
    const Mat u = expm(cplx(0.0, -tau) * h);
    const Mat ref = u * x_R_operator(t, p, l).matrix * u.adjoint();
    const Mat got = x_R_shifted(t, tau, p, l).matrix;
    Mat a(keep.size(), keep.size()), b(keep.size(), keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i)
      for (std::size_t j = 0; j < keep.size(); ++j) {
        a(i, j) = ref(keep[i], keep[j]);
        b(i, j) = got(keep[i], keep[j]);
      }
    CHECK((a - b).norm() < 1e-9 * b.norm());
  }

  ChainParams off = p;
  for (auto& m : off.modes) m.drive = 0.0;
  const HilbertLayout ls = HilbertLayout::make(3, 3);
  const Mat xs = x_R_shifted(1e-6, 2e-6, off, ls).matrix;
  Mat free = Mat::Zero(36, 36);
  for (int mu = 0; mu < 2; ++mu) {
    const Ladder lad = fock_ladder(3);
    const cplx e = std::exp(cplx(0.0, -off.modes[mu].detuning * 2e-6 - off.omega_R * 1e-6));
    free += off.modes[mu].b[1] * off.modes[mu].mode_length *
            embed(e * lad.annihilator + std::conj(e) * lad.creator, mu == 0 ? kCm : kWb, ls).matrix;
  }
  CHECK(relative_frobenius(xs, free) < 1e-14);
}
