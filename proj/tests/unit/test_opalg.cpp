#include <doctest.h>

#include <random>

#include "../support/fixtures.hpp"
#include "iongate/errors.hpp"
#include "iongate/opalg.hpp"

using namespace iongate;
using iongate::testing::random_density;

TEST_CASE("fock ladder") {
  const Ladder l2 = fock_ladder(2);
  CHECK(l2.annihilator(0, 1) == cplx(1.0));
  CHECK(l2.annihilator.cwiseAbs().sum() == 1.0);
  CHECK(fock_ladder(4).annihilator(2, 3) == cplx(std::sqrt(3.0)));
  CHECK_THROWS_AS(fock_ladder(1), ConfigError);

  const Ladder l = fock_ladder(16);
  const Mat c = l.annihilator * l.creator - l.creator * l.annihilator;
  // [a, a^dag] = 1 except on the top Fock level.
  CHECK((c.topLeftCorner(15, 15) - Mat::Identity(15, 15)).norm() < 1e-13);
  CHECK(std::abs(c(15, 15) - cplx(-15.0)) < 1e-12);
  const Mat n = l.creator * l.annihilator;
  for (int k = 0; k < 16; ++k) CHECK(std::abs(n(k, k) - cplx(k)) < 1e-13);
  CHECK((n - Mat(n.diagonal().asDiagonal())).norm() == 0.0);
}

TEST_CASE("embedding") {
  const HilbertLayout l = HilbertLayout::make(3, 4);
  CHECK(l.total_dim() == 48);
  const Mat z1 = embed(sigma_z(), kSpin1, l).matrix;
  CHECK(z1(0, 0) == cplx(1.0));  // |up up, 0, 0>
  CHECK((embed(Mat::Identity(3, 3), kCm, l).matrix - Mat::Identity(48, 48)).norm() == 0.0);
  const Mat a = embed(fock_ladder(3).annihilator, kCm, l).matrix;
  const Mat bd = embed(fock_ladder(4).creator, kWb, l).matrix;
  CHECK((a * bd - bd * a).norm() == 0.0);
  CHECK_THROWS(embed(Mat::Identity(2, 2), kCm, l));

  std::mt19937_64 rng(1);
  const HilbertLayout l3 = HilbertLayout::make(3, 3);
  const Mat A = Mat::Random(3, 3), B = Mat::Random(3, 3);
  CHECK((embed(A * B, kWb, l3).matrix - embed(A, kWb, l3).matrix * embed(B, kWb, l3).matrix).norm() < 1e-13);
}

TEST_CASE("partial trace") {
  const HilbertLayout l = HilbertLayout::make(3, 2);
  std::mt19937_64 rng(2);
  const Mat rs = random_density(4, rng);
  const Mat rm = random_density(6, rng);
  const Mat rho = kron(rs, rm);
  CHECK((partial_trace(rho, l, {kSpin1, kSpin3}) - rs).norm() < 1e-14);
  CHECK((partial_trace(rho, l, {kCm, kWb}) - rm).norm() < 1e-14);

  // Bell state on the spins: each qubit is maximally mixed.
  Mat bell = Mat::Zero(4, 4);
  bell(0, 0) = bell(0, 3) = bell(3, 0) = bell(3, 3) = 0.5;
  const Mat rb = kron(bell, kron(thermal_mix(1, 0, 3), thermal_mix(1, 0, 2)));
  CHECK((partial_trace(rb, l, {kSpin1}) - 0.5 * Mat::Identity(2, 2)).norm() < 1e-15);

  const Mat r = random_density(l.total_dim(), rng);
  CHECK(std::abs(partial_trace(r, l, {kCm}).trace() - 1.0) < 1e-12);
  const Mat A = Mat::Random(3, 3);
  const cplx lhs = (embed(A, kCm, l).matrix * r).trace();
  const cplx rhs = (A * partial_trace(r, l, {kCm})).trace();
  CHECK(std::abs(lhs - rhs) < 1e-12);
  CHECK_THROWS_AS(partial_trace(r, l, {}), std::invalid_argument);
  CHECK_THROWS_AS(partial_trace(r, l, {7}), std::invalid_argument);
}

TEST_CASE("thermal mix") {
  const Mat m = thermal_mix(0.9, 0.1, 5);
  CHECK(m(0, 0) == cplx(0.9));
  CHECK(m(1, 1) == cplx(0.1));
  CHECK(m.cwiseAbs().sum() == doctest::Approx(1.0));
  CHECK(thermal_mix(1.0, 0.0, 3)(0, 0) == cplx(1.0));
  CHECK_THROWS_AS(thermal_mix(0.8, 0.1, 5), ConfigError);
  CHECK_THROWS_AS(thermal_mix(1.2, -0.2, 5), ConfigError);
  // <n + 1/2> in units of hbar omega.
  const Ladder l = fock_ladder(5);
  const Mat h = l.creator * l.annihilator + 0.5 * Mat::Identity(5, 5);
  CHECK((h * m).trace().real() == doctest::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("operator factories and state diagnostics") {
  const HilbertLayout l = HilbertLayout::make(2, 2);
  Mat h = Mat::Zero(16, 16);
  h(0, 1) = cplx(0, 1);
  h(1, 0) = cplx(0, -1);
  CHECK_NOTHROW(Operator::hermitian(h, l));
  h(1, 0) = cplx(0, 1);
  CHECK_THROWS_AS(Operator::hermitian(h, l), std::invalid_argument);
  CHECK_NOTHROW(Operator::unitary(expm(cplx(0, 1) * embed(sigma_z(), kSpin1, l).matrix), l));
  CHECK_THROWS_AS(Operator::unitary(2.0 * Mat::Identity(16, 16), l), std::invalid_argument);
  CHECK_THROWS_AS(Operator::hermitian(Mat::Identity(4, 4), l), std::invalid_argument);

  std::mt19937_64 rng(3);
  const QuantumState q{random_density(16, rng), l, 0.0};
  CHECK(q.trace_error() < 1e-14);
  CHECK(q.hermiticity_defect() < 1e-14);
  CHECK(q.min_eigenvalue() > 0.0);
  CHECK(q.purity() < 1.0);
}

TEST_CASE("pauli and expm") {
  CHECK((pauli(1) * pauli(2) - cplx(0, 1) * pauli(3)).norm() < 1e-15);
  CHECK((expm(Mat::Zero(3, 3)) - Mat::Identity(3, 3)).norm() == 0.0);
  const Mat e = expm(cplx(0, M_PI / 2) * pauli(1));
  CHECK((e - cplx(0, 1) * pauli(1)).norm() < 1e-14);
}
