#include "iongate/opalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "iongate/errors.hpp"

namespace iongate {

HilbertLayout HilbertLayout::make(int n_cm, int n_wb) {
  if (n_cm < 1 || n_wb < 1) {
    throw ConfigError("Fock cutoffs must be positive (got " + std::to_string(n_cm) + ", " +
                      std::to_string(n_wb) + ")");
  }
  HilbertLayout l;
  l.fock_dims = {n_cm, n_wb};
  return l;
}

int HilbertLayout::factor_dim(int factor) const {
  switch (factor) {
    case kSpin1:
      return spin_dims[0];
    case kSpin3:
      return spin_dims[1];
    case kCm:
      return fock_dims[0];
    case kWb:
      return fock_dims[1];
    default:
      throw std::invalid_argument("factor index out of range: " + std::to_string(factor));
  }
}

double relative_frobenius(const Mat& a, const Mat& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-300});
  return (a - b).norm() / scale;
}

Operator Operator::hermitian(Mat m, const HilbertLayout& layout) {
  if (m.rows() != layout.total_dim() || m.cols() != layout.total_dim()) {
    throw std::invalid_argument("operator dimension does not match layout");
  }
  if (relative_frobenius(m, m.adjoint()) > 1e-12) {
    throw std::invalid_argument("operator is not Hermitian");
  }
  return Operator{std::move(m), layout};
}

Operator Operator::unitary(Mat m, const HilbertLayout& layout) {
  if (m.rows() != layout.total_dim() || m.cols() != layout.total_dim()) {
    throw std::invalid_argument("operator dimension does not match layout");
  }
  const Mat id = Mat::Identity(m.rows(), m.cols());
  if (relative_frobenius(m.adjoint() * m, id) > 1e-12) {
    throw std::invalid_argument("operator is not unitary");
  }
  return Operator{std::move(m), layout};
}

double QuantumState::trace_error() const { return std::abs(rho.trace() - cplx(1.0, 0.0)); }

double QuantumState::hermiticity_defect() const { return (rho - rho.adjoint()).norm(); }

double QuantumState::purity() const { return (rho * rho).trace().real(); }

double QuantumState::min_eigenvalue() const {
  const Mat h = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Ladder fock_ladder(int n_max) {
  if (n_max < 2) throw ConfigError("Fock cutoff n_max must be >= 2, got " + std::to_string(n_max));
  Mat a = Mat::Zero(n_max, n_max);
  for (int n = 1; n < n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  Mat ad = a.adjoint();
  return {std::move(a), std::move(ad)};
}

Mat sigma_z() {
  Mat z = Mat::Zero(2, 2);
  z(0, 0) = 1.0;
  z(1, 1) = -1.0;
  return z;
}

Mat pauli(int index) {
  Mat p = Mat::Zero(2, 2);
  switch (index) {
    case 0:
      p(0, 0) = p(1, 1) = 1.0;
      break;
    case 1:
      p(0, 1) = p(1, 0) = 1.0;
      break;
    case 2:
      p(0, 1) = cplx(0.0, -1.0);
      p(1, 0) = cplx(0.0, 1.0);
      break;
    case 3:
      p = sigma_z();
      break;
    default:
      throw std::invalid_argument("Pauli index must be 0..3");
  }
  return p;
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Operator embed(const Mat& factor_op, int position, const HilbertLayout& layout) {
  const int d = layout.factor_dim(position);
  if (factor_op.rows() != d || factor_op.cols() != d) {
    throw std::invalid_argument("factor operator is " + std::to_string(factor_op.rows()) + "x" +
                                std::to_string(factor_op.cols()) + ", factor " +
                                std::to_string(position) + " has dimension " + std::to_string(d));
  }
  Mat out = Mat::Identity(1, 1);
  for (int f = 0; f < kNumFactors; ++f) {
    const int df = layout.factor_dim(f);
    out = kron(out, f == position ? factor_op : Mat::Identity(df, df));
  }
  return Operator{std::move(out), layout};
}

Mat partial_trace(const Mat& rho, const HilbertLayout& layout, std::vector<int> keep) {
  if (keep.empty()) throw std::invalid_argument("partial_trace: keep must be non-empty");
  std::sort(keep.begin(), keep.end());
  if (std::adjacent_find(keep.begin(), keep.end()) != keep.end()) {
    throw std::invalid_argument("partial_trace: duplicate factor index");
  }
  for (int f : keep) {
    if (f < 0 || f >= kNumFactors) {
      throw std::invalid_argument("partial_trace: invalid factor index " + std::to_string(f));
    }
  }
  if (rho.rows() != layout.total_dim() || rho.cols() != layout.total_dim()) {
    throw std::invalid_argument("partial_trace: matrix does not match layout");
  }

  std::array<int, kNumFactors> dims{};
  for (int f = 0; f < kNumFactors; ++f) dims[f] = layout.factor_dim(f);
  std::array<bool, kNumFactors> kept{};
  for (int f : keep) kept[f] = true;

  int dk = 1;
  for (int f = 0; f < kNumFactors; ++f)
    if (kept[f]) dk *= dims[f];

  // Decompose a full index into (kept index, traced index).
  const int n = layout.total_dim();
  std::vector<int> kidx(n), tidx(n);
  for (int i = 0; i < n; ++i) {
    int rem = i, k = 0, t = 0, kstride = 1, tstride = 1;
    for (int f = kNumFactors - 1; f >= 0; --f) {
      const int digit = rem % dims[f];
      rem /= dims[f];
      if (kept[f]) {
        k += digit * kstride;
        kstride *= dims[f];
      } else {
        t += digit * tstride;
        tstride *= dims[f];
      }
    }
    kidx[i] = k;
    tidx[i] = t;
  }

  Mat out = Mat::Zero(dk, dk);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (tidx[i] == tidx[j]) out(kidx[i], kidx[j]) += rho(i, j);
    }
  }
  return out;
}

Mat thermal_mix(double c0, double c1, int n_max) {
  if (!(c0 >= 0.0 && c0 <= 1.0 && c1 >= 0.0 && c1 <= 1.0) || std::abs(c0 + c1 - 1.0) > 1e-12) {
    throw ConfigError("thermal_mix: need c0, c1 in [0,1] with c0 + c1 = 1 (got " +
                      std::to_string(c0) + ", " + std::to_string(c1) + ")");
  }
  if (n_max < 2) throw ConfigError("thermal_mix: n_max must be >= 2");
  Mat m = Mat::Zero(n_max, n_max);
  m(0, 0) = c0;
  m(1, 1) = c1;
  return m;
}

Mat expm(const Mat& a) { return a.exp(); }

}  // namespace iongate
