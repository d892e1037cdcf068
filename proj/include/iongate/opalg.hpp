#pragma once

// Dense operator algebra on spin1 (x) spin3 (x) fock_cm (x) fock_wb.
//
// The factor order is fixed. A basis index is
//     ((s1 * 2 + s3) * n_cm + p) * n_wb + q
// with spin index 0 = |up>, 1 = |down>, so sigma_z = diag(+1, -1).

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <vector>

namespace iongate {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

enum Factor : int { kSpin1 = 0, kSpin3 = 1, kCm = 2, kWb = 3 };
inline constexpr int kNumFactors = 4;

struct HilbertLayout {
  std::array<int, 2> spin_dims{2, 2};
  std::array<int, 2> fock_dims{10, 10};

  static HilbertLayout make(int n_cm, int n_wb);

  int factor_dim(int factor) const;
  int motional_dim() const { return fock_dims[0] * fock_dims[1]; }
  int total_dim() const { return 4 * motional_dim(); }
  bool operator==(const HilbertLayout&) const = default;
};

struct Operator {
  Mat matrix;
  HilbertLayout layout;

  // Both factories check the claimed property to 1e-12 (relative Frobenius)
  // and throw std::invalid_argument otherwise.
  static Operator hermitian(Mat m, const HilbertLayout& layout);
  static Operator unitary(Mat m, const HilbertLayout& layout);
};

struct QuantumState {
  Mat rho;
  HilbertLayout layout;
  double time = 0.0;  // s

  double trace_error() const;        // |Tr rho - 1|
  double hermiticity_defect() const;  // ||rho - rho^dag||_F
  double purity() const;
  double min_eigenvalue() const;
};

struct Ladder {
  Mat annihilator;
  Mat creator;
};

// a with sqrt(n) on the first superdiagonal. Throws ConfigError for n_max < 2.
Ladder fock_ladder(int n_max);

Mat sigma_z();
// Pauli matrix by index 0..3 = I, X, Y, Z.
Mat pauli(int index);

Mat kron(const Mat& a, const Mat& b);

// Kronecker embedding of a single-factor operator.
Operator embed(const Mat& factor_op, int position, const HilbertLayout& layout);

// Reduced density matrix on the kept factors (ascending factor order).
// Throws std::invalid_argument on empty or invalid `keep`.
Mat partial_trace(const Mat& rho, const HilbertLayout& layout, std::vector<int> keep);

// diag(c0, c1, 0, ...). Throws ConfigError unless c0, c1 in [0,1] and sum to 1.
Mat thermal_mix(double c0, double c1, int n_max);

// Dense matrix exponential (scaling and squaring Pade).
Mat expm(const Mat& a);

double relative_frobenius(const Mat& a, const Mat& b);

}  // namespace iongate
