#pragma once

// Quantities measured on the chain state: temperature, phase-space point,
// the ideal gate channel, process fidelity and exponential cooling fits.

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "iongate/chain.hpp"
#include "iongate/opalg.hpp"

namespace iongate {

struct TimeSeries {
  std::vector<double> times;  // s
  std::vector<std::pair<std::string, std::vector<double>>> columns;
  std::vector<std::string> units;  // one per column

  std::size_t size() const { return times.size(); }
  void add_column(const std::string& name, const std::string& unit);
  std::vector<double>& column(const std::string& name);
  const std::vector<double>& column(const std::string& name) const;
  bool has_column(const std::string& name) const;
  // Equal lengths and strictly increasing times.
  bool valid() const;
};

struct FitResult {
  double A = 0.0;      // K
  double kappa = 0.0;  // 1/s
  double B = 0.0;      // K
  double sigma_A = 0.0, sigma_kappa = 0.0, sigma_B = 0.0;
  double residual_rms = 0.0;  // K
  std::pair<double, double> window{0.0, 0.0};
  int samples = 0;
};

// T = (1/k_B)(1/2M) sum_mu <p_mu^2> on the full density matrix.
double chain_temperature(const Mat& rho, const ChainParams& params, const HilbertLayout& layout);
// Same on the motional reduced matrix (cm (x) wb). mode = -1 sums both modes.
double motional_temperature(const Mat& rho_m, const ChainParams& params,
                            const HilbertLayout& layout, int mode = -1);
double mode_occupation(const Mat& rho_m, const HilbertLayout& layout, int mode);

// <a_mu> in the frame rho is stored in.
cplx phase_space_point(const Mat& rho, const HilbertLayout& layout, int mode);
cplx motional_phase_space_point(const Mat& rho_m, const HilbertLayout& layout, int mode);

// formula: Lambda(rho) = U^dag rho U with U = diag(1, -i, -i, 1).
// printed: the element-wise conjugate of that channel, U rho U^dag.
enum class GateBranch { formula, printed };
std::string to_string(GateBranch b);

Mat ideal_gate_unitary(GateBranch branch);  // V with Lambda(rho) = V rho V^dag
Mat ideal_gate_apply(const Mat& rho_spin, GateBranch branch);

// Branch matching the closed-system spin phase exp(-i sum J s_i s_j) at
// t_gate (up to a global phase). Returns the distance to the chosen branch.
GateBranch realized_gate_branch(const ChainParams& params, double* distance = nullptr);

// sigma^a (x) sigma^b / 2, index 4 a + b with a, b in (I, X, Y, Z).
const std::array<Mat, 16>& pauli_basis();

struct ChannelTable {
  std::string basis = "pauli-product/2";
  std::array<Mat, 16> outputs;
};

ChannelTable ideal_channel(GateBranch branch);
ChannelTable identity_channel();
ChannelTable depolarizing_channel();

// F = (1/d^2) sum_i Tr{Lambda(rho_i^dag) Gamma(rho_i)} with d = 4.
// Throws std::invalid_argument on a basis mismatch.
double process_fidelity(const ChannelTable& sim, const ChannelTable& ideal);

// Least squares A exp(-kappa t) + B over samples with t in [t0, t1].
// Throws FitError for fewer than 50 samples, degenerate amplitude or a
// non-convergent solve.
FitResult fit_cooling_rate(const TimeSeries& series, const std::string& column,
                           std::pair<double, double> window);

// Slope of ln(y - B) against t over the window, as an independent estimate
// of kappa. Samples with y - B below `floor_fraction` of the initial excess
// are dropped.
double log_slope_rate(const TimeSeries& series, const std::string& column,
                      std::pair<double, double> window, double B, double floor_fraction = 0.05);

}  // namespace iongate
