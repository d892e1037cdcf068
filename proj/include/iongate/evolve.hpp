#pragma once

// Master-equation integration in the frame rotating with omega_R.
//
// Every operator in the equation is diagonal in the spin basis, so rho
// splits into 16 motional blocks B_{s s'} that evolve independently. Only
// blocks with s <= s' are stored; B_{s' s} = B_{s s'}^dag for Hermitian
// states. Within a block, time is tau = omega_cm t, hbar = 1, and the
// central-ion position is measured in units of l_cm. The dense
// functions heating_rhs / bec_rhs / master_rhs evaluate the same equation
// literally in SI (1/s) on the full matrix and serve as a cross-check.

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "iongate/bath.hpp"
#include "iongate/chain.hpp"
#include "iongate/observables.hpp"
#include "iongate/opalg.hpp"

namespace iongate {

struct HeatingParams {
  double gamma_Nbar = 0.0;  // 1/s
  bool Nbar_large = true;   // use gamma (Nbar + 1) ~ gamma Nbar
  double Nbar = 0.0;        // only read when !Nbar_large

  double rate_down() const;  // gamma (Nbar + 1), 1/s
  double rate_up() const;    // gamma Nbar, 1/s
  void validate() const;
};

struct RhsContext {
  ChainParams chain;
  HilbertLayout layout;
  std::optional<DissipatorCoeffs> coeffs;  // empty: gas off
  HeatingParams heating;

  // Dimensionless scalars (rates / omega_cm).
  double omega_unit = 0.0;  // omega_cm, rad/s
  double omega_R = 0.0;
  std::array<double, 2> delta{};
  std::array<std::array<double, 2>, 4> g{};  // -1/2 Omega (b1 s1 + b3 s3) per spin block
  std::array<std::array<double, 2>, 4> P{};  // Omega / 2 delta (b1 s1 + b3 s3)
  double G = 0.0;                            // Gamma l_cm / omega_cm
  std::array<double, 2> X{};                 // b_{2,mu} l_mu / l_cm
  std::array<double, 2> alpha{};             // b_{2,mu} l_mu |f|^2 q^3
  std::array<double, 2> n_q{};
  std::array<double, 2> h{};
  std::array<double, 2> h_nq{};
  double gamma_down = 0.0, gamma_up = 0.0;

  // Motional grid, row-major D x D with index p * n_wb + q.
  int nc = 0, nw = 0, D = 0;
  std::vector<double> sqrt_p, sqrt_p1, sqrt_q, sqrt_q1;  // length D, zero where invalid
  std::vector<double> wd_re, wd_im;                      // length D*D, diagonal part

  static RhsContext make(const ChainParams& chain, const HilbertLayout& layout,
                         const std::optional<DissipatorCoeffs>& coeffs,
                         const HeatingParams& heating);
  bool gas() const { return coeffs.has_value() && G != 0.0; }
};

struct SpinBlock {
  int s = 0, sp = 0;
};

struct BlockState {
  HilbertLayout layout;
  std::vector<SpinBlock> blocks;  // s <= sp
  std::vector<double> data;       // per block: D*D real parts, then D*D imaginary parts

  int D() const { return layout.motional_dim(); }
  std::size_t block_size() const { return 2 * std::size_t(D()) * D(); }
  double* re(std::size_t k) { return data.data() + k * block_size(); }
  double* im(std::size_t k) { return re(k) + std::size_t(D()) * D(); }
  const double* re(std::size_t k) const { return data.data() + k * block_size(); }
  const double* im(std::size_t k) const { return re(k) + std::size_t(D()) * D(); }

  // Requires a Hermitian full density matrix (checked to 1e-12).
  static BlockState from_dense(const Mat& rho, const HilbertLayout& layout);
  // spin (x) rho_m with Hermitian 4x4 spin and D x D rho_m.
  static BlockState product(const Mat& spin, const Mat& rho_m, const HilbertLayout& layout);

  Mat block(int s, int sp) const;  // zero if absent
  Mat to_dense() const;
  Mat motional() const;      // sum_s B_ss
  Mat spin_reduced() const;  // 4x4, entries Tr B_{s s'}
  cplx trace() const;
  double purity() const;
  double hermiticity_defect() const;
};

struct SolverOptions {
  enum class Method { rk4, dopri5 };
  Method method = Method::rk4;
  int steps_per_period = 128;  // fixed step dt = (2 pi / omega_R) / steps_per_period
  double rtol = 1e-8, atol = 1e-10;
  double sample_every = 0.0;  // s; 0 selects one Raman period
  long max_steps = 200'000'000;
  int jobs = 1;
  int min_eig_stride = 0;  // compute min eigenvalue every N samples; 0 disables

  // Throws ConfigError when the fixed step is coarser than a Raman period / 40.
  void validate() const;
};

struct PropagationResult {
  BlockState final_state;
  TimeSeries series;
  double max_trace_drift = 0.0;
  double max_hermiticity_defect = 0.0;
  double min_eigenvalue = 0.0;  // over sampled points where computed
  long steps = 0;
  long rejected_steps = 0;
  double dt = 0.0;  // s; last step size for the adaptive method
};

using Observer = std::function<void(double t, const BlockState&)>;

// Block right-hand side dB/dtau for spin pair (s, sp).
void block_rhs(const RhsContext& ctx, int s, int sp, double tau, const double* in_re,
               const double* in_im, double* out_re, double* out_im, double* work_re,
               double* work_im);

// Dense literal equation in SI units (1/s). `t` in seconds.
Mat heating_rhs(const Mat& rho, double t, const HeatingParams& heating,
                const HilbertLayout& layout);
Mat bec_rhs(const Mat& rho, double t, const RhsContext& ctx);
Mat master_rhs(const Mat& rho, double t, const RhsContext& ctx);

// Advances from t = 0 to t_final (s). Samples the state every
// opts.sample_every and at t_final; the observer sees each sample.
// Throws IntegrationError on non-finite state, step underflow or budget.
PropagationResult propagate(const BlockState& init, double t_final, const RhsContext& ctx,
                            const SolverOptions& opts, const Observer& observer = {});
PropagationResult propagate(const QuantumState& rho0, double t_final, const RhsContext& ctx,
                            const SolverOptions& opts, const Observer& observer = {});

struct BlockChannel {
  ChannelTable table;
  Mat lambda;  // 4x4, Gamma(X) = X o lambda (element-wise)
  PropagationResult run;
};

// One propagation of the all-ones spin matrix (x) rho_m: every block starts
// at rho_m, and the spin channel is the Schur multiplier lambda_{s s'}.
BlockChannel propagate_channel_blocks(const Mat& rho_m, double t_final, const RhsContext& ctx,
                                      const SolverOptions& opts);

// Independent propagation of each basis element (x) rho_m followed by the
// partial trace over motion.
ChannelTable propagate_channel(const std::array<Mat, 16>& basis_ops, const Mat& rho_m,
                               double t_final, const RhsContext& ctx, const SolverOptions& opts);

}  // namespace iongate
