#pragma once

// Closed-system physics of the driven three-ion chain in the frame rotating
// with the Raman beatnote omega_R (rotating-wave approximation):
//
//   H/hbar = -sum_mu delta_mu n_mu
//            - 1/2 sum_{j=1,3} sum_mu Omega_mu b_{j,mu} (a_mu + a_mu^dag) sigma_j^z
//
// Modes are indexed 0 = centre of mass, 1 = wobbling. The stretching mode
// carries no drive on the qubit ions' net force and is omitted.

#include <array>
#include <string>
#include <vector>

#include "iongate/opalg.hpp"

namespace iongate {

enum class ModeName { cm, wb };

std::string to_string(ModeName m);

struct ModeSpec {
  ModeName name = ModeName::cm;
  std::array<double, 3> b{};   // amplitude vector over ions 1, 2, 3
  double eigenvalue = 1.0;     // structural eigenvalue (omega_mu / omega_cm)^2
  double omega = 0.0;          // rad/s
  double detuning = 0.0;       // rad/s, omega_R - omega
  double drive = 0.0;          // rad/s, Omega_mu
  double mode_length = 0.0;    // m, sqrt(hbar / (2 M omega))
};

struct ChainParams {
  double ion_mass = 0.0;  // kg
  double omega_R = 0.0;   // rad/s
  std::vector<ModeSpec> modes;
  double raman_k = 0.0;  // 1/m, reporting only
  double t_gate = 0.0;   // s, 2 pi / delta_cm

  const ModeSpec& cm() const { return modes.at(0); }
  const ModeSpec& wb() const { return modes.at(1); }
  double lamb_dicke(int mu) const { return raman_k * modes.at(mu).mode_length; }
  // Magnitude of the spin-dependent force implied by Omega_mu = F eta_mu / k_R.
  double force() const;
};

// Table values: omega_wb = omega_cm sqrt(29/5), Omega_wb = Omega_cm
// sqrt(omega_cm/omega_wb), omega_R = omega_cm + delta_cm.
// k_R is set so that eta_cm = 0.1. Throws ConfigError on non-positive input.
ChainParams default_modes(double omega_cm, double delta_cm, double Omega_cm, double M);

// Same chain with Omega_wb = 0 (centre-of-mass-only gate dynamics).
ChainParams cm_only(ChainParams p);

// Spin eigenvalue of ion j in {1, 3} for spin-block index s in 0..3.
inline int spin_value(int s, int j) { return j == 1 ? ((s >> 1) ? -1 : 1) : ((s & 1) ? -1 : 1); }

// H_chain / hbar in rad/s.
Operator build_H_chain(const ChainParams& params, const HilbertLayout& layout);

// phi_{j,mu}(t) = (Omega_mu / 2 delta_mu) b_{j,mu} (1 - exp(-i delta_mu t)).
// Throws DomainError for delta_mu == 0.
cplx phi(int j, int mu, double t, const ChainParams& params);

// J_{i,j}(t) = 1/4 sum_mu Omega_mu^2 b_{i,mu} b_{j,mu} / delta_mu^2 (delta_mu t - sin delta_mu t).
double spin_phase_J(int i, int j, double t, const ChainParams& params);

// Interaction-picture propagator (w.r.t. the phonon Hamiltonian)
// U_I(t) = U_sp(t) U_ss(t). Exact in the untruncated space; here each
// displacement is exponentiated in the truncated Fock space.
Operator analytic_propagator(double t, const ChainParams& params, const HilbertLayout& layout);

// Rotating-frame propagator exp(-i H_chain t) = exp(i sum delta n t) U_I(t).
Operator rotating_frame_propagator(double t, const ChainParams& params,
                                   const HilbertLayout& layout);

// x_R(t) = sum_mu b_{2,mu} l_mu (a_mu e^{-i omega_R t} + h.c.), metres.
Operator x_R_operator(double t, const ChainParams& params, const HilbertLayout& layout);

// exp(-i H tau) x_R(t) exp(i H tau) in closed form.
Operator x_R_shifted(double t, double tau, const ChainParams& params, const HilbertLayout& layout);

}  // namespace iongate
