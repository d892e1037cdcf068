#pragma once

// SI constants (CODATA 2018) and the species table.
//
// Internal integration uses hbar = 1 with time in units of 1/omega_cm; the
// conversion happens in evolve and nowhere else.

#include <numbers>

namespace iongate::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double hbar = 1.054571817e-34;       // J s
inline constexpr double k_B = 1.380649e-23;           // J/K
inline constexpr double amu = 1.66053906660e-27;      // kg
inline constexpr double e_charge = 1.602176634e-19;   // C
inline constexpr double epsilon0 = 8.8541878128e-12;  // F/m
inline constexpr double bohr = 5.29177210903e-11;     // m

// Atomic masses (AME 2016) and the static dipole polarizability of Li in
// atomic units; lithium isotopes share the electronic polarizability.
inline constexpr double mass_yb174 = 173.938866 * amu;
inline constexpr double mass_li7 = 7.0160034366 * amu;
inline constexpr double mass_li6 = 6.0151228874 * amu;
inline constexpr double polarizability_li_au = 164.112;

// Atomic-unit polarizability to SI (C m^2 / V).
constexpr double polarizability_si(double alpha_au) {
  return alpha_au * 4.0 * pi * epsilon0 * bohr * bohr * bohr;
}

}  // namespace iongate::units
