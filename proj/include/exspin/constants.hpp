#pragma once

#include <numbers>

namespace exspin {

// Working units: energy in meV, time in ns, field in tesla, frequency in GHz.
// CODATA 2018 values converted to those units.
namespace constants {

inline constexpr double hbar = 6.582119569e-4;      // meV ns
inline constexpr double planck_h = 4.135667696e-3;  // meV ns
inline constexpr double mu_bohr = 5.7883818060e-2;  // meV / T
inline constexpr double two_pi = 2.0 * std::numbers::pi;

}  // namespace constants

inline constexpr double ps_to_ns(double ps) { return ps * 1e-3; }
inline constexpr double ns_to_ps(double ns) { return ns * 1e3; }

/// Energy (meV) of a photon/precession at `ghz`.
inline constexpr double ghz_to_mev(double ghz) { return constants::planck_h * ghz; }
inline constexpr double mev_to_ghz(double mev) { return mev / constants::planck_h; }

}  // namespace exspin
