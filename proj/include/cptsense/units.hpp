#pragma once

#include <numbers>

namespace cptsense {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Config files and CLI flags quote rates and detunings as ordinary
/// frequencies nu = omega/2pi in MHz.  Everything past the config boundary is
/// an angular frequency in rad/s; these two helpers are the only conversion
/// points.
constexpr double mhz_to_rad_s(double nu_mhz) { return two_pi * 1e6 * nu_mhz; }
constexpr double rad_s_to_mhz(double omega) { return omega / (two_pi * 1e6); }

}  // namespace cptsense
