#pragma once

// Physical constants and lab-unit conversions.
//
// Everything inside the library is SI with angular frequencies (rad/s).
// Lab units (MHz for Omega/2pi, us, um, uK, T) only appear at the config
// and CLI boundary and go through the helpers below.

#include <limits>
#include <numbers>

namespace rydberg {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// CODATA 2018 values. Not configurable.
struct PhysicalConstants {
    static constexpr double hbar = 1.054571817e-34;    // J s
    static constexpr double k_B = 1.380649e-23;        // J/K
    static constexpr double mu_B = 9.2740100783e-24;   // J/T
    static constexpr double amu = 1.66053906660e-27;   // kg
};

namespace units {

// Frequency in MHz (cycles) <-> angular frequency in rad/s. The factor is
// exactly 2pi x 10^6.
inline constexpr double kRadPerSecPerMHz = kTwoPi * 1e6;
inline constexpr double kRadPerSecPerGHz = kTwoPi * 1e9;

constexpr double mhz_to_rad(double f_mhz) { return f_mhz * kRadPerSecPerMHz; }
constexpr double rad_to_mhz(double w) { return w / kRadPerSecPerMHz; }
constexpr double ghz_to_rad(double f_ghz) { return f_ghz * kRadPerSecPerGHz; }
constexpr double rad_to_ghz(double w) { return w / kRadPerSecPerGHz; }

constexpr double us_to_s(double t_us) { return t_us * 1e-6; }
constexpr double s_to_us(double t) { return t * 1e6; }
constexpr double ns_to_s(double t_ns) { return t_ns * 1e-9; }
constexpr double s_to_ns(double t) { return t * 1e9; }
constexpr double um_to_m(double x_um) { return x_um * 1e-6; }
constexpr double m_to_um(double x) { return x * 1e6; }
constexpr double nm_to_m(double x_nm) { return x_nm * 1e-9; }
constexpr double m_to_nm(double x) { return x * 1e9; }
constexpr double uk_to_k(double t_uk) { return t_uk * 1e-6; }
constexpr double k_to_uk(double t) { return t * 1e6; }

}  // namespace units
}  // namespace rydberg
