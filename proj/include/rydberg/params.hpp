#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "rydberg/error.hpp"
#include "rydberg/units.hpp"

namespace rydberg {

/// Atomic species. Only 87Rb defaults are built in.
struct AtomSpecies {
    std::string name = "Rb87";
    double mass = 86.909180527 * PhysicalConstants::amu;  // kg
    double omega_hf = units::ghz_to_rad(6.834682610904);   // rad/s, may be +inf
    double ground_g_m = 0.0;  // g_g * m_fg; zero for the |f=2, m_f=0> clock state

    bool operator==(const AtomSpecies &) const = default;
};

/// Rydberg level |n l_j, m_j>.
struct RydbergLevel {
    int n = 0;
    int l = 0;
    double j = 0.5;
    double m_j = 0.5;
    double tau = 0.0;  // radiative lifetime, s; may be +inf
    double g_R = 2.0;  // Lande g_J

    double zeeman_product() const { return g_R * m_j; }

    bool operator==(const RydbergLevel &) const = default;
};

enum class BeamGeometry { co_propagating, counter_propagating };

/// Two-photon excitation lasers.
struct LaserExcitation {
    double rabi = 0.0;          // two-photon Omega, rad/s
    double rabi_single = 0.0;   // one-photon Omega_1, rad/s
    double gamma_p = 0.0;       // intermediate-state decay rate, 1/s
    double detuning = 0.0;      // intermediate-state detuning Delta, rad/s
    double lambda_1 = 0.0;      // m
    double lambda_2 = 0.0;      // m
    BeamGeometry geometry = BeamGeometry::co_propagating;

    double k_2nu() const;

    bool operator==(const LaserExcitation &) const = default;
};

struct Environment {
    double temperature = 0.0;         // K
    double sigma = 0.0;               // quasi-static field noise std dev, T
    std::optional<double> gap_time;   // s; unset means "use the minimum gap 2pi/Omega"
    double loss_probability = 0.0;    // per atom per stage
    int loss_stages = 1;

    bool operator==(const Environment &) const = default;
};

/// Lande g_J for a single valence electron with spin 1/2:
/// g = 1 + [j(j+1) + 3/4 - l(l+1)] / [2 j(j+1)].
inline double lande_g(int l, double j) {
    if (l < 0) {
        throw ValidationError("level.l", "orbital quantum number must be >= 0");
    }
    const bool upper = std::abs(j - (l + 0.5)) < 1e-12;
    const bool lower = l > 0 && std::abs(j - (l - 0.5)) < 1e-12;
    if (!upper && !lower) {
        throw ValidationError("level.j", "j must be l +/- 1/2 (l=" + std::to_string(l) +
                                             ", j=" + std::to_string(j) + ")");
    }
    const double jj = j * (j + 1.0);
    return 1.0 + (jj + 0.75 - l * (l + 1.0)) / (2.0 * jj);
}

/// Effective two-photon wavenumber |k_1 -/+ k_2| along the beam axis.
inline double two_photon_wavenumber(double lambda_1, double lambda_2, BeamGeometry geometry) {
    detail::require_positive(lambda_1, "laser.lambda_1_nm");
    detail::require_positive(lambda_2, "laser.lambda_2_nm");
    const double k1 = kTwoPi / lambda_1;
    const double k2 = kTwoPi / lambda_2;
    return geometry == BeamGeometry::co_propagating ? std::abs(k1 - k2) : k1 + k2;
}

inline double LaserExcitation::k_2nu() const {
    return two_photon_wavenumber(lambda_1, lambda_2, geometry);
}

/// Room-temperature lifetimes of Rb ns_1/2 states. Only these four levels are
/// tabulated; any other level needs an explicit lifetime.
inline std::optional<double> tabulated_lifetime(const std::string &species, int n, int l, double j) {
    if (species != "Rb87" || l != 0 || std::abs(j - 0.5) > 1e-12) {
        return std::nullopt;
    }
    switch (n) {
        case 75: return units::us_to_s(180.0);
        case 100: return units::us_to_s(340.0);
        case 125: return units::us_to_s(570.0);
        case 150: return units::us_to_s(860.0);
        default: return std::nullopt;
    }
}

inline const char *to_string(BeamGeometry g) {
    return g == BeamGeometry::co_propagating ? "co" : "counter";
}

}  // namespace rydberg
