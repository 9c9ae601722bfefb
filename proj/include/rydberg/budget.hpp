#pragma once

// Analytic error and coherence model of a blockade C_Z gate and the
// error budget assembled from it.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "rydberg/config.hpp"
#include "rydberg/error.hpp"
#include "rydberg/units.hpp"

namespace rydberg {

/// Coherence times use +inf as the "no dephasing" sentinel.
inline constexpr double kInfiniteT2 = kInfinity;

inline bool is_infinite(double t2) { return std::isinf(t2) && t2 > 0.0; }

// ---------------------------------------------------------------------------
// Intrinsic error
// ---------------------------------------------------------------------------

/// Rabi frequency minimizing 7pi/(4 Omega tau) + Omega^2/(8 B^2).
inline double omega_opt(double blockade, double tau) {
    detail::require_positive(blockade, "B");
    detail::require_positive(tau, "tau");
    return std::cbrt(7.0 * kPi) * std::pow(blockade, 2.0 / 3.0) / std::cbrt(tau);
}

/// Minimum of the two-term error model, reached at omega_opt.
inline double e_min(double blockade, double tau) {
    detail::require_positive(blockade, "B");
    detail::require_positive(tau, "tau");
    return 3.0 * std::pow(7.0 * kPi, 2.0 / 3.0) / 8.0 / std::pow(blockade * tau, 2.0 / 3.0);
}

/// The closed forms assume B tau >> 1.
inline bool e_min_regime_ok(double blockade, double tau) { return blockade * tau >= 100.0; }

/// Two-term model: radiative decay during the gate plus blockade leakage.
inline double two_term_error(double rabi, double blockade, double tau) {
    detail::require_positive(rabi, "Omega");
    detail::require_positive(blockade, "B");
    detail::require_positive(tau, "tau");
    return 7.0 * kPi / (4.0 * rabi * tau) + rabi * rabi / (8.0 * blockade * blockade);
}

/// Gate error including hyperfine-leakage corrections. Written in expanded
/// form so that B, omega_hf and tau may each be +inf.
inline double gate_error_full(double rabi, double blockade, double omega_hf, double tau) {
    detail::require_positive(rabi, "Omega");
    detail::require_positive(blockade, "B");
    detail::require_positive(omega_hf, "omega_hf");
    detail::require_positive(tau, "tau");
    if (!(rabi < omega_hf)) {
        throw ValidationError("Omega", "must be below omega_hf");
    }
    const double r2 = rabi * rabi;
    const double decay = 7.0 * kPi / (4.0 * rabi * tau) *
                         (1.0 + r2 / (omega_hf * omega_hf) + r2 / (7.0 * blockade * blockade));
    const double leakage = r2 / (8.0 * blockade * blockade) + 6.0 * r2 / (8.0 * omega_hf * omega_hf);
    return decay + leakage;
}

/// True when the hyperfine correction 6B^2/omega_hf^2 exceeds one, i.e. the
/// expansion is used outside B << omega_hf.
inline bool hyperfine_regime_flag(double blockade, double omega_hf) {
    if (std::isinf(blockade)) {
        return std::isfinite(omega_hf);
    }
    return 6.0 * blockade * blockade / (omega_hf * omega_hf) > 1.0;
}

struct RabiOptimum {
    double rabi;   // rad/s
    double error;
};

namespace detail {

// Brent minimization of f(Omega) over log Omega in [lo, hi]. The minimum
// must be interior.
template <class F>
RabiOptimum minimize_log_rabi(F &&f, double lo, double hi) {
    auto g = [&](double log_rabi) { return f(std::exp(log_rabi)); };
    const double a = std::log(lo), b = std::log(hi);
    // Coarse scan to bracket the global minimum before polishing.
    constexpr int kScan = 400;
    int best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= kScan; ++i) {
        const double v = g(a + (b - a) * i / kScan);
        if (v < best_value) {
            best_value = v;
            best = i;
        }
    }
    if (best == 0 || best == kScan) {
        throw NumericalError("optimize_rabi: failed to bracket an interior minimum");
    }
    const double step = (b - a) / kScan;
    std::uintmax_t iterations = 200;
    const auto [x, fx] = boost::math::tools::brent_find_minima(g, a + (best - 1) * step, a + (best + 1) * step,
                                                               std::numeric_limits<double>::digits, iterations);
    return {std::exp(x), fx};
}

}  // namespace detail

/// Numerical minimum of gate_error_full over Omega in (0, omega_hf).
inline RabiOptimum optimize_rabi(double blockade, double omega_hf, double tau) {
    const double guess = omega_opt(blockade, tau);
    detail::require_positive(omega_hf, "omega_hf");
    const double lo = guess * 1e-4;
    const double hi = std::min(guess * 1e4, omega_hf * (1.0 - 1e-9));
    if (!(lo < hi)) {
        throw NumericalError("optimize_rabi: failed to bracket a minimum below omega_hf");
    }
    return detail::minimize_log_rabi([&](double w) { return gate_error_full(w, blockade, omega_hf, tau); }, lo, hi);
}

/// Numerical minimum of the two-term model; cross-checks omega_opt / e_min.
inline RabiOptimum optimize_rabi_two_term(double blockade, double tau) {
    const double guess = omega_opt(blockade, tau);
    return detail::minimize_log_rabi([&](double w) { return two_term_error(w, blockade, tau); }, guess * 1e-4,
                                     guess * 1e4);
}

// ---------------------------------------------------------------------------
// Technical errors
// ---------------------------------------------------------------------------

/// Intermediate-level emission probability during a pi pulse, from the
/// relation Omega = (P_se/pi) Omega_1^2 / gamma_p with equal one-photon Rabi
/// frequencies.
inline double spont_emission_prob(double rabi, double rabi_single, double gamma_p) {
    detail::require_positive(rabi, "Omega");
    detail::require_positive(rabi_single, "Omega_1");
    detail::require_non_negative(gamma_p, "gamma_p");
    return kPi * rabi * gamma_p / (rabi_single * rabi_single);
}

/// Same probability with Omega = Omega_1^2 / (2 Delta) substituted.
inline double spont_emission_prob_detuned(double gamma_p, double detuning) {
    detail::require_non_negative(gamma_p, "gamma_p");
    if (!(std::abs(detuning) > 0.0)) {
        throw ValidationError("Delta", "must be non-zero");
    }
    return kPi * gamma_p / (2.0 * std::abs(detuning));
}

/// 1 - P for a resonant-area pi pulse seen at detuning x = Delta/Omega.
/// Written as (x^2 + cos^2) / (1 + x^2) to avoid cancellation.
inline double pi_pulse_infidelity(double x) {
    const double s = std::sqrt(1.0 + x * x);
    const double c = std::cos(0.5 * kPi * s);
    return (x * x + c * c) / (1.0 + x * x);
}

/// Doppler excitation error: 1 - <P_pi(k v)> over a 1-D thermal velocity
/// distribution with <v^2> = k_B T / m, by adaptive Gauss-Kronrod quadrature.
inline double doppler_excitation_error(double rabi, double temperature, double mass, double k_2nu) {
    detail::require_positive(rabi, "Omega");
    detail::require_non_negative(temperature, "T");
    detail::require_positive(mass, "m");
    detail::require_non_negative(k_2nu, "k_2nu");
    const double sigma_v = std::sqrt(PhysicalConstants::k_B * temperature / mass);
    const double spread = k_2nu * sigma_v / rabi;  // Doppler width in units of Omega
    if (spread == 0.0) {
        return 0.0;
    }
    auto integrand = [spread](double u) {
        return pi_pulse_infidelity(spread * u) * std::exp(-0.5 * u * u) / std::sqrt(kTwoPi);
    };
    double error_estimate = 0.0;
    const double eps = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 20, 1e-12,
        &error_estimate);
    if (!(error_estimate <= 1e-8 * std::max(eps, 1e-300) + 1e-18)) {
        throw NumericalError("doppler_excitation_error: quadrature did not converge");
    }
    return eps;
}

/// Leading small-Doppler-width term k^2 k_B T / (m Omega^2).
inline double doppler_excitation_leading(double rabi, double temperature, double mass, double k_2nu) {
    return k_2nu * k_2nu * PhysicalConstants::k_B * temperature / (mass * rabi * rabi);
}

// ---------------------------------------------------------------------------
// Dephasing
// ---------------------------------------------------------------------------

/// Magnetic dephasing time 2^{3/2} pi hbar / (|dgm| mu_B sigma): the 1/e
/// time of the Gaussian Ramsey envelope. A zero Zeeman difference or zero
/// field noise gives the infinite sentinel.
inline double t2_magnetic(double delta_gm, double sigma) {
    detail::require_non_negative(sigma, "sigma");
    const double dgm = std::abs(delta_gm);
    if (dgm == 0.0 || sigma == 0.0) {
        return kInfiniteT2;
    }
    return std::pow(2.0, 1.5) * kPi * PhysicalConstants::hbar / (dgm * PhysicalConstants::mu_B * sigma);
}

/// Motional dephasing time sqrt(2m / k_B T) / k_2nu.
inline double t2_doppler(double temperature, double mass, double k_2nu) {
    detail::require_non_negative(temperature, "T");
    detail::require_positive(mass, "m");
    detail::require_non_negative(k_2nu, "k_2nu");
    if (temperature == 0.0 || k_2nu == 0.0) {
        return kInfiniteT2;
    }
    return std::sqrt(2.0 * mass / (PhysicalConstants::k_B * temperature)) / k_2nu;
}

/// T2 of the product of two Gaussian envelopes.
inline double t2_combined(double t2_b, double t2_d) {
    detail::require_positive(t2_b, "T2_B");
    detail::require_positive(t2_d, "T2_D");
    if (is_infinite(t2_b)) {
        return t2_d;
    }
    if (is_infinite(t2_d)) {
        return t2_b;
    }
    return t2_b * t2_d / std::hypot(t2_b, t2_d);
}

/// <exp(i phi_st)> = exp(-t^2 / T2^2).
inline double dephasing_envelope(double t, double t2) {
    if (is_infinite(t2)) {
        return 1.0;
    }
    const double x = t / t2;
    return std::exp(-x * x);
}

/// Bell-state fidelity after averaging the stochastic phase over a gap t.
inline double fidelity_limit(double t, double t2) {
    detail::require_non_negative(t, "t");
    detail::require_positive(t2, "T2");
    return 0.5 * (1.0 + dephasing_envelope(t, t2));
}

/// Pulse-timing error that leaves a population error `population_error` on
/// a pi pulse: sin^2(Omega dt / 2) = population_error.
inline double pi_pulse_timing_tolerance(double rabi, double population_error) {
    return 2.0 * std::asin(std::sqrt(population_error)) / rabi;
}

// ---------------------------------------------------------------------------
// Budget report
// ---------------------------------------------------------------------------

struct ErrorBudgetReport {
    double rabi = 0.0;              // rad/s
    double blockade = 0.0;          // rad/s
    double omega_hf = 0.0;          // rad/s
    double tau = 0.0;               // s
    double intrinsic_error = 0.0;   // full expression at the configured Omega
    double omega_opt = 0.0;         // rad/s
    double e_min = 0.0;
    double error_at_omega_opt = 0.0;  // full expression at omega_opt
    double rabi_optimal = 0.0;        // numerical minimizer of the full expression, rad/s
    double error_optimal = 0.0;
    double p_se = 0.0;              // from Omega, Omega_1, gamma_p
    double p_se_detuned = 0.0;      // pi gamma_p / (2 Delta)
    double doppler_excitation = 0.0;
    double doppler_excitation_leading = 0.0;
    double k_2nu = 0.0;             // 1/m
    double t2_b = 0.0;              // s
    double t2_d = 0.0;              // s
    double t2 = 0.0;                // s
    double gap_time = 0.0;          // s
    double minimum_gap_time = 0.0;  // 2 pi / Omega, s
    double fidelity = 0.0;          // F(gap_time)
    double dephasing_error = 0.0;   // 1 - F
    double timing_tolerance = 0.0;  // s, for a 1e-3 pi-pulse population error
    double total_error = 0.0;       // intrinsic + P_se + Doppler excitation + dephasing
    bool hyperfine_regime_flag = false;
    bool e_min_regime_ok = true;
    std::vector<std::string> defaulted;
    std::vector<std::string> warnings;
};

inline ErrorBudgetReport assemble_budget(const ExperimentConfig &cfg) {
    ErrorBudgetReport r;
    r.rabi = cfg.laser.rabi;
    r.blockade = cfg.blockade_shift();
    r.omega_hf = cfg.species.omega_hf;
    r.tau = cfg.level.tau;

    r.intrinsic_error = gate_error_full(r.rabi, r.blockade, r.omega_hf, r.tau);
    if (std::isfinite(r.blockade) && std::isfinite(r.tau)) {
        r.omega_opt = omega_opt(r.blockade, r.tau);
        r.e_min = e_min(r.blockade, r.tau);
        r.e_min_regime_ok = e_min_regime_ok(r.blockade, r.tau);
        if (r.omega_opt < r.omega_hf) {
            r.error_at_omega_opt = gate_error_full(r.omega_opt, r.blockade, r.omega_hf, r.tau);
            const auto best = optimize_rabi(r.blockade, r.omega_hf, r.tau);
            r.rabi_optimal = best.rabi;
            r.error_optimal = best.error;
        } else {
            r.warnings.emplace_back("omega_opt exceeds omega_hf; no optimum below the hyperfine splitting");
        }
    } else {
        r.warnings.emplace_back("B or tau infinite: no finite optimum Rabi frequency");
    }
    r.hyperfine_regime_flag = hyperfine_regime_flag(r.blockade, r.omega_hf);
    if (r.hyperfine_regime_flag) {
        r.warnings.emplace_back("6 B^2/omega_hf^2 > 1: full expression used outside B << omega_hf");
    }

    r.p_se = spont_emission_prob(r.rabi, cfg.laser.rabi_single, cfg.laser.gamma_p);
    r.p_se_detuned = spont_emission_prob_detuned(cfg.laser.gamma_p, cfg.laser.detuning);

    r.k_2nu = cfg.k_2nu();
    const double mass = cfg.species.mass;
    const double temp = cfg.environment.temperature;
    r.doppler_excitation = doppler_excitation_error(r.rabi, temp, mass, r.k_2nu);
    r.doppler_excitation_leading = doppler_excitation_leading(r.rabi, temp, mass, r.k_2nu);

    const double dgm = cfg.level.zeeman_product() - cfg.species.ground_g_m;
    r.t2_b = t2_magnetic(dgm, cfg.environment.sigma);
    r.t2_d = t2_doppler(temp, mass, r.k_2nu);
    r.t2 = t2_combined(r.t2_b, r.t2_d);
    r.minimum_gap_time = cfg.minimum_gap_time();
    r.gap_time = cfg.gap_time();
    r.fidelity = fidelity_limit(r.gap_time, r.t2);
    r.dephasing_error = 1.0 - r.fidelity;
    r.timing_tolerance = pi_pulse_timing_tolerance(r.rabi, 1e-3);
    r.total_error = r.intrinsic_error + r.p_se + r.doppler_excitation + r.dephasing_error;

    r.defaulted = cfg.defaulted;
    r.warnings.insert(r.warnings.begin(), cfg.warnings.begin(), cfg.warnings.end());
    return r;
}

/// Report fields in lab units; the unit is part of every key.
inline std::vector<std::pair<std::string, double>> report_fields(const ErrorBudgetReport &r) {
    return {
        {"rabi_mhz", units::rad_to_mhz(r.rabi)},
        {"blockade_mhz", units::rad_to_mhz(r.blockade)},
        {"omega_hf_mhz", units::rad_to_mhz(r.omega_hf)},
        {"tau_us", units::s_to_us(r.tau)},
        {"intrinsic_error", r.intrinsic_error},
        {"omega_opt_mhz", units::rad_to_mhz(r.omega_opt)},
        {"e_min", r.e_min},
        {"error_at_omega_opt", r.error_at_omega_opt},
        {"rabi_optimal_mhz", units::rad_to_mhz(r.rabi_optimal)},
        {"error_optimal", r.error_optimal},
        {"p_se", r.p_se},
        {"p_se_detuned", r.p_se_detuned},
        {"doppler_excitation_error", r.doppler_excitation},
        {"doppler_excitation_leading", r.doppler_excitation_leading},
        {"k_2nu_per_m", r.k_2nu},
        {"t2_b_us", units::s_to_us(r.t2_b)},
        {"t2_d_us", units::s_to_us(r.t2_d)},
        {"t2_us", units::s_to_us(r.t2)},
        {"gap_time_us", units::s_to_us(r.gap_time)},
        {"minimum_gap_time_us", units::s_to_us(r.minimum_gap_time)},
        {"fidelity_limit", r.fidelity},
        {"dephasing_error", r.dephasing_error},
        {"timing_tolerance_ns", units::s_to_ns(r.timing_tolerance)},
        {"total_error", r.total_error},
    };
}

}  // namespace rydberg
