#pragma once

// Shot-level Monte Carlo of Ramsey decay and Bell-state experiments.
//
// Every shot draws its own engine from (seed, stream, shot index), so any
// subset of shots can be run separately and merged by adding counts. Streams:
// Ramsey time point i uses stream i; a Bell experiment uses stream 0 for the
// population measurement and stream 1 + k for parity point k.

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "rydberg/budget.hpp"
#include "rydberg/config.hpp"
#include "rydberg/dynamics/protocols.hpp"
#include "rydberg/dynamics/state.hpp"
#include "rydberg/error.hpp"

namespace rydberg::montecarlo {

using dynamics::cd;
using dynamics::Matrix4;
using dynamics::Vector4;

// ---------------------------------------------------------------------------
// Seeding
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31U);
}

inline std::uint64_t shot_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t shot) {
    return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ shot);
}

inline std::mt19937_64 shot_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t shot) {
    return std::mt19937_64(shot_seed(seed, stream, shot));
}

// ---------------------------------------------------------------------------
// Noise model and samples
// ---------------------------------------------------------------------------

struct NoiseModel {
    double k_2nu = 0.0;           // 1/m
    double velocity_sigma = 0.0;  // sqrt(k_B T / m), m/s
    double field_sigma = 0.0;     // T
    double c_b = 0.0;             // magnetic phase rate per unit field, rad/(s T)
    double loss_probability = 0.0;
    int loss_stages = 1;

    /// c_B = sqrt2 / (sigma T2_B), so that <exp(i c_B b t)> = exp(-t^2/T2_B^2).
    static NoiseModel from_config(const ExperimentConfig &cfg) {
        NoiseModel n;
        n.k_2nu = cfg.k_2nu();
        n.velocity_sigma =
            std::sqrt(PhysicalConstants::k_B * cfg.environment.temperature / cfg.species.mass);
        n.field_sigma = cfg.environment.sigma;
        const double t2_b = t2_magnetic(cfg.level.zeeman_product() - cfg.species.ground_g_m, n.field_sigma);
        n.c_b = is_infinite(t2_b) ? 0.0 : std::sqrt(2.0) / (n.field_sigma * t2_b);
        n.loss_probability = cfg.environment.loss_probability;
        n.loss_stages = cfg.environment.loss_stages;
        return n;
    }
};

struct ShotSample {
    std::array<double, 2> velocity{};       // along k_2nu, m/s
    double field = 0.0;                     // quasi-static offset b, T
    std::vector<std::array<bool, 2>> loss;  // per stage, per atom

    bool pair_lost() const {
        for (const auto &stage : loss) {
            if (stage[0] || stage[1]) {
                return true;
            }
        }
        return false;
    }
};

/// Draw order: v_control, v_target, b, then loss flags stage by stage.
template <class Engine>
ShotSample sample_shot(const NoiseModel &noise, Engine &eng) {
    ShotSample s;
    std::normal_distribution<double> gauss(0.0, 1.0);
    s.velocity[0] = noise.velocity_sigma * gauss(eng);
    s.velocity[1] = noise.velocity_sigma * gauss(eng);
    s.field = noise.field_sigma * gauss(eng);
    if (noise.loss_probability > 0.0) {
        std::bernoulli_distribution lost(noise.loss_probability);
        s.loss.resize(static_cast<std::size_t>(noise.loss_stages));
        for (auto &stage : s.loss) {
            stage[0] = lost(eng);
            stage[1] = lost(eng);
        }
    }
    return s;
}

/// phi_st = k_2nu v t + c_B b t for the given atom.
inline double stochastic_phase(const ShotSample &s, double t, const NoiseModel &noise, int atom = 0) {
    rydberg::detail::require_non_negative(t, "t");
    return noise.k_2nu * s.velocity[static_cast<std::size_t>(atom)] * t + noise.c_b * s.field * t;
}

/// Shot mean of cos(phi_st) at time t with its standard error.
struct EnvelopeEstimate {
    double mean = 0.0;
    double sigma = 0.0;
};

inline EnvelopeEstimate envelope_estimate(const NoiseModel &noise, double t, std::uint64_t shots,
                                          std::uint64_t seed, std::uint64_t stream = 0) {
    double sum = 0.0, sum2 = 0.0;
    for (std::uint64_t i = 0; i < shots; ++i) {
        auto eng = shot_engine(seed, stream, i);
        const double c = std::cos(stochastic_phase(sample_shot(noise, eng), t, noise));
        sum += c;
        sum2 += c * c;
    }
    const double n = static_cast<double>(shots);
    const double mean = sum / n;
    const double var = std::max(0.0, sum2 / n - mean * mean);
    return {mean, std::sqrt(var / n)};
}

// ---------------------------------------------------------------------------
// Envelope fit
// ---------------------------------------------------------------------------

struct EnvelopeFit {
    double t2 = 0.0;         // s; kInfiniteT2 when no decay is visible
    double amplitude = 0.0;
    double residual_norm = 0.0;
    double t2_uncertainty = 0.0;  // s
    bool ok = false;
    std::string message;
};

namespace detail {

// Residuals A exp(-u t^2) - y with x = (A, u), u = 1/T2^2.
struct GaussianEnvelopeFunctor : Eigen::DenseFunctor<double> {
    const Eigen::VectorXd &t, &y;
    GaussianEnvelopeFunctor(const Eigen::VectorXd &t_, const Eigen::VectorXd &y_)
        : Eigen::DenseFunctor<double>(2, static_cast<int>(t_.size())), t(t_), y(y_) {}

    int operator()(const InputType &x, ValueType &f) const {
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            f(i) = x(0) * std::exp(-x(1) * t(i) * t(i)) - y(i);
        }
        return 0;
    }
    int df(const InputType &x, JacobianType &j) const {
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            const double e = std::exp(-x(1) * t(i) * t(i));
            j(i, 0) = e;
            j(i, 1) = -x(0) * t(i) * t(i) * e;
        }
        return 0;
    }
};

}  // namespace detail

/// Least-squares fit of A exp(-t^2/T2^2) to y(t). `sigma` (per point
/// statistical errors, may be empty) enters only the uncertainty. Starts
/// from a log-linear fit; a flat envelope at 1 returns the infinite sentinel.
inline EnvelopeFit fit_gaussian_envelope(const std::vector<double> &t, const std::vector<double> &y,
                                         const std::vector<double> &sigma = {}) {
    EnvelopeFit fit;
    if (t.size() != y.size() || t.empty()) {
        throw ValidationError("t_grid", "time grid and signal differ in length or are empty");
    }
    bool flat = true;
    for (double v : y) {
        flat = flat && std::abs(v - 1.0) <= 1e-12;
    }
    if (flat) {
        fit.t2 = kInfiniteT2;
        fit.amplitude = 1.0;
        fit.t2_uncertainty = kInfinity;
        fit.ok = true;
        fit.message = "no decay: infinite T2";
        return fit;
    }
    if (t.size() < 2) {
        fit.message = "need at least two points";
        return fit;
    }

    const auto n = static_cast<Eigen::Index>(t.size());
    Eigen::VectorXd tv = Eigen::Map<const Eigen::VectorXd>(t.data(), n);
    Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), n);

    // ln y = ln A - u t^2 on the points with a usable signal.
    double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (yv(i) > 0.05) {
            const double x = tv(i) * tv(i), l = std::log(yv(i));
            sx += x, sy += l, sxx += x * x, sxy += x * l, m += 1;
        }
    }
    const double t_max = tv.cwiseAbs().maxCoeff();
    Eigen::VectorXd x(2);
    x << yv.maxCoeff(), 1.0 / (t_max * t_max);
    if (m >= 2 && m * sxx - sx * sx > 0) {
        const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        if (slope < 0) {
            x << std::exp((sy - slope * sx) / m), -slope;
        }
    }

    detail::GaussianEnvelopeFunctor f(tv, yv);
    Eigen::LevenbergMarquardt<detail::GaussianEnvelopeFunctor> lm(f);
    const auto status = lm.minimize(x);
    if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters || !(x(1) > 0.0) ||
        !std::isfinite(x(0)) || !std::isfinite(x(1))) {
        fit.message = "envelope fit did not converge to a decaying Gaussian";
        return fit;
    }

    Eigen::VectorXd r(n);
    f(x, r);
    Eigen::MatrixXd j(n, 2);
    f.df(x, j);
    const Eigen::Matrix2d jtj_inv = (j.transpose() * j).inverse();
    // Residual-scatter covariance, and the propagated per-point errors.
    double var_u = n > 2 ? jtj_inv(1, 1) * r.squaredNorm() / static_cast<double>(n - 2) : 0.0;
    if (sigma.size() == t.size()) {
        const Eigen::VectorXd s2 = Eigen::Map<const Eigen::VectorXd>(sigma.data(), n).array().square();
        const Eigen::Matrix2d sandwich = jtj_inv * j.transpose() * s2.asDiagonal() * j * jtj_inv;
        var_u = std::max(var_u, sandwich(1, 1));
    }
    const double u = x(1);
    fit.amplitude = x(0);
    fit.t2 = 1.0 / std::sqrt(u);
    fit.t2_uncertainty = std::max(0.5 * std::pow(u, -1.5) * std::sqrt(var_u), 1e-12 * fit.t2);
    fit.residual_norm = r.norm();
    fit.ok = true;
    return fit;
}

// ---------------------------------------------------------------------------
// Ramsey
// ---------------------------------------------------------------------------

inline constexpr std::array<double, 4> kFringePhases = {0.0, 0.5 * kPi, kPi, 1.5 * kPi};

struct RamseyPoint {
    double t = 0.0;                  // s
    std::array<double, 4> signal{};  // shot mean of (1 + cos(phi_det + phi_st))/2 per fringe phase
    double contrast = 0.0;
    double contrast_sigma = 0.0;
};

struct RamseyResult {
    std::vector<RamseyPoint> points;
    EnvelopeFit fit;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
};

/// Ground-Rydberg Ramsey on one atom. Each shot reports the fringe
/// probability at the four fringe phases; contrast = |<exp(i phi_st)>| is read
/// from the quadratures S(0) - S(pi) and S(3pi/2) - S(pi/2).
inline RamseyResult ramsey_simulate(const std::vector<double> &t_grid, std::uint64_t shots, const NoiseModel &noise,
                                    std::uint64_t seed) {
    if (shots < 100) {
        throw ValidationError("shots", "at least 100 shots are required");
    }
    if (t_grid.empty()) {
        throw ValidationError("t_grid", "empty time grid");
    }
    RamseyResult res;
    res.shots = shots;
    res.seed = seed;
    const double n = static_cast<double>(shots);
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        const double t = t_grid[k];
        rydberg::detail::require_non_negative(t, "t_grid");
        RamseyPoint p;
        p.t = t;
        double sx = 0, sxx = 0, sy = 0, syy = 0;
        for (std::uint64_t i = 0; i < shots; ++i) {
            auto eng = shot_engine(seed, k, i);
            const double phi = stochastic_phase(sample_shot(noise, eng), t, noise);
            for (std::size_t f = 0; f < kFringePhases.size(); ++f) {
                p.signal[f] += 0.5 * (1.0 + std::cos(kFringePhases[f] + phi));
            }
            const double c = std::cos(phi), s = std::sin(phi);
            sx += c, sxx += c * c, sy += s, syy += s * s;
        }
        for (auto &s : p.signal) {
            s /= n;
        }
        const double x = p.signal[0] - p.signal[2];
        const double y = p.signal[3] - p.signal[1];
        p.contrast = std::hypot(x, y);
        const double vx = std::max(0.0, sxx / n - (sx / n) * (sx / n)) / n;
        const double vy = std::max(0.0, syy / n - (sy / n) * (sy / n)) / n;
        p.contrast_sigma =
            p.contrast > 0.0 ? std::sqrt(x * x * vx + y * y * vy) / p.contrast : std::sqrt(vx + vy);
        res.points.push_back(p);
    }
    std::vector<double> ts, cs, ss;
    for (const auto &p : res.points) {
        ts.push_back(p.t);
        cs.push_back(p.contrast);
        ss.push_back(p.contrast_sigma);
    }
    res.fit = fit_gaussian_envelope(ts, cs, ss);
    return res;
}

inline RamseyResult ramsey_simulate(const std::vector<double> &t_grid, std::uint64_t shots,
                                    const ExperimentConfig &cfg, std::uint64_t seed) {
    return ramsey_simulate(t_grid, shots, NoiseModel::from_config(cfg), seed);
}

// ---------------------------------------------------------------------------
// Measurement records and parity analysis
// ---------------------------------------------------------------------------

/// Outcome counts over {00, 01, 10, 11} for the surviving pairs; lost pairs
/// are counted separately, so sum(counts) + lost = shots.
struct MeasurementRecord {
    std::uint64_t shots = 0;
    std::array<std::uint64_t, 4> counts{};
    std::uint64_t lost = 0;
    std::optional<double> phase;  // analysis phase, rad; empty for the computational basis

    std::uint64_t survived() const { return counts[0] + counts[1] + counts[2] + counts[3]; }

    double probability(int k) const {
        const auto s = survived();
        return s == 0 ? 0.0 : static_cast<double>(counts[static_cast<std::size_t>(k)]) / static_cast<double>(s);
    }

    /// P00 + P11 - P01 - P10 over surviving pairs.
    double parity() const { return probability(0) + probability(3) - probability(1) - probability(2); }

    bool consistent() const { return survived() + lost == shots; }

    bool operator==(const MeasurementRecord &) const = default;
};

/// Adds counts of two runs of the same measurement setting.
inline MeasurementRecord merge(const MeasurementRecord &a, const MeasurementRecord &b) {
    if (a.phase != b.phase) {
        throw ValidationError("phase", "records of different analysis settings cannot be merged");
    }
    MeasurementRecord m = a;
    m.shots += b.shots;
    m.lost += b.lost;
    for (std::size_t k = 0; k < 4; ++k) {
        m.counts[k] += b.counts[k];
    }
    return m;
}

/// exp(-i pi/4 (cos phi X + sin phi Y)).
inline dynamics::Matrix2 analysis_rotation(double phi) {
    const double c = std::cos(0.25 * kPi), s = std::sin(0.25 * kPi);
    dynamics::Matrix2 m;
    m << c, cd(0.0, -s) * std::polar(1.0, -phi), cd(0.0, -s) * std::polar(1.0, phi), c;
    return m;
}

inline Matrix4 analysis_unitary(double phi) {
    const auto r = analysis_rotation(phi);
    Matrix4 u;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
                for (int d = 0; d < 2; ++d)
                    u(2 * a + b, 2 * c + d) = r(a, c) * r(b, d);
    return u;
}

/// Outcome probabilities of a (possibly subnormalized) computational block
/// after the optional analysis rotation. Missing trace is lost population.
inline std::array<double, 4> outcome_probabilities(const Matrix4 &rho, std::optional<double> phase) {
    Matrix4 r = rho;
    if (phase) {
        const Matrix4 u = analysis_unitary(*phase);
        r = u * rho * u.adjoint();
    }
    std::array<double, 4> p{};
    for (int k = 0; k < 4; ++k) {
        p[static_cast<std::size_t>(k)] = std::clamp(r(k, k).real(), 0.0, 1.0);
    }
    return p;
}

namespace detail {

template <class Engine>
int sample_outcome(const std::array<double, 4> &p, Engine &eng) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(eng);
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
        acc += p[static_cast<std::size_t>(k)];
        if (u < acc) {
            return k;
        }
    }
    return -1;  // the remaining probability: lost
}

// One measurement setting over shots [0, shots). `state(eng)` returns the
// shot's computational block, or nullopt if the pair was lost.
template <class StateFn>
MeasurementRecord measure(std::uint64_t shots, std::optional<double> phase, std::uint64_t seed,
                          std::uint64_t stream, StateFn &&state, std::uint64_t first_shot = 0) {
    MeasurementRecord rec;
    rec.shots = shots;
    rec.phase = phase;
    for (std::uint64_t i = first_shot; i < first_shot + shots; ++i) {
        auto eng = shot_engine(seed, stream, i);
        const std::optional<Matrix4> rho = state(eng);
        const int k = rho ? sample_outcome(outcome_probabilities(*rho, phase), eng) : -1;
        if (k < 0) {
            ++rec.lost;
        } else {
            ++rec.counts[static_cast<std::size_t>(k)];
        }
    }
    return rec;
}

}  // namespace detail

struct ParityFit {
    double amplitude = 0.0;  // of the cos(2 phi) harmonic
    double phase = 0.0;      // phi_0 in A cos(2 phi + phi_0), rad
    double offset = 0.0;
    double amplitude_1 = 0.0;  // of the cos(phi) harmonic, when the grid spans 2 pi
    double period = kPi;       // of the dominant harmonic
};

/// Linear least squares of Pi(phi) = c + a cos 2phi + b sin 2phi (plus the
/// cos phi / sin phi harmonic when the grid spans a full 2 pi).
inline ParityFit fit_parity(const std::vector<double> &phases, const std::vector<double> &parity) {
    if (phases.size() != parity.size() || phases.size() < 3) {
        throw ValidationError("phase_grid", "need at least three parity points");
    }
    const auto [lo, hi] = std::minmax_element(phases.begin(), phases.end());
    const double spacing = phases.size() > 1 ? (*hi - *lo) / static_cast<double>(phases.size() - 1) : 0.0;
    const bool full = (*hi - *lo) + spacing >= kTwoPi * (1.0 - 1e-9) && phases.size() >= 5;
    const auto n = static_cast<Eigen::Index>(phases.size());
    Eigen::MatrixXd a(n, full ? 5 : 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double p = phases[static_cast<std::size_t>(i)];
        a(i, 0) = 1.0;
        a(i, 1) = std::cos(2.0 * p);
        a(i, 2) = std::sin(2.0 * p);
        if (full) {
            a(i, 3) = std::cos(p);
            a(i, 4) = std::sin(p);
        }
        y(i) = parity[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(y);
    ParityFit fit;
    fit.offset = c(0);
    fit.amplitude = std::hypot(c(1), c(2));
    fit.phase = std::atan2(-c(2), c(1));
    if (full) {
        fit.amplitude_1 = std::hypot(c(3), c(4));
    }
    fit.period = fit.amplitude_1 > fit.amplitude ? kTwoPi : kPi;
    return fit;
}

struct ParityScan {
    std::vector<MeasurementRecord> records;
    ParityFit fit;
};

inline void validate_phase_grid(const std::vector<double> &phase_grid) {
    if (phase_grid.size() < 3) {
        throw ValidationError("phase_grid", "need at least three analysis phases");
    }
    const auto [lo, hi] = std::minmax_element(phase_grid.begin(), phase_grid.end());
    const double spacing = (*hi - *lo) / static_cast<double>(phase_grid.size() - 1);
    if ((*hi - *lo) + spacing < kPi * (1.0 - 1e-9)) {
        throw ValidationError("phase_grid", "analysis phases must span at least one period (pi)");
    }
}

/// Evenly spaced analysis phases k * span / n, k = 0..n-1.
inline std::vector<double> phase_grid(int n, double span = kTwoPi) {
    std::vector<double> g;
    for (int k = 0; k < n; ++k) {
        g.push_back(span * k / n);
    }
    return g;
}

namespace detail {

template <class StateFn>
ParityScan parity_scan_impl(const std::vector<double> &phase_grid, std::uint64_t shots_per_point,
                            std::uint64_t seed, StateFn &&state) {
    validate_phase_grid(phase_grid);
    if (shots_per_point == 0) {
        throw ValidationError("shots", "must be positive");
    }
    ParityScan scan;
    std::vector<double> pi;
    for (std::size_t k = 0; k < phase_grid.size(); ++k) {
        auto rec = measure(shots_per_point, phase_grid[k], seed, 1 + k, state);
        if (rec.survived() == 0) {
            throw NumericalError("no surviving pairs at analysis phase " + std::to_string(phase_grid[k]));
        }
        pi.push_back(rec.parity());
        scan.records.push_back(std::move(rec));
    }
    scan.fit = fit_parity(phase_grid, pi);
    return scan;
}

}  // namespace detail

/// Parity scan of a fixed state (computational block of rho).
inline ParityScan parity_scan(const Matrix4 &rho, const std::vector<double> &phase_grid,
                              std::uint64_t shots_per_point, std::uint64_t seed) {
    return detail::parity_scan_impl(phase_grid, shots_per_point, seed,
                                    [&](auto &) { return std::optional<Matrix4>(rho); });
}

inline ParityScan parity_scan(const dynamics::TwoAtomDensityMatrix &rho, const std::vector<double> &phase_grid,
                              std::uint64_t shots_per_point, std::uint64_t seed) {
    return parity_scan(rho.computational_block(), phase_grid, shots_per_point, seed);
}

// ---------------------------------------------------------------------------
// Fidelity extraction and loss correction
// ---------------------------------------------------------------------------

/// F = (P_a + P_b)/2 + A/2 with P_a, P_b the populations of the Bell
/// state's two components (P00, P11 for B1).
inline double extract_fidelity(double p_a, double p_b, double parity_amplitude) {
    for (double v : {p_a, p_b, parity_amplitude}) {
        if (!(v >= 0.0 && v <= 1.0 + 1e-12)) {
            throw ValidationError("fidelity_inputs", "populations and parity amplitude must lie in [0, 1]");
        }
    }
    return 0.5 * (p_a + p_b) + 0.5 * parity_amplitude;
}

/// Lost pairs contribute the uncorrelated-outcome fidelity 1/4.
inline constexpr double kLostPairFidelity = 0.25;

inline double raw_fidelity(double surviving_fraction, double corrected_fidelity) {
    return surviving_fraction * corrected_fidelity + (1.0 - surviving_fraction) * kLostPairFidelity;
}

struct BellRecord {
    dynamics::BellVariant variant = dynamics::BellVariant::b1;
    double gap_time = 0.0;  // s
    MeasurementRecord populations;
    ParityScan parity;
};

struct LossCorrected {
    double raw = 0.0;
    double corrected = 0.0;
    double surviving_fraction = 0.0;
};

inline LossCorrected loss_correct(const BellRecord &rec) {
    std::uint64_t shots = rec.populations.shots, survived = rec.populations.survived();
    for (const auto &r : rec.parity.records) {
        shots += r.shots;
        survived += r.survived();
    }
    if (survived == 0 || rec.populations.survived() == 0) {
        throw NumericalError("no surviving pairs: fidelity undefined");
    }
    const bool b1 = rec.variant == dynamics::BellVariant::b1;
    const double p_a = rec.populations.probability(b1 ? 0 : 1);
    const double p_b = rec.populations.probability(b1 ? 3 : 2);
    LossCorrected out;
    out.corrected = extract_fidelity(p_a, p_b, std::min(1.0, rec.parity.fit.amplitude));
    out.surviving_fraction = static_cast<double>(survived) / static_cast<double>(shots);
    out.raw = raw_fidelity(out.surviving_fraction, out.corrected);
    return out;
}

// ---------------------------------------------------------------------------
// Bell experiment
// ---------------------------------------------------------------------------

struct BellExperimentOptions {
    dynamics::BellVariant variant = dynamics::BellVariant::b1;
    std::vector<double> phase_grid = montecarlo::phase_grid(16);
    std::uint64_t shots_per_point = 0;    // 0: same as the population shots
    std::optional<Matrix4> prepared;      // computational block before the gap; default: ideal Bell state
};

struct BellExperimentResult {
    BellRecord record;
    LossCorrected fidelity;
    double exact_fidelity = 0.0;  // shot mean of <B|rho_shot|B> over surviving pairs, no projection noise
    double fidelity_sigma = 0.0;  // binomial estimate of the statistical error of fidelity.corrected
};

/// The control atom's |1> amplitude (Rydberg-mediated in the gate) picks up
/// phi_st over the gap; pairs with a lost atom are recorded as lost.
inline BellExperimentResult bell_experiment(double gap_t, std::uint64_t shots, const NoiseModel &noise,
                                            std::uint64_t seed, const BellExperimentOptions &opt = {}) {
    rydberg::detail::require_non_negative(gap_t, "gap_time");
    if (shots < 100) {
        throw ValidationError("shots", "at least 100 shots are required");
    }
    const Vector4 target = dynamics::bell_target(opt.variant);
    const Matrix4 rho0 = opt.prepared ? *opt.prepared : Matrix4(target * target.adjoint());

    double exact_sum = 0.0;
    std::uint64_t exact_n = 0;
    auto state = [&](auto &eng) -> std::optional<Matrix4> {
        const ShotSample s = sample_shot(noise, eng);
        if (s.pair_lost()) {
            return std::nullopt;
        }
        const cd e = std::polar(1.0, stochastic_phase(s, gap_t, noise, 0));
        const Vector4 d(1.0, 1.0, e, e);
        return Matrix4(d.asDiagonal() * rho0 * d.conjugate().asDiagonal());
    };
    auto state_tracked = [&](auto &eng) -> std::optional<Matrix4> {
        auto rho = state(eng);
        if (rho) {
            exact_sum += (target.adjoint() * *rho * target)(0, 0).real();
            ++exact_n;
        }
        return rho;
    };

    // With equal analysis phases the 01/10 coherence of B2 only shifts the
    // parity offset; a target pi pulse first maps B2 onto B1.
    auto analysed = [&](auto &eng) -> std::optional<Matrix4> {
        auto rho = state(eng);
        if (rho && opt.variant == dynamics::BellVariant::b2) {
            static const Eigen::PermutationMatrix<4> flip_target(Eigen::Vector4i(1, 0, 3, 2));
            rho = Matrix4(flip_target * *rho * flip_target.transpose());
        }
        return rho;
    };

    BellExperimentResult res;
    res.record.variant = opt.variant;
    res.record.gap_time = gap_t;
    res.record.populations = detail::measure(shots, std::nullopt, seed, 0, state_tracked);
    res.record.parity =
        detail::parity_scan_impl(opt.phase_grid, opt.shots_per_point ? opt.shots_per_point : shots, seed, analysed);
    res.fidelity = loss_correct(res.record);
    res.exact_fidelity = exact_n ? exact_sum / static_cast<double>(exact_n) : 0.0;

    const double np = static_cast<double>(res.record.populations.survived());
    const double pp = res.fidelity.corrected;
    double parity_var = 0.0;
    for (const auto &r : res.record.parity.records) {
        const double pi = r.parity();
        parity_var += (1.0 - pi * pi) / static_cast<double>(r.survived());
    }
    const double m = static_cast<double>(res.record.parity.records.size());
    // sigma(A) ~ sqrt(2/M) sigma(Pi) for M evenly spaced points.
    const double sigma_a = std::sqrt(2.0 * parity_var / (m * m));
    res.fidelity_sigma = std::sqrt(std::max(0.0, pp * (1.0 - pp)) / (4.0 * np) + 0.25 * sigma_a * sigma_a);
    return res;
}

inline BellExperimentResult bell_experiment(double gap_t, std::uint64_t shots, const ExperimentConfig &cfg,
                                            std::uint64_t seed, const BellExperimentOptions &opt = {}) {
    return bell_experiment(gap_t, shots, NoiseModel::from_config(cfg), seed, opt);
}

// ---------------------------------------------------------------------------
// CSV export
// ---------------------------------------------------------------------------

/// Columns: phase_rad,shots,n00,n01,n10,n11,lost,parity. The population
/// record has an empty phase.
inline void write_records_csv(std::ostream &os, const std::vector<MeasurementRecord> &records) {
    os << "phase_rad,shots,n00,n01,n10,n11,lost,parity\n";
    os.precision(12);
    for (const auto &r : records) {
        if (r.phase) {
            os << *r.phase;
        }
        os << "," << r.shots;
        for (auto c : r.counts) {
            os << "," << c;
        }
        os << "," << r.lost << "," << r.parity() << "\n";
    }
}

/// Columns: t_us,contrast,contrast_sigma,s_0,s_90,s_180,s_270,model.
inline void write_ramsey_csv(std::ostream &os, const RamseyResult &res) {
    os << "t_us,contrast,contrast_sigma,s_0,s_90,s_180,s_270,model\n";
    os.precision(12);
    for (const auto &p : res.points) {
        const double model = res.fit.ok ? res.fit.amplitude * dephasing_envelope(p.t, res.fit.t2) : 0.0;
        os << units::s_to_us(p.t) << "," << p.contrast << "," << p.contrast_sigma;
        for (double s : p.signal) {
            os << "," << s;
        }
        os << "," << model << "\n";
    }
}

}  // namespace rydberg::montecarlo
