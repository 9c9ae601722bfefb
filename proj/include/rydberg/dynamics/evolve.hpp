#pragma once

// Lindblad propagation. The generator of a piecewise-constant segment is
// exponentiated exactly over one fixed step and the step propagator is raised
// to the number of steps by repeated squaring.

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdint>

#include "rydberg/dynamics/hamiltonian.hpp"
#include "rydberg/dynamics/state.hpp"
#include "rydberg/error.hpp"

namespace rydberg::dynamics {

/// Superoperator on column-stacked vec(rho), 256 x 256.
using Superoperator = Eigen::MatrixXcd;

inline constexpr int kSuperDim = kDim * kDim;

/// vec(A rho B) = (B^T kron A) vec(rho).
inline Superoperator liouvillian(const HamiltonianSpec &spec) {
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(kDim, kDim);
    const Eigen::MatrixXcd h = spec.h;
    Superoperator l = cd(0.0, -1.0) * (Eigen::kroneckerProduct(id, h) - Eigen::kroneckerProduct(h.transpose(), id));
    for (const auto &jump : spec.jumps) {
        const Eigen::MatrixXcd j = jump;
        const Eigen::MatrixXcd jdj = j.adjoint() * j;
        l += Eigen::kroneckerProduct(j.conjugate(), j);
        l -= 0.5 * Eigen::kroneckerProduct(id, jdj);
        l -= 0.5 * Eigen::kroneckerProduct(jdj.transpose(), id);
    }
    return l;
}

/// Superoperator of rho -> U rho U^dagger.
inline Superoperator unitary_superoperator(const Matrix16 &u) {
    const Eigen::MatrixXcd ud = u;
    return Eigen::kroneckerProduct(ud.conjugate(), ud);
}

inline Matrix16 frame_unitary(const HamiltonianSpec &spec, double duration) {
    Matrix16 u = Matrix16::Zero();
    for (int i = 0; i < kDim; ++i) {
        u(i, i) = std::polar(1.0, spec.frame_energy(i) * duration);
    }
    return u;
}

/// Default step: min(2pi / (50 f_max), duration / 100).
inline double default_step(const HamiltonianSpec &spec, double duration) {
    double step = duration / 100.0;
    if (spec.max_frequency > 0.0) {
        step = std::min(step, kTwoPi / (50.0 * spec.max_frequency));
    }
    return step;
}

/// A step resolves the fastest frequency when f_max * step <= 2pi / 10.
inline bool step_resolves(const HamiltonianSpec &spec, double step) {
    return spec.max_frequency * step <= kTwoPi / 10.0 * (1.0 + 1e-12);
}

namespace detail {

inline Superoperator matrix_power(Superoperator base, std::uint64_t n) {
    Superoperator result = Superoperator::Identity(base.rows(), base.cols());
    while (n > 0) {
        if (n & 1U) {
            result = (result * base).eval();
        }
        n >>= 1U;
        if (n > 0) {
            base = (base * base).eval();
        }
    }
    return result;
}

}  // namespace detail

/// Propagator for `duration` under `spec` with a fixed step, including the
/// removal of the pulse-frame phase. step <= 0 selects default_step.
inline Superoperator segment_propagator(const HamiltonianSpec &spec, double duration, double step = 0.0) {
    if (!(duration >= 0.0)) {
        throw ValidationError("duration", "must be non-negative");
    }
    if (duration == 0.0) {
        return Superoperator::Identity(kSuperDim, kSuperDim);
    }
    if (step <= 0.0) {
        step = default_step(spec, duration);
    }
    if (!step_resolves(spec, step)) {
        throw ValidationError("step", "integration step " + std::to_string(step) +
                                          " s does not resolve the fastest frequency " +
                                          std::to_string(spec.max_frequency) + " rad/s");
    }
    const Superoperator l = liouvillian(spec);
    const auto steps = static_cast<std::uint64_t>(std::floor(duration / step * (1.0 + 1e-12)));
    const double remainder = std::max(0.0, duration - static_cast<double>(steps) * step);
    Superoperator p = detail::matrix_power((l * step).exp(), steps);
    if (remainder > 1e-15 * duration) {
        p = ((l * remainder).exp() * p).eval();
    }
    if (spec.frame_energy.cwiseAbs().maxCoeff() > 0.0) {
        p = (unitary_superoperator(frame_unitary(spec, duration)) * p).eval();
    }
    return p;
}

inline TwoAtomDensityMatrix propagate(const Superoperator &s, const TwoAtomDensityMatrix &rho) {
    Eigen::Map<const Eigen::VectorXcd> v(rho.matrix().data(), kSuperDim);
    const Eigen::VectorXcd out = s * v;
    Matrix16 m = Eigen::Map<const Matrix16>(out.data());
    m = 0.5 * (m + m.adjoint()).eval();
    return TwoAtomDensityMatrix(m);
}

/// Evolves rho under a constant Hamiltonian and dissipators for `duration`.
inline TwoAtomDensityMatrix evolve(const TwoAtomDensityMatrix &rho, const HamiltonianSpec &spec, double duration,
                                   double step = 0.0) {
    return propagate(segment_propagator(spec, duration, step), rho);
}

/// Convenience form: Hamiltonian plus radiative decay at 1/tau (tau may be inf).
inline TwoAtomDensityMatrix evolve(const TwoAtomDensityMatrix &rho, const Matrix16 &h, double tau, double duration,
                                   double step) {
    HamiltonianSpec spec;
    spec.h = h;
    spec.jumps = radiative_jumps(tau);
    Eigen::SelfAdjointEigenSolver<Matrix16> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
    spec.max_frequency = es.eigenvalues().cwiseAbs().maxCoeff();
    return evolve(rho, spec, duration, step);
}

}  // namespace rydberg::dynamics
