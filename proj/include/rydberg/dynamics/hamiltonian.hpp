#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rydberg/budget.hpp"
#include "rydberg/config.hpp"
#include "rydberg/dynamics/pulse.hpp"
#include "rydberg/dynamics/state.hpp"

namespace rydberg::dynamics {

/// Physical inputs of the density-matrix model. Any of blockade, omega_hf
/// and tau may be +inf (perfect blockade, no spectator leakage, no decay).
struct DynamicsParams {
    double blockade = kInfinity;  // rad/s
    double omega_hf = kInfinity;  // rad/s
    double tau = kInfinity;       // s
    double scattering_probability = 0.0;  // intermediate-level emission per pi pulse
    bool spectator_coupling = true;
    double blockade_cap = 100.0;  // B in H is capped at blockade_cap * Omega

    static DynamicsParams from_config(const ExperimentConfig &cfg) {
        DynamicsParams p;
        p.blockade = cfg.blockade_shift();
        p.omega_hf = cfg.species.omega_hf;
        p.tau = cfg.sim.radiative_decay ? cfg.level.tau : kInfinity;
        p.spectator_coupling = cfg.sim.spectator_coupling;
        if (cfg.sim.intermediate_scattering) {
            p.scattering_probability = spont_emission_prob(cfg.laser.rabi, cfg.laser.rabi_single, cfg.laser.gamma_p);
        }
        return p;
    }

    static DynamicsParams ideal() { return DynamicsParams{}; }
};

/// Hamiltonian and dissipators for one pulse (or gap).
struct HamiltonianSpec {
    Matrix16 h = Matrix16::Zero();   // rad/s, in the pulse frame
    std::vector<Matrix16> jumps;     // Lindblad operators (sqrt(rate) included)
    Eigen::Matrix<double, 16, 1> frame_energy = Eigen::Matrix<double, 16, 1>::Zero();
    double max_frequency = 0.0;      // rad/s, sets the integration step
    bool blockade_capped = false;
    bool perfect_blockade = false;
};

namespace detail {

inline bool addresses(Atom which, int atom) {
    return which == Atom::both || (which == Atom::control && atom == 0) || (which == Atom::target && atom == 1);
}

// |a><b| acting on one atom of the pair, identity on the other.
inline Matrix16 single_atom_op(int atom, int a, int b) {
    Matrix16 m = Matrix16::Zero();
    for (int other = 0; other < kLevels; ++other) {
        if (atom == 0) {
            m(kLevels * a + other, kLevels * b + other) = 1.0;
        } else {
            m(kLevels * other + a, kLevels * other + b) = 1.0;
        }
    }
    return m;
}

inline Matrix16 local_gate_matrix(const LocalGate &g) {
    Eigen::Matrix<cd, 4, 4> u = Eigen::Matrix<cd, 4, 4>::Identity();
    u.topLeftCorner<2, 2>() = g.u;
    const Eigen::Matrix<cd, 4, 4> id = Eigen::Matrix<cd, 4, 4>::Identity();
    const Eigen::Matrix<cd, 4, 4> uc = addresses(g.atom, 0) ? u : id;
    const Eigen::Matrix<cd, 4, 4> ut = addresses(g.atom, 1) ? u : id;
    Matrix16 m;
    for (int c1 = 0; c1 < kLevels; ++c1)
        for (int t1 = 0; t1 < kLevels; ++t1)
            for (int c2 = 0; c2 < kLevels; ++c2)
                for (int t2 = 0; t2 < kLevels; ++t2)
                    m(kLevels * c1 + t1, kLevels * c2 + t2) = uc(c1, c2) * ut(t1, t2);
    return m;
}

}  // namespace detail

/// Radiative decay |r> -> |d> on each atom, rate 1/tau.
inline std::vector<Matrix16> radiative_jumps(double tau) {
    std::vector<Matrix16> jumps;
    if (std::isfinite(tau)) {
        const double amp = std::sqrt(1.0 / tau);
        const int r = static_cast<int>(Level::rydberg), d = static_cast<int>(Level::sink);
        for (int atom = 0; atom < 2; ++atom) {
            jumps.push_back(amp * detail::single_atom_op(atom, d, r));
        }
    }
    return jumps;
}

/// Hamiltonian for a pulse. The addressed transition is driven resonantly
/// (up to the pulse detuning) with coupling Omega/2; the spectator qubit
/// state couples to |r> with the same Omega/2 but detuned by omega_hf. The
/// spectator detuning is carried as a static energy in a pulse frame whose
/// phase (`frame_energy`) is removed after the pulse. |rr> is shifted by B,
/// capped at blockade_cap * Omega; B = +inf removes every coupling into |rr>.
inline HamiltonianSpec build_hamiltonian(const DynamicsParams &params, const Pulse &pulse) {
    HamiltonianSpec spec;
    const int r = static_cast<int>(Level::rydberg), d = static_cast<int>(Level::sink);
    const bool one_r = pulse.transition == Transition::one_rydberg;
    const int driven = one_r ? 1 : 0;
    const int spectator = one_r ? 0 : 1;
    // The spectator + photon sits below |r> by omega_hf for 1<->r pulses and
    // above it for 0<->r pulses.
    const double spectator_energy = one_r ? -params.omega_hf : params.omega_hf;
    const bool use_spectator = params.spectator_coupling && std::isfinite(params.omega_hf);
    const cd coupling = 0.5 * pulse.rabi * std::polar(1.0, pulse.phase);

    spec.max_frequency = std::max(pulse.rabi, std::abs(pulse.detuning));
    for (int atom = 0; atom < 2; ++atom) {
        if (!detail::addresses(pulse.atom, atom)) {
            continue;
        }
        const Matrix16 up = detail::single_atom_op(atom, r, driven);
        spec.h += coupling * up + std::conj(coupling) * up.adjoint();
        spec.h -= pulse.detuning * detail::single_atom_op(atom, r, r);
        if (use_spectator) {
            const Matrix16 leak = detail::single_atom_op(atom, r, spectator);
            spec.h += coupling * leak + std::conj(coupling) * leak.adjoint();
            const Matrix16 n_spec = detail::single_atom_op(atom, spectator, spectator);
            spec.h += spectator_energy * n_spec;
            spec.frame_energy += spectator_energy * n_spec.diagonal().real();
            spec.max_frequency = std::max(spec.max_frequency, params.omega_hf);
        }
        if (params.scattering_probability > 0.0) {
            // Emission from the intermediate level while the atom is driven:
            // both the coupled ground state and |r> scatter at P_se Omega / pi.
            const double amp = std::sqrt(params.scattering_probability * pulse.rabi / kPi);
            spec.jumps.push_back(amp * detail::single_atom_op(atom, d, driven));
            spec.jumps.push_back(amp * detail::single_atom_op(atom, d, r));
        }
    }

    const int rr = index(Level::rydberg, Level::rydberg);
    if (std::isinf(params.blockade)) {
        spec.perfect_blockade = true;
        spec.h.row(rr).setZero();
        spec.h.col(rr).setZero();
    } else {
        double b = params.blockade;
        if (b > params.blockade_cap * pulse.rabi) {
            b = params.blockade_cap * pulse.rabi;
            spec.blockade_capped = true;
        }
        spec.h(rr, rr) += b;
        spec.max_frequency = std::max(spec.max_frequency, b);
    }

    for (auto &j : radiative_jumps(params.tau)) {
        spec.jumps.push_back(std::move(j));
    }
    return spec;
}

/// Free evolution between pulses: blockade shift and decay only.
inline HamiltonianSpec build_gap_hamiltonian(const DynamicsParams &params) {
    HamiltonianSpec spec;
    const int rr = index(Level::rydberg, Level::rydberg);
    if (std::isfinite(params.blockade)) {
        spec.h(rr, rr) = params.blockade;
        spec.max_frequency = params.blockade;
    }
    spec.jumps = radiative_jumps(params.tau);
    return spec;
}

}  // namespace rydberg::dynamics
