#pragma once

// Whole-sequence simulation and the gate / Bell-state figures of merit.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "rydberg/config.hpp"
#include "rydberg/dynamics/evolve.hpp"
#include "rydberg/dynamics/hamiltonian.hpp"
#include "rydberg/dynamics/pulse.hpp"
#include "rydberg/dynamics/state.hpp"

namespace rydberg::dynamics {

struct SequencePropagator {
    Superoperator map;
    bool blockade_capped = false;
    bool perfect_blockade = false;
};

/// Superoperator of a complete sequence. step_scale multiplies the default
/// step of every segment (1 = default).
inline SequencePropagator sequence_propagator(const DynamicsParams &params, const PulseSequence &seq,
                                              double step_scale = 1.0) {
    seq.validate();
    SequencePropagator out{Superoperator::Identity(kSuperDim, kSuperDim)};
    for (const auto &step : seq.steps) {
        Superoperator s;
        if (auto *p = std::get_if<Pulse>(&step)) {
            const auto spec = build_hamiltonian(params, *p);
            out.blockade_capped |= spec.blockade_capped;
            out.perfect_blockade |= spec.perfect_blockade;
            s = segment_propagator(spec, p->duration(), step_scale * default_step(spec, p->duration()));
        } else if (auto *g = std::get_if<Gap>(&step)) {
            const auto spec = build_gap_hamiltonian(params);
            s = segment_propagator(spec, g->duration, step_scale * default_step(spec, g->duration));
        } else {
            s = unitary_superoperator(detail::local_gate_matrix(std::get<LocalGate>(step)));
        }
        out.map = (s * out.map).eval();
    }
    return out;
}

inline TwoAtomDensityMatrix simulate(const DynamicsParams &params, const PulseSequence &seq,
                                     const TwoAtomDensityMatrix &rho0) {
    return propagate(sequence_propagator(params, seq).map, rho0);
}

/// Inputs averaged by gate_error: the four computational states and the
/// four product states (|0> +/- |1>)/sqrt2 (x) (|0> +/- |1>)/sqrt2.
inline std::vector<Vector4> gate_error_inputs() {
    std::vector<Vector4> in;
    for (int k = 0; k < 4; ++k) {
        Vector4 v = Vector4::Zero();
        v(k) = 1.0;
        in.push_back(v);
    }
    for (double sc : {1.0, -1.0}) {
        for (double st : {1.0, -1.0}) {
            Vector4 v(1.0, st, sc, sc * st);
            in.push_back(v / 2.0);
        }
    }
    return in;
}

struct GateErrorResult {
    double error = 0.0;             // 1 - mean fidelity to the ideal outputs
    double calibrated_error = 0.0;  // same, after removing the output phase frame
    std::array<double, 4> phase_frame{};  // rad, per computational output state
    double leakage = 0.0;           // mean population outside the computational space
    bool blockade_capped = false;
};

/// Fidelity-based gate error of `seq` against the 4x4 target `ideal`.
///
/// `calibrated_error` compares against D * ideal, where D = diag(exp(i theta_k))
/// is the deterministic output phase frame read off the simulated |++>
/// output. It removes calibratable phases (light shifts, blockade phase on
/// |11>) and leaves population errors and decoherence.
inline GateErrorResult gate_error(const DynamicsParams &params, const PulseSequence &seq, const Matrix4 &ideal) {
    const auto prop = sequence_propagator(params, seq);
    GateErrorResult res;
    res.blockade_capped = prop.blockade_capped;

    const Vector4 plus_plus = Vector4::Constant(0.5);
    const auto rho_pp = propagate(prop.map, TwoAtomDensityMatrix::pure(embed(plus_plus)));
    const Vector4 ideal_pp = ideal * plus_plus;
    const Matrix4 block = rho_pp.computational_block();
    Vector4 frame = Vector4::Ones();
    int ref = 0;
    for (int k = 1; k < 4; ++k) {
        if (std::abs(ideal_pp(k)) > std::abs(ideal_pp(ref))) ref = k;
    }
    for (int k = 0; k < 4; ++k) {
        const cd expected = ideal_pp(k) * std::conj(ideal_pp(ref));
        if (std::abs(expected) > 1e-9 && std::abs(block(k, ref)) > 1e-300) {
            const double theta = std::arg(block(k, ref) * std::conj(expected));
            frame(k) = std::polar(1.0, theta);
            res.phase_frame[k] = theta;
        }
    }
    const Matrix4 calibrated = frame.asDiagonal() * ideal;

    const auto inputs = gate_error_inputs();
    double f_raw = 0.0, f_cal = 0.0, leak = 0.0;
    for (const auto &psi : inputs) {
        const auto rho = propagate(prop.map, TwoAtomDensityMatrix::pure(embed(psi)));
        f_raw += state_fidelity(rho, embed(Vector4(ideal * psi)));
        f_cal += state_fidelity(rho, embed(Vector4(calibrated * psi)));
        leak += 1.0 - rho.computational_population();
    }
    const double n = static_cast<double>(inputs.size());
    res.error = 1.0 - f_raw / n;
    res.calibrated_error = 1.0 - f_cal / n;
    res.leakage = leak / n;
    return res;
}

/// Effective 4x4 map on the computational subspace, with the global phase
/// fixed so that the largest entry of the first column is real positive.
/// Exact for unitary evolution; for dissipative evolution it is the map of
/// the surviving amplitudes as seen through coherences with |00>.
inline Matrix4 effective_gate_matrix(const DynamicsParams &params, const PulseSequence &seq) {
    const auto prop = sequence_propagator(params, seq);
    const int i00 = kComputational[0];
    Matrix16 ref = Matrix16::Zero();
    ref(i00, i00) = 1.0;
    const Matrix16 out_ref = propagate(prop.map, TwoAtomDensityMatrix(ref)).matrix();
    // out_ref = c0 c0^dagger for the image c0 of |00>.
    Eigen::SelfAdjointEigenSolver<Matrix16> es(out_ref);
    Vector16 c0 = es.eigenvectors().col(kDim - 1) * std::sqrt(std::max(0.0, es.eigenvalues()(kDim - 1)));
    Eigen::Index imax = 0;
    c0.cwiseAbs().maxCoeff(&imax);
    c0 *= std::polar(1.0, -std::arg(c0(imax)));

    Matrix4 m;
    const double norm2 = c0.squaredNorm();
    for (int k = 0; k < 4; ++k) {
        Matrix16 x = Matrix16::Zero();
        x(kComputational[k], i00) = 1.0;
        Eigen::Map<const Eigen::VectorXcd> v(x.data(), kSuperDim);
        const Eigen::VectorXcd out = prop.map * v;
        const Matrix16 image = Eigen::Map<const Matrix16>(out.data());
        const Vector16 col = image * c0 / norm2;  // U|k> (U|00>)^dag c0 / |c0|^2
        for (int j = 0; j < 4; ++j) {
            m(j, k) = col(kComputational[j]);
        }
    }
    return m;
}

enum class BellVariant { b1, b2 };

inline Vector4 bell_target(BellVariant v) { return v == BellVariant::b1 ? bell_b1() : bell_b2(); }

/// Control in (|0> + i|1>)/sqrt2, target in |0> (B1) or |1> (B2), then the
/// CNOT, then the local phase diag(1, -i) on the control. Ideally this gives
/// |B1> = (|00> + |11>)/sqrt2 or |B2> = (|01> + |10>)/sqrt2.
inline PulseSequence bell_sequence(CnotProtocol protocol, double rabi) {
    PulseSequence seq = cnot_sequence(protocol, rabi);
    seq.name = "bell/" + seq.name;
    seq.steps.emplace_back(LocalGate{Atom::control, phase_gate(-0.5 * kPi), "S^dagger frame", true});
    return seq;
}

inline TwoAtomDensityMatrix bell_input(BellVariant v) {
    const auto control = atom_state(1.0 / std::sqrt(2.0), cd(0.0, 1.0 / std::sqrt(2.0)));
    const auto target = v == BellVariant::b1 ? atom_state(1.0, 0.0) : atom_state(0.0, 1.0);
    return TwoAtomDensityMatrix::pure(product_state(control, target));
}

inline TwoAtomDensityMatrix bell_prep(const DynamicsParams &params, double rabi, BellVariant variant,
                                      CnotProtocol protocol = CnotProtocol::hadamard) {
    return simulate(params, bell_sequence(protocol, rabi), bell_input(variant));
}

inline TwoAtomDensityMatrix bell_prep(const ExperimentConfig &cfg, BellVariant variant,
                                      CnotProtocol protocol = CnotProtocol::hadamard) {
    return bell_prep(DynamicsParams::from_config(cfg), cfg.laser.rabi, variant, protocol);
}

}  // namespace rydberg::dynamics
