#pragma once

// Piecewise-constant pulse programs for the two-atom register and the
// blockade gate protocols built from them.

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "rydberg/dynamics/state.hpp"
#include "rydberg/error.hpp"
#include "rydberg/units.hpp"

namespace rydberg::dynamics {

enum class Atom { control, target, both };

/// Which qubit state the laser couples to |r>. The other qubit state is the
/// spectator.
enum class Transition { one_rydberg, zero_rydberg };

struct Pulse {
    Atom atom = Atom::control;
    Transition transition = Transition::one_rydberg;
    double rabi = 0.0;      // rad/s
    double detuning = 0.0;  // rad/s
    double phase = 0.0;     // optical phase, rad
    double area = 0.0;      // rad

    double duration() const { return area / rabi; }
};

struct Gap {
    double duration = 0.0;  // s
};

/// Ideal instantaneous operation on the {|0>, |1>} subspace of one atom
/// (identity on |r>, |d>). `frame` marks bookkeeping corrections that are
/// not physical pulses.
struct LocalGate {
    Atom atom = Atom::target;
    Matrix2 u = Matrix2::Identity();
    std::string label;
    bool frame = false;
};

using SequenceStep = std::variant<Pulse, Gap, LocalGate>;

struct PulseSequence {
    std::string name;
    std::vector<SequenceStep> steps;

    double duration() const {
        double t = 0.0;
        for (const auto &s : steps) {
            if (auto *p = std::get_if<Pulse>(&s)) {
                t += p->duration();
            } else if (auto *g = std::get_if<Gap>(&s)) {
                t += g->duration;
            }
        }
        return t;
    }

    /// The same program without the frame corrections.
    PulseSequence without_frame() const {
        PulseSequence out{name + " (raw)", {}};
        for (const auto &s : steps) {
            if (auto *g = std::get_if<LocalGate>(&s); g && g->frame) {
                continue;
            }
            out.steps.push_back(s);
        }
        return out;
    }

    void validate() const {
        if (steps.empty()) {
            throw ValidationError("sequence", "empty pulse sequence");
        }
        for (const auto &s : steps) {
            if (auto *p = std::get_if<Pulse>(&s)) {
                if (!(p->rabi > 0.0) || !std::isfinite(p->rabi)) {
                    throw ValidationError("pulse.rabi", "must be finite and positive");
                }
                if (!(p->area > 0.0)) {
                    throw ValidationError("pulse.area", "must be positive");
                }
            } else if (auto *g = std::get_if<Gap>(&s)) {
                if (!(g->duration > 0.0)) {
                    throw ValidationError("gap.duration", "must be positive");
                }
            } else if (auto *l = std::get_if<LocalGate>(&s)) {
                if (!(l->u.adjoint() * l->u).isApprox(Matrix2::Identity(), 1e-12)) {
                    throw ValidationError("local_gate", l->label + " is not unitary");
                }
            }
        }
    }
};

// Single-qubit matrices on {|0>, |1>}.
inline Matrix2 rotation_y(double angle) {
    Matrix2 m;
    const double c = std::cos(0.5 * angle), s = std::sin(0.5 * angle);
    m << c, -s, s, c;
    return m;
}
inline Matrix2 pauli_x() {
    Matrix2 m;
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}
inline Matrix2 pauli_z() {
    Matrix2 m;
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}
inline Matrix2 phase_gate(double phi) {
    Matrix2 m;
    m << 1.0, 0.0, 0.0, std::polar(1.0, phi);
    return m;
}

inline Pulse rydberg_pulse(Atom atom, Transition tr, double rabi, double area, double phase = 0.0) {
    return Pulse{atom, tr, rabi, 0.0, phase, area};
}

/// pi (control) - 2pi (target) - pi (control), all on 1 <-> r. In the ideal
/// limit the computational map is diag(1, -1, -1, -1).
inline PulseSequence cz_sequence(double rabi) {
    PulseSequence seq{"cz", {}};
    seq.steps.emplace_back(rydberg_pulse(Atom::control, Transition::one_rydberg, rabi, kPi));
    seq.steps.emplace_back(rydberg_pulse(Atom::target, Transition::one_rydberg, rabi, kTwoPi));
    seq.steps.emplace_back(rydberg_pulse(Atom::control, Transition::one_rydberg, rabi, kPi));
    return seq;
}

/// Same gate with the roles of the atoms exchanged.
inline PulseSequence cz_sequence_swapped_roles(double rabi) {
    PulseSequence seq{"cz (roles swapped)", {}};
    seq.steps.emplace_back(rydberg_pulse(Atom::target, Transition::one_rydberg, rabi, kPi));
    seq.steps.emplace_back(rydberg_pulse(Atom::control, Transition::one_rydberg, rabi, kTwoPi));
    seq.steps.emplace_back(rydberg_pulse(Atom::target, Transition::one_rydberg, rabi, kPi));
    return seq;
}

/// C_Z wrapped in pi/2 rotations of the target qubit. The Z(control) Z(target)
/// frame turns diag(1,-1,-1,-1) into diag(1,1,1,-1), so the total map is
/// Ry(pi/2)_t CZ Ry(-pi/2)_t = CNOT.
inline PulseSequence cnot_hadamard_variant(double rabi) {
    PulseSequence seq{"cnot-h", {}};
    seq.steps.emplace_back(LocalGate{Atom::target, rotation_y(-0.5 * kPi), "Ry(-pi/2)", false});
    for (auto &s : cz_sequence(rabi).steps) {
        seq.steps.push_back(s);
    }
    seq.steps.emplace_back(LocalGate{Atom::both, pauli_z(), "Z frame", true});
    seq.steps.emplace_back(LocalGate{Atom::target, rotation_y(0.5 * kPi), "Ry(pi/2)", false});
    return seq;
}

/// Controlled amplitude swap: control pi on 1<->r, target pi(0<->r) pi(1<->r)
/// pi(0<->r), control pi on 1<->r. The raw map swaps the target when the
/// control is |0> (|0> -> -|1>, |1> -> -|0>) and gives -1 when the control is
/// |1>. The recorded frame (-X on the target) turns it into CNOT.
inline PulseSequence cnot_amplitude_swap(double rabi) {
    PulseSequence seq{"cnot-swap", {}};
    seq.steps.emplace_back(rydberg_pulse(Atom::control, Transition::one_rydberg, rabi, kPi));
    seq.steps.emplace_back(rydberg_pulse(Atom::target, Transition::zero_rydberg, rabi, kPi));
    seq.steps.emplace_back(rydberg_pulse(Atom::target, Transition::one_rydberg, rabi, kPi));
    seq.steps.emplace_back(rydberg_pulse(Atom::target, Transition::zero_rydberg, rabi, kPi));
    seq.steps.emplace_back(rydberg_pulse(Atom::control, Transition::one_rydberg, rabi, kPi));
    seq.steps.emplace_back(LocalGate{Atom::target, Matrix2(-pauli_x()), "-X frame", true});
    return seq;
}

enum class CnotProtocol { hadamard, amplitude_swap };

inline PulseSequence cnot_sequence(CnotProtocol protocol, double rabi) {
    return protocol == CnotProtocol::hadamard ? cnot_hadamard_variant(rabi) : cnot_amplitude_swap(rabi);
}

// Ideal 4x4 targets over {00, 01, 10, 11}.
inline Matrix4 ideal_cz() { return Vector4(1.0, -1.0, -1.0, -1.0).asDiagonal(); }
inline Matrix4 ideal_cnot() {
    Matrix4 m = Matrix4::Zero();
    m(0, 0) = 1.0;
    m(1, 1) = 1.0;
    m(3, 2) = 1.0;
    m(2, 3) = 1.0;
    return m;
}

}  // namespace rydberg::dynamics
