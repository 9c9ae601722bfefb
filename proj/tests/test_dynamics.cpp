#include <gtest/gtest.h>

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <sstream>

#include "rydberg/dynamics/protocols.hpp"
#include "rydberg/fixtures.hpp"

using namespace rydberg;
using namespace rydberg::dynamics;

namespace {

const double kRabi = units::mhz_to_rad(30.0);
const double kTau = units::us_to_s(860.0);

int idx(Level c, Level t) { return index(c, t); }

Vector16 basis(int i) {
    Vector16 v = Vector16::Zero();
    v(i) = 1.0;
    return v;
}

// Max entry-wise distance between m and target, after removing a global
// phase fixed on the largest entry of the target.
double distance_up_to_phase(const Matrix4 &m, const Matrix4 &target) {
    Eigen::Index r = 0, c = 0;
    target.cwiseAbs().maxCoeff(&r, &c);
    const cd phase = std::polar(1.0, std::arg(target(r, c)) - std::arg(m(r, c)));
    return (phase * m - target).cwiseAbs().maxCoeff();
}

DynamicsParams finite_params(double blockade, double omega_hf = kInfinity, double tau = kInfinity) {
    DynamicsParams p;
    p.blockade = blockade;
    p.omega_hf = omega_hf;
    p.tau = tau;
    return p;
}

// Single-atom 4x4 operator on {0, 1, r, d}.
using Matrix4a = Eigen::Matrix<cd, 4, 4>;
Matrix16 kron(const Matrix4a &a, const Matrix4a &b) { return Eigen::kroneckerProduct(a, b).eval(); }

}  // namespace

// --- evolution primitives ---

TEST(Evolve, ZeroHamiltonianNoDecayIsIdentity) {
    const auto rho = TwoAtomDensityMatrix::pure(product_state(atom_state(0.6, cd(0.0, 0.8)), atom_state(1.0, 0.0)));
    const auto out = evolve(rho, Matrix16::Zero(), kInfinity, 1e-6, 1e-8);
    EXPECT_LT((out.matrix() - rho.matrix()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Evolve, RadiativeDecayToSink) {
    const int r0 = idx(Level::rydberg, Level::zero), d0 = idx(Level::sink, Level::zero);
    const auto rho = TwoAtomDensityMatrix::pure(basis(r0));
    for (double t : {1e-5, 1e-4, 5e-4, 2e-3}) {
        const auto out = evolve(rho, Matrix16::Zero(), kTau, t, t / 100.0);
        EXPECT_NEAR(out.population(r0), std::exp(-t / kTau), 1e-12);
        EXPECT_NEAR(out.population(d0), 1.0 - std::exp(-t / kTau), 1e-12);
        EXPECT_NEAR(out.trace(), 1.0, 1e-12);
    }
}

TEST(Evolve, ExactRabiOracle) {
    // Two-level solution with generalized Rabi frequency g = sqrt(W^2 + D^2):
    // P_r(t) = (W/g)^2 sin^2(g t / 2).
    for (double detuning : {0.0, 0.3 * kRabi, -1.7 * kRabi}) {
        Pulse p = rydberg_pulse(Atom::control, Transition::one_rydberg, kRabi, kPi);
        p.detuning = detuning;
        const auto spec = build_hamiltonian(DynamicsParams::ideal(), p);
        const auto rho = TwoAtomDensityMatrix::pure(basis(idx(Level::one, Level::zero)));
        const double g = std::hypot(kRabi, detuning);
        for (double t : {0.1 / kRabi, 1.0 / kRabi, kPi / kRabi, 7.3 / kRabi}) {
            const auto out = evolve(rho, spec, t);
            const double s = std::sin(0.5 * g * t);
            EXPECT_NEAR(out.population(idx(Level::rydberg, Level::zero)), kRabi * kRabi / (g * g) * s * s, 1e-10);
        }
    }
}

TEST(Evolve, ResonantPiPulseGivesMinusI) {
    const auto spec = build_hamiltonian(DynamicsParams::ideal(),
                                        rydberg_pulse(Atom::control, Transition::one_rydberg, kRabi, kPi));
    const double s = 1.0 / std::sqrt(2.0);
    const auto rho = TwoAtomDensityMatrix::pure(product_state(atom_state(s, s), atom_state(1.0, 0.0)));
    const auto out = evolve(rho, spec, kPi / kRabi);
    EXPECT_GT(out.population(idx(Level::rydberg, Level::zero)), 0.5 - 1e-10);
    // (|0> + |1>)/sqrt2 -> (|0> - i|r>)/sqrt2.
    Vector16 expect = Vector16::Zero();
    expect(idx(Level::zero, Level::zero)) = s;
    expect(idx(Level::rydberg, Level::zero)) = cd(0.0, -s);
    EXPECT_GT(state_fidelity(out, expect), 1.0 - 1e-9);
}

TEST(Evolve, RejectsCoarseStep) {
    const auto spec = build_hamiltonian(DynamicsParams::ideal(),
                                        rydberg_pulse(Atom::control, Transition::one_rydberg, kRabi, kPi));
    EXPECT_THROW(segment_propagator(spec, kPi / kRabi, 1.0 / kRabi), ValidationError);
    EXPECT_THROW(segment_propagator(spec, -1.0), ValidationError);
}

// --- Hamiltonian structure ---

TEST(Hamiltonian, ControlPulseLeavesTargetAlone) {
    const auto spec = build_hamiltonian(finite_params(0.0),
                                        rydberg_pulse(Atom::control, Transition::one_rydberg, kRabi, kPi, 0.4));
    Matrix4a hc = Matrix4a::Zero();
    const cd c = 0.5 * kRabi * std::polar(1.0, 0.4);
    hc(2, 1) = c;
    hc(1, 2) = std::conj(c);
    EXPECT_LT((spec.h - kron(hc, Matrix4a::Identity())).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_TRUE(spec.h.isApprox(spec.h.adjoint(), 1e-14));
}

TEST(Hamiltonian, ZeroBlockadeIsSeparable) {
    const double hf = 50.0 * kRabi;
    Pulse p = rydberg_pulse(Atom::both, Transition::one_rydberg, kRabi, kPi, 0.0);
    const auto spec = build_hamiltonian(finite_params(0.0, hf), p);
    Matrix4a h1 = Matrix4a::Zero();
    h1(2, 1) = h1(1, 2) = 0.5 * kRabi;  // driven 1 <-> r
    h1(2, 0) = h1(0, 2) = 0.5 * kRabi;  // spectator 0 <-> r
    h1(0, 0) = -hf;                     // spectator below |r> by omega_hf
    const Matrix4a id = Matrix4a::Identity();
    EXPECT_LT((spec.h - kron(h1, id) - kron(id, h1)).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Hamiltonian, BlockadeShiftsDoublyExcitedStateOnly) {
    const Pulse p = rydberg_pulse(Atom::target, Transition::one_rydberg, kRabi, kTwoPi);
    const double b = 20.0 * kRabi;
    const auto with = build_hamiltonian(finite_params(b), p);
    const auto without = build_hamiltonian(finite_params(0.0), p);
    Matrix16 diff = with.h - without.h;
    const int rr = idx(Level::rydberg, Level::rydberg);
    EXPECT_EQ(diff(rr, rr), cd(b, 0.0));
    diff(rr, rr) = 0.0;
    EXPECT_EQ(diff.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_FALSE(with.blockade_capped);
}

TEST(Hamiltonian, BlockadeCapAndPerfectLimit) {
    const Pulse p = rydberg_pulse(Atom::target, Transition::one_rydberg, kRabi, kTwoPi);
    const auto capped = build_hamiltonian(finite_params(1e3 * kRabi), p);
    const int rr = idx(Level::rydberg, Level::rydberg);
    EXPECT_TRUE(capped.blockade_capped);
    EXPECT_NEAR(capped.h(rr, rr).real(), 100.0 * kRabi, 1e-3);
    const auto perfect = build_hamiltonian(DynamicsParams::ideal(), p);
    EXPECT_TRUE(perfect.perfect_blockade);
    EXPECT_EQ(perfect.h.row(rr).cwiseAbs().sum() + perfect.h.col(rr).cwiseAbs().sum(), 0.0);
}

// --- ideal gate identities ---

TEST(Gates, IdealCzIsDiagonal) {
    const auto m = effective_gate_matrix(DynamicsParams::ideal(), cz_sequence(kRabi));
    EXPECT_LT(distance_up_to_phase(m, ideal_cz()), 1e-9);
    EXPECT_LT(gate_error(DynamicsParams::ideal(), cz_sequence(kRabi), ideal_cz()).error, 1e-9);
}

TEST(Gates, IdealCnotTruthTables) {
    for (auto protocol : {CnotProtocol::hadamard, CnotProtocol::amplitude_swap}) {
        const auto seq = cnot_sequence(protocol, kRabi);
        const auto prop = sequence_propagator(DynamicsParams::ideal(), seq);
        const int expected_out[4] = {0, 1, 3, 2};
        for (int k = 0; k < 4; ++k) {
            Vector4 in = Vector4::Zero();
            in(k) = 1.0;
            const auto out = propagate(prop.map, TwoAtomDensityMatrix::pure(embed(in)));
            EXPECT_GT(out.population(kComputational[expected_out[k]]), 1.0 - 1e-9) << seq.name << " input " << k;
        }
        EXPECT_LT(distance_up_to_phase(effective_gate_matrix(DynamicsParams::ideal(), seq), ideal_cnot()), 1e-9)
            << seq.name;
        EXPECT_LT(gate_error(DynamicsParams::ideal(), seq, ideal_cnot()).error, 1e-9) << seq.name;
    }
}

TEST(Gates, HadamardCnotOnSuperposedControl) {
    const double s = 1.0 / std::sqrt(2.0);
    const Vector16 in = product_state(atom_state(s, cd(0.0, s)), atom_state(1.0, 0.0));
    const auto out = simulate(DynamicsParams::ideal(), cnot_hadamard_variant(kRabi), TwoAtomDensityMatrix::pure(in));
    EXPECT_GT(state_fidelity(out, Vector4(s, 0.0, 0.0, cd(0.0, s))), 1.0 - 1e-9);
}

TEST(Gates, AmplitudeSwapRawAction) {
    const auto raw = cnot_amplitude_swap(kRabi).without_frame();
    const auto params = DynamicsParams::ideal();
    // Control |0>: target swaps.
    auto out = simulate(params, raw, TwoAtomDensityMatrix::pure(basis(idx(Level::zero, Level::zero))));
    EXPECT_GT(out.population(idx(Level::zero, Level::one)), 1.0 - 1e-9);
    // Control |1>: blockade freezes an arbitrary target state.
    const Vector16 in = product_state(atom_state(0.0, 1.0), atom_state(0.8, cd(0.36, 0.48)));
    out = simulate(params, raw, TwoAtomDensityMatrix::pure(in));
    EXPECT_GT(state_fidelity(out, in), 1.0 - 1e-9);
    // Recorded frame: raw map is CNOT up to -X on the target.
    const Matrix4 m = effective_gate_matrix(params, raw);
    Matrix4 expect = Matrix4::Zero();
    expect(1, 0) = expect(0, 1) = -1.0;
    expect(2, 2) = expect(3, 3) = -1.0;
    EXPECT_LT(distance_up_to_phase(m, expect), 1e-9);
}

TEST(Gates, NoBlockadeGivesProductOfSingleAtomMaps) {
    // Each atom independently: |1> -> -|1> after a 2pi return.
    const auto m = effective_gate_matrix(finite_params(0.0), cz_sequence(kRabi));
    const Matrix4 zz = Vector4(1.0, -1.0, -1.0, 1.0).asDiagonal();
    EXPECT_LT(distance_up_to_phase(m, zz), 1e-9);
}

TEST(Gates, RoleSwapGivesSamePhasePattern) {
    const auto params = finite_params(15.0 * kRabi);
    const Matrix4 a = effective_gate_matrix(params, cz_sequence(kRabi));
    const Matrix4 b = effective_gate_matrix(params, cz_sequence_swapped_roles(kRabi));
    for (int k = 0; k < 4; ++k) {
        EXPECT_NEAR(std::arg(a(k, k) / a(0, 0)), std::arg(b(k, k) / b(0, 0)), 1e-9);
        EXPECT_NEAR(std::abs(a(k, k)), std::abs(b(k, k)), 1e-9);
    }
}

// --- state fidelity ---

TEST(StateFidelity, TrivialCases) {
    const Vector4 b1 = bell_b1();
    const auto pure = TwoAtomDensityMatrix::pure(embed(b1));
    EXPECT_NEAR(state_fidelity(pure, b1), 1.0, 1e-15);
    Matrix16 mixed = Matrix16::Zero();
    for (int k : kComputational) mixed(k, k) = 0.25;
    EXPECT_NEAR(state_fidelity(TwoAtomDensityMatrix(mixed), b1), 0.25, 1e-15);
    Matrix16 classical = Matrix16::Zero();
    classical(kComputational[0], kComputational[0]) = classical(kComputational[3], kComputational[3]) = 0.5;
    EXPECT_NEAR(state_fidelity(TwoAtomDensityMatrix(classical), b1), 0.5, 1e-15);
    EXPECT_THROW(state_fidelity(pure, Eigen::VectorXcd::Ones(3)), ValidationError);
}

TEST(MatrixText, RoundTrip) {
    const Matrix4 m = effective_gate_matrix(DynamicsParams::ideal(), cnot_hadamard_variant(kRabi));
    std::stringstream ss;
    write_matrix(ss, m, "cnot");
    const Eigen::MatrixXcd back = read_matrix(ss);
    EXPECT_EQ(back, Eigen::MatrixXcd(m));
    std::istringstream bad("2 2\n1 0 0 0\n");
    EXPECT_THROW(read_matrix(bad), ValidationError);
}

// --- invariants ---

TEST(Invariants, DensityMatrixStaysPhysical) {
    const auto params = DynamicsParams::from_config(fixtures::operating_point_150s({"sim.intermediate_scattering=true"}));
    const auto prop = sequence_propagator(params, cnot_hadamard_variant(kRabi));
    for (const auto &psi : gate_error_inputs()) {
        const auto out = propagate(prop.map, TwoAtomDensityMatrix::pure(embed(psi)));
        EXPECT_TRUE(out.is_valid()) << out.hermiticity_error() << " " << out.trace() << " " << out.min_eigenvalue();
        EXPECT_LT(std::abs(out.trace() - 1.0), 1e-9);
    }
}

TEST(Invariants, UnitaryEvolutionConservesPurity) {
    const auto params = finite_params(12.0 * kRabi, 40.0 * kRabi);
    const auto prop = sequence_propagator(params, cnot_amplitude_swap(kRabi));
    for (const auto &psi : gate_error_inputs()) {
        const auto out = propagate(prop.map, TwoAtomDensityMatrix::pure(embed(psi)));
        EXPECT_NEAR(out.purity(), 1.0, 1e-9);
        EXPECT_NEAR(out.trace(), 1.0, 1e-9);
    }
}

TEST(Invariants, StepHalvingConverged) {
    const auto params = finite_params(25.0 * kRabi, 50.0 * kRabi, kTau);
    const auto seq = cz_sequence(kRabi);
    const auto a = sequence_propagator(params, seq, 1.0).map;
    const auto b = sequence_propagator(params, seq, 0.5).map;
    for (const auto &psi : gate_error_inputs()) {
        const auto in = TwoAtomDensityMatrix::pure(embed(psi));
        const Vector16 target = embed(Vector4(ideal_cz() * psi));
        EXPECT_LT(std::abs(state_fidelity(propagate(a, in), target) - state_fidelity(propagate(b, in), target)),
                  1e-8);
    }
}

TEST(Invariants, InsensitiveToCappedBlockade) {
    auto params = finite_params(1e3 * kRabi, kInfinity, kTau);
    const auto e100 = gate_error(params, cz_sequence(kRabi), ideal_cz());
    params.blockade_cap = 200.0;
    const auto e200 = gate_error(params, cz_sequence(kRabi), ideal_cz());
    EXPECT_TRUE(e100.blockade_capped);
    EXPECT_NEAR(e200.calibrated_error / e100.calibrated_error, 1.0, 0.05);
}

// --- error model cross-checks ---

TEST(ErrorModel, RadiativeTermWithinFactorTwo) {
    const double expect = 7.0 * kPi / (4.0 * kRabi * kTau);
    EXPECT_NEAR(expect, 3.4e-5, 0.05e-5);
    const auto params = finite_params(kInfinity, kInfinity, kTau);
    for (const auto &seq : {cz_sequence(kRabi), cnot_hadamard_variant(kRabi)}) {
        const Matrix4 ideal = seq.name == "cz" ? ideal_cz() : ideal_cnot();
        const double e = gate_error(params, seq, ideal).error;
        EXPECT_GT(e, 0.5 * expect) << seq.name;
        EXPECT_LT(e, 2.0 * expect) << seq.name;
    }
}

TEST(ErrorModel, BlockadeLeakageAveragedOverFringe) {
    // The residual |11> excitation oscillates with B/Omega; averaged over one
    // fringe period it is Omega^2/(8 B^2).
    for (double x0 : {10.0, 20.0}) {
        double sim = 0.0, formula = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double x = x0 + (i + 0.5) / 4.0;
            const auto r = gate_error(finite_params(x * kRabi), cz_sequence(kRabi), ideal_cz());
            sim += r.calibrated_error;
            formula += 1.0 / (8.0 * x * x);
            EXPECT_NEAR(r.leakage, r.calibrated_error, 0.05 * r.calibrated_error + 1e-12);
        }
        EXPECT_NEAR(sim / formula, 1.0, 0.2) << "B/Omega ~ " << x0;
    }
}

TEST(ErrorModel, BlockadePhaseIsCalibratable) {
    // The raw error carries the |11> light shift pi Omega / (2B); with the
    // eight-input average that is 3 phi^2 / 32.
    const double x = 20.0;
    const auto r = gate_error(finite_params(x * kRabi), cz_sequence(kRabi), ideal_cz());
    const double phi = kPi / (2.0 * x);
    EXPECT_NEAR((r.error - r.calibrated_error) / (3.0 * phi * phi / 32.0), 1.0, 0.05);
}

TEST(ErrorModel, InteriorMinimumNearOmegaOpt) {
    const double b = units::mhz_to_rad(10.0), tau = units::us_to_s(340.0);
    const double w0 = omega_opt(b, tau);
    const std::vector<double> factors = {0.5, 0.707, 1.0, 1.414, 2.0};
    std::vector<double> e;
    for (double f : factors) {
        // Average over one blockade fringe around Omega.
        const double w = f * w0;
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) {
            const double wk = w + (w * w / b) * ((k + 0.5) / 4.0 - 0.5);
            acc += gate_error(finite_params(b, kInfinity, tau), cz_sequence(wk), ideal_cz()).calibrated_error;
        }
        e.push_back(acc / 4.0);
    }
    const auto best = static_cast<std::size_t>(std::min_element(e.begin(), e.end()) - e.begin());
    EXPECT_GT(best, 0U);
    EXPECT_LT(best, factors.size() - 1);
    EXPECT_NEAR(factors[best], 1.0, 0.3);
}

// --- Bell states ---

TEST(Bell, IdealPreparation) {
    for (auto protocol : {CnotProtocol::hadamard, CnotProtocol::amplitude_swap}) {
        for (auto v : {BellVariant::b1, BellVariant::b2}) {
            const auto rho = bell_prep(DynamicsParams::ideal(), kRabi, v, protocol);
            EXPECT_GT(state_fidelity(rho, bell_target(v)), 1.0 - 1e-9);
        }
    }
}

TEST(Bell, InfidelityConsistentWithBudget) {
    const auto cfg = fixtures::operating_point_150s({"sim.intermediate_scattering=true"});
    const auto report = assemble_budget(cfg);
    const double budget = report.intrinsic_error + report.p_se;
    const double infidelity = 1.0 - state_fidelity(bell_prep(cfg, BellVariant::b1), bell_b1());
    EXPECT_GT(infidelity, 0.5 * budget);
    EXPECT_LT(infidelity, 2.0 * budget);
}
