#pragma once

// Two-atom state space. Each atom has four levels, ordered
//   0: |0>  (lower hyperfine qubit state)
//   1: |1>  (upper hyperfine qubit state, Rydberg-coupled by default)
//   2: |r>  (Rydberg state)
//   3: |d>  (absorbing sink for population lost from the qubit space)
// and the product index is 4 * control + target.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <complex>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "rydberg/error.hpp"

namespace rydberg::dynamics {

using cd = std::complex<double>;
using Matrix16 = Eigen::Matrix<cd, 16, 16>;
using Vector16 = Eigen::Matrix<cd, 16, 1>;
using Matrix4 = Eigen::Matrix<cd, 4, 4>;
using Vector4 = Eigen::Matrix<cd, 4, 1>;
using Matrix2 = Eigen::Matrix<cd, 2, 2>;

enum class Level : int { zero = 0, one = 1, rydberg = 2, sink = 3 };

inline constexpr int kLevels = 4;
inline constexpr int kDim = kLevels * kLevels;

constexpr int index(Level control, Level target) {
    return kLevels * static_cast<int>(control) + static_cast<int>(target);
}

/// Index of computational basis state |c t> (c, t in {0, 1}) in the full space.
constexpr int computational_index(int c, int t) { return kLevels * c + t; }

inline constexpr std::array<int, 4> kComputational = {
    computational_index(0, 0), computational_index(0, 1), computational_index(1, 0), computational_index(1, 1)};

/// Embeds a 4-component vector over {00, 01, 10, 11} in the 16-dim space.
inline Vector16 embed(const Vector4 &v) {
    Vector16 out = Vector16::Zero();
    for (int k = 0; k < 4; ++k) {
        out(kComputational[k]) = v(k);
    }
    return out;
}

inline Vector16 product_state(const Eigen::Matrix<cd, 4, 1> &control, const Eigen::Matrix<cd, 4, 1> &target) {
    Vector16 out;
    for (int c = 0; c < kLevels; ++c) {
        for (int t = 0; t < kLevels; ++t) {
            out(kLevels * c + t) = control(c) * target(t);
        }
    }
    return out;
}

inline Eigen::Matrix<cd, 4, 1> atom_state(cd amp0, cd amp1) {
    Eigen::Matrix<cd, 4, 1> v = Eigen::Matrix<cd, 4, 1>::Zero();
    v(0) = amp0;
    v(1) = amp1;
    return v;
}

class TwoAtomDensityMatrix {
public:
    TwoAtomDensityMatrix() : rho_(Matrix16::Zero()) { rho_(0, 0) = 1.0; }
    explicit TwoAtomDensityMatrix(const Matrix16 &rho) : rho_(rho) {}

    static TwoAtomDensityMatrix pure(const Vector16 &psi) {
        const Vector16 n = psi / psi.norm();
        return TwoAtomDensityMatrix(n * n.adjoint());
    }

    const Matrix16 &matrix() const { return rho_; }
    Matrix16 &matrix() { return rho_; }

    cd operator()(int i, int j) const { return rho_(i, j); }

    double trace() const { return rho_.trace().real(); }
    double purity() const { return (rho_ * rho_).trace().real(); }
    double population(int i) const { return rho_(i, i).real(); }

    double computational_population() const {
        double p = 0.0;
        for (int k : kComputational) {
            p += population(k);
        }
        return p;
    }

    double hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }

    double min_eigenvalue() const {
        const Matrix16 h = 0.5 * (rho_ + rho_.adjoint());
        Eigen::SelfAdjointEigenSolver<Matrix16> es(h, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    /// Hermitian to 1e-12, unit trace to 1e-9, PSD to -1e-9.
    bool is_valid(double herm_tol = 1e-12, double trace_tol = 1e-9, double psd_tol = 1e-9) const {
        return hermiticity_error() <= herm_tol && std::abs(trace() - 1.0) <= trace_tol &&
               min_eigenvalue() >= -psd_tol;
    }

    /// Computational-subspace block (not renormalized).
    Matrix4 computational_block() const {
        Matrix4 out;
        for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b) {
                out(a, b) = rho_(kComputational[a], kComputational[b]);
            }
        }
        return out;
    }

private:
    Matrix16 rho_;
};

/// <psi| rho |psi> for a normalized target. The target may be given over the
/// full 16-dim space or over the 4-dim computational subspace.
inline double state_fidelity(const TwoAtomDensityMatrix &rho, const Eigen::VectorXcd &psi) {
    Vector16 full;
    if (psi.size() == kDim) {
        full = psi;
    } else if (psi.size() == 4) {
        full = embed(Vector4(psi));
    } else {
        throw ValidationError("psi", "dimension " + std::to_string(psi.size()) + " is neither 4 nor 16");
    }
    const double norm2 = full.squaredNorm();
    if (!(norm2 > 0.0)) {
        throw ValidationError("psi", "zero vector");
    }
    const double f = (full.adjoint() * rho.matrix() * full)(0, 0).real() / norm2;
    return std::clamp(f, 0.0, 1.0);
}

inline double state_fidelity(const Matrix4 &rho4, const Vector4 &psi) {
    return std::clamp((psi.adjoint() * rho4 * psi)(0, 0).real() / psi.squaredNorm(), 0.0, 1.0);
}

/// Bell targets over {00, 01, 10, 11}.
inline Vector4 bell_b1() { return Vector4(1.0, 0.0, 0.0, 1.0) / std::sqrt(2.0); }
inline Vector4 bell_b2() { return Vector4(0.0, 1.0, 1.0, 0.0) / std::sqrt(2.0); }

// Text matrix format, row-major:
//   # <label>
//   <rows> <cols>
//   re(0,0) im(0,0) re(0,1) im(0,1) ...
//   ...
inline void write_matrix(std::ostream &os, const Eigen::MatrixXcd &m, const std::string &label = {}) {
    if (!label.empty()) {
        os << "# " << label << "\n";
    }
    os << m.rows() << " " << m.cols() << "\n";
    os.precision(17);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) {
                os << " ";
            }
            os << m(i, j).real() << " " << m(i, j).imag();
        }
        os << "\n";
    }
}

inline Eigen::MatrixXcd read_matrix(std::istream &is) {
    std::string line;
    while (is.peek() == '#') {
        std::getline(is, line);
    }
    Eigen::Index rows = 0, cols = 0;
    if (!(is >> rows >> cols) || rows <= 0 || cols <= 0) {
        throw ValidationError("matrix", "bad dimension line");
    }
    Eigen::MatrixXcd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            double re = 0.0, im = 0.0;
            if (!(is >> re >> im)) {
                throw ValidationError("matrix", "truncated data");
            }
            m(i, j) = cd(re, im);
        }
    }
    return m;
}

}  // namespace rydberg::dynamics
