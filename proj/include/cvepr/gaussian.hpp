// Copyright 2026 The cvepr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Two-mode Gaussian states in the scaled quadrature convention
// X = a + a^dagger, P = (a - a^dagger)/i. Vacuum variance is 1 and the
// uncertainty relation reads Var(X) Var(P) >= 1 for each mode.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <complex>
#include <string>

#include "cvepr/error.hpp"

namespace cvepr {

using Vector4 = Eigen::Vector4d;
using Matrix4 = Eigen::Matrix4d;

enum class Mode { A, B };
enum class Angle { X, P };

/// One of the four quadratures (X_a, P_a, X_b, P_b), indexed 0..3 in that order.
struct Quadrature {
    Mode mode;
    Angle angle;

    constexpr int index() const noexcept {
        return (mode == Mode::A ? 0 : 2) + (angle == Angle::X ? 0 : 1);
    }
    static constexpr Quadrature from_index(int k) {
        if (k < 0 || k > 3) throw InvalidArgument("quadrature index out of range");
        return Quadrature{k < 2 ? Mode::A : Mode::B, (k % 2 == 0) ? Angle::X : Angle::P};
    }
    friend constexpr bool operator==(Quadrature, Quadrature) = default;
};

inline constexpr Quadrature kXa{Mode::A, Angle::X};
inline constexpr Quadrature kPa{Mode::A, Angle::P};
inline constexpr Quadrature kXb{Mode::B, Angle::X};
inline constexpr Quadrature kPb{Mode::B, Angle::P};

inline std::string to_string(Quadrature q) {
    std::string s = (q.angle == Angle::X) ? "X" : "P";
    s += (q.mode == Mode::A) ? "_a" : "_b";
    return s;
}

/// Mean vector and covariance matrix over (X_a, P_a, X_b, P_b).
///
/// Construction symmetrizes the covariance and rejects non-finite entries.
/// Physicality is not enforced here; query it with is_physical() or
/// require_physical().
class GaussianState {
   public:
    GaussianState(const Vector4& mean, const Matrix4& cov) : mean_(mean), cov_(0.5 * (cov + cov.transpose())) {
        if (!mean_.allFinite() || !cov_.allFinite()) {
            throw InvalidArgument("Gaussian state moments must be finite");
        }
    }

    const Vector4& mean() const noexcept { return mean_; }
    const Matrix4& cov() const noexcept { return cov_; }

    double cov(Quadrature i, Quadrature j) const { return cov_(i.index(), j.index()); }
    double mean(Quadrature q) const { return mean_(q.index()); }

   private:
    Vector4 mean_;
    Matrix4 cov_;
};

/// Symplectic form with per-mode block [[0, 1], [-1, 0]].
inline Matrix4 symplectic_form() {
    Matrix4 omega = Matrix4::Zero();
    omega(0, 1) = 1.0;
    omega(1, 0) = -1.0;
    omega(2, 3) = 1.0;
    omega(3, 2) = -1.0;
    return omega;
}

inline GaussianState vacuum_state() { return GaussianState(Vector4::Zero(), Matrix4::Identity()); }

/// Two-mode squeezed vacuum sum_n tanh^n(r)/cosh(r) |n>_a |n>_b in closed form.
inline GaussianState two_mode_squeezed(double r) {
    if (!std::isfinite(r) || r < 0.0) {
        throw InvalidArgument("squeeze parameter must be finite and non-negative");
    }
    const double c = std::cosh(2.0 * r);
    const double s = std::sinh(2.0 * r);
    Matrix4 cov = c * Matrix4::Identity();
    cov(0, 2) = cov(2, 0) = s;
    cov(1, 3) = cov(3, 1) = -s;
    return GaussianState(Vector4::Zero(), cov);
}

/// Beam-splitter loss with vacuum admixture: per-mode transmissivities.
inline GaussianState apply_loss(const GaussianState& s, double eta_a, double eta_b) {
    auto valid = [](double eta) { return std::isfinite(eta) && eta >= 0.0 && eta <= 1.0; };
    if (!valid(eta_a) || !valid(eta_b)) {
        throw InvalidArgument("transmissivity must lie in [0, 1]");
    }
    const Vector4 scale(std::sqrt(eta_a), std::sqrt(eta_a), std::sqrt(eta_b), std::sqrt(eta_b));
    const Vector4 noise(1.0 - eta_a, 1.0 - eta_a, 1.0 - eta_b, 1.0 - eta_b);
    // Same-mode entries scale by eta exactly; only cross-mode ones need the root.
    const double eta[2] = {eta_a, eta_b};
    const double cross = std::sqrt(eta_a * eta_b);
    Matrix4 cov;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) cov(i, j) = s.cov()(i, j) * (i / 2 == j / 2 ? eta[i / 2] : cross);
    }
    cov.diagonal() += noise;
    return GaussianState(scale.cwiseProduct(s.mean()), cov);
}

/// Smallest eigenvalue of the Hermitian matrix cov + i*Omega.
inline double min_physicality_eigenvalue(const GaussianState& s) {
    const Eigen::Matrix4cd h = s.cov().cast<std::complex<double>>() +
                               std::complex<double>(0.0, 1.0) * symplectic_form().cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(h, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

inline bool is_physical(const GaussianState& s, double tol = 1e-9) {
    for (int k = 0; k < 4; ++k) {
        if (!(s.cov()(k, k) > 0.0)) return false;
    }
    return min_physicality_eigenvalue(s) >= -tol;
}

inline void require_physical(const GaussianState& s, double tol = 1e-9) {
    if (!is_physical(s, tol)) {
        throw UnphysicalState("covariance violates the uncertainty principle (min eigenvalue of cov + i*Omega = " +
                              std::to_string(min_physicality_eigenvalue(s)) + ")");
    }
}

inline double marginal_variance(const GaussianState& s, Quadrature q) { return s.cov(q, q); }

/// Var(c . R) for the quadrature vector R = (X_a, P_a, X_b, P_b).
inline double combination_variance(const GaussianState& s, const Vector4& coeffs) {
    return coeffs.dot(s.cov() * coeffs);
}

/// Variance of `target` conditioned on an outcome of `conditioner`.
///
/// For Gaussian states this does not depend on the conditioning outcome, so
/// it is also the outcome-averaged inferred variance.
inline double conditional_variance(const GaussianState& s, Quadrature target, Quadrature conditioner,
                                   double tol = 1e-12) {
    if (target.mode == conditioner.mode) {
        throw InvalidPair("conditioning requires quadratures of different modes");
    }
    const double ccc = s.cov(conditioner, conditioner);
    if (ccc <= tol) {
        throw DegenerateConditioner("conditioning quadrature has vanishing variance");
    }
    const double ctc = s.cov(target, conditioner);
    return s.cov(target, target) - ctc * ctc / ccc;
}

/// Exchange the roles of modes A and B.
inline GaussianState swap_modes(const GaussianState& s) {
    Eigen::PermutationMatrix<4> perm;
    perm.indices() << 2, 3, 0, 1;
    const Matrix4 p = perm.toDenseMatrix().cast<double>();
    return GaussianState(p * s.mean(), p * s.cov() * p.transpose());
}

}  // namespace cvepr
