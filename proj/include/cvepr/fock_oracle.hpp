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

// Brute-force reference for the two-mode squeezed vacuum: a truncated
// number-state expansion evaluated on a position-space grid. Nothing here
// uses the Gaussian closed forms, so it can check them independently.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "cvepr/error.hpp"

namespace cvepr::fock {

/// Coefficients c_n of sum_n c_n |n>_a |n>_b, truncated at n_max.
struct FockState {
    double r = 0.0;
    int n_max = 0;
    std::vector<double> coeffs;
    /// Norm missing from the truncated tail, tanh^{2(n_max+1)} r.
    double truncation_error = 0.0;

    double norm_squared() const {
        double acc = 0.0;
        for (double c : coeffs) acc += c * c;
        return acc;
    }
};

inline FockState tmsv_coefficients(double r, int n_max) {
    if (!std::isfinite(r) || r < 0.0) throw InvalidArgument("squeeze parameter must be finite and non-negative");
    if (n_max < 0) throw InvalidArgument("truncation order must be non-negative");
    FockState f;
    f.r = r;
    f.n_max = n_max;
    f.coeffs.resize(static_cast<std::size_t>(n_max) + 1);
    const double t = std::tanh(r);
    double c = 1.0 / std::cosh(r);
    for (int n = 0; n <= n_max; ++n) {
        f.coeffs[static_cast<std::size_t>(n)] = c;
        c *= t;
    }
    f.truncation_error = std::pow(t, 2.0 * (n_max + 1));
    return f;
}

/// Truncation order giving a tail below 1e-12, never less than
/// 60 + 40 max(r - 1, 0).
inline int default_n_max(double r) {
    int n = 60 + static_cast<int>(std::ceil(40.0 * std::max(r - 1.0, 0.0)));
    const double t = std::tanh(r);
    if (t > 0.0) {
        const double needed = std::log(1e-12) / (2.0 * std::log(t)) - 1.0;
        if (needed > n) n = static_cast<int>(std::ceil(needed));
    }
    return n;
}

/// psi_0 .. psi_{n_max} at x, normalized with vacuum variance 1:
/// psi_0(x) = (2 pi)^{-1/4} exp(-x^2 / 4).
inline std::vector<double> wavefunction_table(int n_max, double x) {
    std::vector<double> psi(static_cast<std::size_t>(std::max(n_max, 0)) + 1, 0.0);
    // Standard oscillator functions phi_n(q) with q = x / sqrt(2), rescaled by 2^{-1/4}.
    const double q = x / std::numbers::sqrt2;
    psi[0] = std::pow(2.0 * std::numbers::pi, -0.25) * std::exp(-0.25 * x * x);
    if (n_max >= 1) psi[1] = std::numbers::sqrt2 * q * psi[0];
    for (int n = 1; n < n_max; ++n) {
        const auto k = static_cast<std::size_t>(n);
        psi[k + 1] = std::sqrt(2.0 / (n + 1)) * q * psi[k] - std::sqrt(static_cast<double>(n) / (n + 1)) * psi[k - 1];
    }
    return psi;
}

inline double quadrature_wavefunction(int n, double x) {
    if (n < 0) throw InvalidArgument("number state index must be non-negative");
    if (!std::isfinite(x)) throw InvalidArgument("quadrature value must be finite");
    return wavefunction_table(n, x).back();
}

struct GridSpec {
    double half_width = 0.0;
    std::size_t points = 801;
};

/// L = 8 sqrt(cosh 2r), 801 nodes. The slack over the 6 sqrt(cosh 2r) minimum keeps
/// conditional slices near the edge of the conditioning range from being clipped.
inline GridSpec default_grid(double r) { return GridSpec{8.0 * std::sqrt(std::cosh(2.0 * r)), 801}; }

/// Joint X-quadrature density P(x, x^B) on a uniform square grid.
/// density(i, j) is at (axis[i] for mode A, axis[j] for mode B).
struct JointDensityGrid {
    FockState state;
    std::vector<double> axis;
    std::vector<double> weights;  // trapezoid weights on axis
    Eigen::MatrixXd density;
    double integral = 0.0;
    double normalization_error = 0.0;

    double spacing() const { return axis.size() > 1 ? axis[1] - axis[0] : 0.0; }
};

inline JointDensityGrid joint_density(const FockState& f, const GridSpec& grid) {
    const double required = 6.0 * std::sqrt(std::cosh(2.0 * f.r));
    if (!(grid.half_width >= required * (1.0 - 1e-12))) {
        throw InvalidArgument("grid half-width must be at least 6 sqrt(cosh 2r)");
    }
    if (grid.points < 3) throw InvalidArgument("grid needs at least 3 points");

    JointDensityGrid g;
    g.state = f;
    const std::size_t n_pts = grid.points;
    const double h = 2.0 * grid.half_width / static_cast<double>(n_pts - 1);
    g.axis.resize(n_pts);
    g.weights.assign(n_pts, h);
    g.weights.front() = g.weights.back() = 0.5 * h;
    for (std::size_t i = 0; i < n_pts; ++i) g.axis[i] = -grid.half_width + h * static_cast<double>(i);

    const auto n_terms = static_cast<Eigen::Index>(f.coeffs.size());
    Eigen::MatrixXd psi(static_cast<Eigen::Index>(n_pts), n_terms);
    for (std::size_t i = 0; i < n_pts; ++i) {
        const auto row = wavefunction_table(f.n_max, g.axis[i]);
        for (Eigen::Index n = 0; n < n_terms; ++n) psi(static_cast<Eigen::Index>(i), n) = row[static_cast<std::size_t>(n)];
    }
    const Eigen::Map<const Eigen::VectorXd> c(f.coeffs.data(), n_terms);
    const Eigen::MatrixXd amplitude = (psi * c.asDiagonal()) * psi.transpose();
    g.density = amplitude.array().square().matrix();

    const Eigen::Map<const Eigen::VectorXd> w(g.weights.data(), static_cast<Eigen::Index>(n_pts));
    g.integral = w.dot(g.density * w);
    g.normalization_error = std::abs(g.integral - 1.0);
    if (g.normalization_error > 1e-3) {
        throw TruncationInsufficient("joint density integrates to " + std::to_string(g.integral) +
                                     "; increase n_max or the grid");
    }
    return g;
}

struct GridMoments {
    double mean_a = 0.0;
    double mean_b = 0.0;
    double var_a = 0.0;
    double var_b = 0.0;
    double cov_ab = 0.0;
};

/// Second moments of the normalized grid density.
inline GridMoments grid_moments(const JointDensityGrid& g) {
    const std::size_t n = g.axis.size();
    GridMoments m;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double p = g.weights[i] * g.weights[j] * g.density(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            m.mean_a += p * g.axis[i];
            m.mean_b += p * g.axis[j];
        }
    }
    m.mean_a /= g.integral;
    m.mean_b /= g.integral;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = g.axis[i] - m.mean_a;
        for (std::size_t j = 0; j < n; ++j) {
            const double db = g.axis[j] - m.mean_b;
            const double p = g.weights[i] * g.weights[j] * g.density(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            m.var_a += p * da * da;
            m.var_b += p * db * db;
            m.cov_ab += p * da * db;
        }
    }
    m.var_a /= g.integral;
    m.var_b /= g.integral;
    m.cov_ab /= g.integral;
    return m;
}

struct ConditionalMoments {
    double mean = 0.0;
    double variance = 0.0;
    /// Unconditioned density of the conditioning quadrature at x_b.
    double marginal = 0.0;
};

namespace detail {

inline ConditionalMoments slice_moments(const std::vector<double>& axis, const std::vector<double>& weights,
                                        const std::vector<double>& slice) {
    ConditionalMoments out;
    double first = 0.0;
    for (std::size_t i = 0; i < axis.size(); ++i) {
        out.marginal += weights[i] * slice[i];
        first += weights[i] * slice[i] * axis[i];
    }
    if (!(out.marginal > 0.0)) return out;
    out.mean = first / out.marginal;
    double second = 0.0;
    for (std::size_t i = 0; i < axis.size(); ++i) {
        const double d = axis[i] - out.mean;
        second += weights[i] * slice[i] * d * d;
    }
    out.variance = second / out.marginal;
    return out;
}

}  // namespace detail

/// Mean and variance of x at A given outcome x_b at B. The slice is evaluated
/// exactly at x_b from the stored amplitudes, so x_b need not be a grid node.
inline ConditionalMoments conditional_moments(const JointDensityGrid& g, double x_b) {
    if (!(x_b >= g.axis.front() && x_b <= g.axis.back())) {
        throw InvalidArgument("conditioning value outside the grid");
    }
    const auto psi_b = wavefunction_table(g.state.n_max, x_b);
    std::vector<double> slice(g.axis.size());
    for (std::size_t i = 0; i < g.axis.size(); ++i) {
        const auto psi_a = wavefunction_table(g.state.n_max, g.axis[i]);
        double amp = 0.0;
        for (std::size_t n = 0; n < g.state.coeffs.size(); ++n) amp += g.state.coeffs[n] * psi_a[n] * psi_b[n];
        slice[i] = amp * amp;
    }
    auto m = detail::slice_moments(g.axis, g.weights, slice);
    m.marginal /= g.integral;
    if (m.marginal < 1e-12) {
        throw NegligibleMarginal("conditioning marginal density below 1e-12 at x_b = " + std::to_string(x_b));
    }
    return m;
}

/// Conditional moments at every B grid node (zero marginal nodes report zeros).
inline std::vector<ConditionalMoments> conditional_moments_on_grid(const JointDensityGrid& g) {
    std::vector<ConditionalMoments> out(g.axis.size());
    std::vector<double> slice(g.axis.size());
    for (std::size_t j = 0; j < g.axis.size(); ++j) {
        for (std::size_t i = 0; i < g.axis.size(); ++i) {
            slice[i] = g.density(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        out[j] = detail::slice_moments(g.axis, g.weights, slice);
        out[j].marginal /= g.integral;
    }
    return out;
}

/// Outcome-averaged conditional variance sum_i P(x_i^B) Delta_i^2 by quadrature
/// over the conditioning axis.
inline double inferred_variance_numeric(const JointDensityGrid& g) {
    const auto slices = conditional_moments_on_grid(g);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < slices.size(); ++j) {
        if (!(slices[j].marginal > 0.0)) continue;
        num += g.weights[j] * slices[j].marginal * slices[j].variance;
        den += g.weights[j] * slices[j].marginal;
    }
    return num / den;
}

}  // namespace cvepr::fock
