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

// EPR-correlation and entanglement criteria for two-mode Gaussian states,
// together with the lower bounds every separable state must respect.

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "cvepr/csv.hpp"
#include "cvepr/error.hpp"
#include "cvepr/gaussian.hpp"
#include "cvepr/histogram.hpp"

namespace cvepr {

enum class CriterionName {
    EPR1989,
    EPRLinear,
    TwoModeSqueezingProduct,
    TwoModeSqueezingX,
    TwoModeSqueezingP,
    BoundedConditional,
};

inline std::string_view to_string(CriterionName n) {
    switch (n) {
        case CriterionName::EPR1989: return "EPR1989";
        case CriterionName::EPRLinear: return "EPRLinear";
        case CriterionName::TwoModeSqueezingProduct: return "TwoModeSqueezingProduct";
        case CriterionName::TwoModeSqueezingX: return "TwoModeSqueezingX";
        case CriterionName::TwoModeSqueezingP: return "TwoModeSqueezingP";
        case CriterionName::BoundedConditional: return "BoundedConditional";
    }
    return "unknown";
}

struct CriterionParameters {
    std::optional<double> g;
    std::optional<double> h;
    std::optional<double> d_x;
    std::optional<double> d_p;
    std::optional<double> delta;
    std::optional<double> coverage;
};

/// One evaluated inequality `value < bound`. Boundary cases are not violations.
struct CriterionReport {
    CriterionName name{};
    double value = 0.0;
    double bound = 0.0;
    bool violated = false;
    double margin = 0.0;
    CriterionParameters parameters;
    /// value^2 for criteria stated as a product of standard deviations.
    std::optional<double> variance_product;

    static CriterionReport make(CriterionName name, double value, double bound, CriterionParameters params = {}) {
        CriterionReport r;
        r.name = name;
        r.value = value;
        r.bound = bound;
        r.violated = value < bound;
        r.margin = bound - value;
        r.parameters = params;
        return r;
    }
};

inline constexpr std::string_view kReportCsvHeader = "name,value,bound,violated,margin,g,h,delta";

inline std::string to_csv_row(const CriterionReport& r) {
    return csv::row(to_string(r.name), r.value, r.bound, r.violated, r.margin, csv::format(r.parameters.g),
                    csv::format(r.parameters.h), csv::format(r.parameters.delta));
}

/// Thresholds that separable states cannot cross.
struct SeparableBounds {
    double inf_product_bound = 1.0;
    double linear_product_bound = 1.0;
    double tms_product_bound = 4.0;
    double tms_single_bound = 2.0;
};

inline SeparableBounds separable_lower_bounds(double g, double h) {
    if (!std::isfinite(g) || !std::isfinite(h)) throw InvalidArgument("gains must be finite");
    SeparableBounds b;
    b.linear_product_bound = 1.0 + g * g * h * h;
    return b;
}

/// Infer `target` at one site from `conditioner` at the other.
struct InferencePair {
    Quadrature target;
    Quadrature conditioner;
};

inline constexpr InferencePair kInferX{kXa, kXb};
inline constexpr InferencePair kInferP{kPa, kPb};

struct InferredVariances {
    double x = 0.0;
    double p = 0.0;
};

inline InferredVariances inferred_variances(const GaussianState& s) {
    require_physical(s);
    return {conditional_variance(s, kXa, kXb), conditional_variance(s, kPa, kPb)};
}

inline CriterionReport epr_1989(double dx2, double dp2) {
    if (!(dx2 > 0.0) || !(dp2 > 0.0)) throw InvalidArgument("inferred variances must be positive");
    auto rep = CriterionReport::make(CriterionName::EPR1989, std::sqrt(dx2 * dp2), 1.0);
    rep.variance_product = dx2 * dp2;
    return rep;
}

inline CriterionReport epr_1989(const GaussianState& s) {
    const auto v = inferred_variances(s);
    return epr_1989(v.x, v.p);
}

/// <(target - (g conditioner + d))^2> with the optimal offset d, i.e.
/// Var(target - g conditioner).
inline double linear_inference_variance(const GaussianState& s, double g, InferencePair pair) {
    if (!std::isfinite(g)) throw InvalidArgument("gain must be finite");
    const double ctt = s.cov(pair.target, pair.target);
    const double ctc = s.cov(pair.target, pair.conditioner);
    const double ccc = s.cov(pair.conditioner, pair.conditioner);
    return ctt - 2.0 * g * ctc + g * g * ccc;
}

/// Offset d = -<target - g conditioner> that makes the estimate unbiased.
inline double optimal_offset(const GaussianState& s, double g, InferencePair pair) {
    return -(s.mean(pair.target) - g * s.mean(pair.conditioner));
}

/// Variance-minimizing gain Cov(target, conditioner) / Var(conditioner).
inline double optimal_gain(const GaussianState& s, InferencePair pair, double tol = 1e-12) {
    const double ccc = s.cov(pair.conditioner, pair.conditioner);
    if (ccc <= tol) throw DegenerateConditioner("conditioning quadrature has vanishing variance");
    return s.cov(pair.target, pair.conditioner) / ccc;
}

/// Delta(X_a - g X_b) Delta(P_a + h P_b) < 1.
inline CriterionReport epr_linear(const GaussianState& s, double g, double h) {
    require_physical(s);
    const double vx = linear_inference_variance(s, g, kInferX);
    const double vp = linear_inference_variance(s, -h, kInferP);
    CriterionParameters params;
    params.g = g;
    params.h = h;
    params.d_x = optimal_offset(s, g, kInferX);
    params.d_p = optimal_offset(s, -h, kInferP);
    auto rep = CriterionReport::make(CriterionName::EPRLinear, std::sqrt(vx * vp), 1.0, params);
    rep.variance_product = vx * vp;
    return rep;
}

/// epr_linear at the variance-minimizing gains (h enters with a plus sign).
inline CriterionReport epr_linear_optimal(const GaussianState& s) {
    return epr_linear(s, optimal_gain(s, kInferX), -optimal_gain(s, kInferP));
}

struct TwoModeSqueezingReports {
    CriterionReport product;
    CriterionReport x_only;
    CriterionReport p_only;
};

/// Var(X_a - X_b) Var(P_a + P_b) < 4, and each factor < 2.
inline TwoModeSqueezingReports two_mode_squeezing_criterion(const GaussianState& s) {
    require_physical(s);
    const double vx = combination_variance(s, Vector4(1.0, 0.0, -1.0, 0.0));
    const double vp = combination_variance(s, Vector4(0.0, 1.0, 0.0, 1.0));
    CriterionParameters params;
    params.g = 1.0;
    params.h = 1.0;
    return {CriterionReport::make(CriterionName::TwoModeSqueezingProduct, vx * vp, 4.0, params),
            CriterionReport::make(CriterionName::TwoModeSqueezingX, vx, 2.0, params),
            CriterionReport::make(CriterionName::TwoModeSqueezingP, vp, 2.0, params)};
}

namespace detail {

inline CriterionReport bounded_report(double delta_min, double delta, double coverage) {
    CriterionParameters params;
    params.delta = delta;
    params.coverage = coverage;
    // The inequality only carries meaning for delta < 1; otherwise nothing can violate it.
    return CriterionReport::make(CriterionName::BoundedConditional, delta_min, delta < 1.0 ? delta : 0.0, params);
}

inline void check_bounded_args(double delta, double coverage) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("delta must be positive and finite");
    if (!(coverage > 0.0 && coverage <= 1.0)) throw InvalidArgument("coverage must lie in (0, 1]");
}

}  // namespace detail

/// Record count a bin needs before an empirical mass of `coverage` means anything:
/// room for `tail_count` expected outliers. Exact support (coverage 1) needs none.
inline std::size_t resolvable_bin_count(double coverage, double tail_count = 10.0) {
    if (coverage >= 1.0) return 1;
    return static_cast<std::size_t>(std::ceil(tail_count / (1.0 - coverage)));
}

/// Every conditional distribution confined to mu_i +/- delta with delta < 1.
///
/// value is the smallest half-width reaching `coverage` in every bin of every
/// histogram. coverage = 1 asks for exact support: a finite sample certifies it
/// only for a degenerate (zero-spread) bin, otherwise the half-width is infinite.
/// For coverage < 1 only bins with at least resolvable_bin_count(coverage,
/// tail_count) records take part; smaller bins would reduce the quantile to the
/// sample maximum. Histograms must carry sorted deviations.
inline CriterionReport bounded_conditional_criterion(std::span<const ConditionalHistogram> conditionals, double delta,
                                                     double coverage = 0.999, double tail_count = 10.0) {
    detail::check_bounded_args(delta, coverage);
    if (conditionals.empty()) throw InvalidArgument("no conditional histograms supplied");
    if (!(tail_count > 0.0)) throw InvalidArgument("tail count must be positive");
    const std::size_t min_count = resolvable_bin_count(coverage, tail_count);
    double worst = 0.0;
    std::size_t n_bins = 0;
    for (const auto& hist : conditionals) {
        for (const auto& bin : hist.bins) {
            if (bin.abs_deviations.size() != bin.count || bin.count == 0) {
                throw InvalidArgument("conditional bins must carry their sorted deviations");
            }
            if (bin.count < min_count) continue;
            ++n_bins;
            double half_width;
            if (coverage >= 1.0) {
                const double spread = bin.abs_deviations.back();
                const double scale = 1e-12 * (1.0 + std::abs(bin.mean));
                half_width = spread <= scale ? spread : std::numeric_limits<double>::infinity();
            } else {
                const auto need = static_cast<std::size_t>(std::ceil(coverage * static_cast<double>(bin.count)));
                half_width = bin.abs_deviations[std::clamp<std::size_t>(need, 1, bin.count) - 1];
            }
            worst = std::max(worst, half_width);
        }
    }
    if (n_bins == 0) throw OccupancyFailure("no conditioning bin holds enough records to resolve the coverage");
    return detail::bounded_report(worst, delta, coverage);
}

/// Analytic version for a Gaussian state: conditionals are normal with the
/// conditional variances of X_a|X_b and P_a|P_b, so exact support is never finite.
inline CriterionReport bounded_conditional_criterion(const GaussianState& s, double delta, double coverage = 0.999) {
    detail::check_bounded_args(delta, coverage);
    const auto v = inferred_variances(s);
    const double sigma = std::sqrt(std::max(v.x, v.p));
    double half_width;
    if (sigma == 0.0) {
        half_width = 0.0;
    } else if (coverage >= 1.0) {
        half_width = std::numeric_limits<double>::infinity();
    } else {
        half_width = sigma * std::sqrt(2.0) * boost::math::erf_inv(coverage);
    }
    return detail::bounded_report(half_width, delta, coverage);
}

}  // namespace cvepr
