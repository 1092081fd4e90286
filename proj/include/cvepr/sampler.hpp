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

// Monte Carlo homodyne statistics for two-mode Gaussian states and the
// empirical versions of the criteria, with bootstrap confidence intervals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cvepr/criteria.hpp"
#include "cvepr/csv.hpp"
#include "cvepr/error.hpp"
#include "cvepr/gaussian.hpp"
#include "cvepr/histogram.hpp"
#include "cvepr/rng.hpp"

namespace cvepr {

/// Measurement settings: angle measured at A and at B.
struct Basis {
    Angle a = Angle::X;
    Angle b = Angle::X;

    Quadrature quadrature_a() const { return {Mode::A, a}; }
    Quadrature quadrature_b() const { return {Mode::B, b}; }
    std::uint32_t code() const { return (a == Angle::X ? 0u : 2u) + (b == Angle::X ? 0u : 1u); }
    friend bool operator==(Basis, Basis) = default;
};

inline constexpr Basis kBasisXX{Angle::X, Angle::X};
inline constexpr Basis kBasisXP{Angle::X, Angle::P};
inline constexpr Basis kBasisPX{Angle::P, Angle::X};
inline constexpr Basis kBasisPP{Angle::P, Angle::P};
inline constexpr Basis kAllBases[] = {kBasisXX, kBasisXP, kBasisPX, kBasisPP};

inline std::string to_string(Basis b) {
    return std::string(b.a == Angle::X ? "X" : "P") + (b.b == Angle::X ? "X" : "P");
}

inline Basis parse_basis(std::string_view text) {
    auto angle = [&](char c) {
        if (c == 'X') return Angle::X;
        if (c == 'P') return Angle::P;
        throw InvalidArgument("basis must be two letters from {X, P}: '" + std::string(text) + "'");
    };
    if (text.size() != 2) throw InvalidArgument("basis must be two letters from {X, P}: '" + std::string(text) + "'");
    return Basis{angle(text[0]), angle(text[1])};
}

struct Outcome {
    double a = 0.0;
    double b = 0.0;
    friend bool operator==(const Outcome&, const Outcome&) = default;
};

/// Where a batch came from; written into the CSV header.
struct Provenance {
    double r = 0.0;
    double eta_a = 1.0;
    double eta_b = 1.0;
};

struct SampleBatch {
    Basis basis;
    std::vector<Outcome> records;
    std::uint64_t seed = 0;
    std::optional<Provenance> provenance;

    std::size_t size() const { return records.size(); }
};

namespace detail {

// Philox stream tags: quantum homodyne draws use 0..3 (the basis code).
inline constexpr std::uint32_t kQuantumStream = 0;

}  // namespace detail

/// Joint homodyne outcomes for one pair of settings. Record i depends only on
/// (seed, basis, i), so the output is identical for any worker count.
inline SampleBatch sample_joint(const GaussianState& s, Basis basis, std::size_t n, std::uint64_t seed,
                                unsigned workers = 0) {
    if (!is_physical(s)) throw UnphysicalState("cannot sample an unphysical state");
    if (n < 1) throw InvalidArgument("sample count must be at least 1");
    const Quadrature qa = basis.quadrature_a();
    const Quadrature qb = basis.quadrature_b();
    const double mean_a = s.mean(qa);
    const double mean_b = s.mean(qb);
    const double l11 = std::sqrt(s.cov(qa, qa));
    const double l21 = s.cov(qa, qb) / l11;
    const double l22 = std::sqrt(std::max(0.0, s.cov(qb, qb) - l21 * l21));

    SampleBatch batch;
    batch.basis = basis;
    batch.seed = seed;
    batch.records.resize(n);
    const rng::Philox4x32 gen(seed);
    const std::uint32_t stream = detail::kQuantumStream + basis.code();
    rng::parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto [z1, z2] = rng::normal_pair(gen(i, stream));
            batch.records[i] = Outcome{mean_a + l11 * z1, mean_b + l21 * z1 + l22 * z2};
        }
    });
    return batch;
}

struct BatchMoments {
    double mean_a = 0.0;
    double mean_b = 0.0;
    double var_a = 0.0;
    double var_b = 0.0;
    double cov_ab = 0.0;
};

/// Unbiased sample moments (two-pass).
inline BatchMoments batch_moments(const SampleBatch& b) {
    const auto n = static_cast<double>(b.size());
    if (b.size() < 2) throw InvalidArgument("need at least two records for sample moments");
    BatchMoments m;
    for (const auto& o : b.records) {
        m.mean_a += o.a;
        m.mean_b += o.b;
    }
    m.mean_a /= n;
    m.mean_b /= n;
    for (const auto& o : b.records) {
        const double da = o.a - m.mean_a;
        const double db = o.b - m.mean_b;
        m.var_a += da * da;
        m.var_b += db * db;
        m.cov_ab += da * db;
    }
    m.var_a /= n - 1.0;
    m.var_b /= n - 1.0;
    m.cov_ab /= n - 1.0;
    return m;
}

/// Scott's rule 3.49 sigma n^{-1/3} for the conditioning (B) outcome.
inline double scott_bin_width(const SampleBatch& b) {
    const auto m = batch_moments(b);
    return 3.49 * std::sqrt(m.var_b) * std::cbrt(1.0 / static_cast<double>(b.size()));
}

namespace detail {

struct Binning {
    double origin = 0.0;
    double width = 0.0;
    std::size_t n_bins = 0;
    std::vector<std::uint32_t> index;  // per record

    std::size_t locate(double x) const {
        const double k = std::floor((x - origin) / width);
        return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(n_bins - 1)));
    }
};

inline Binning make_binning(const SampleBatch& b, double width) {
    if (!(width > 0.0) || !std::isfinite(width)) throw InvalidArgument("bin width must be positive");
    Binning bins;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& o : b.records) {
        lo = std::min(lo, o.b);
        hi = std::max(hi, o.b);
    }
    bins.origin = lo;
    bins.width = width;
    const double span = std::floor((hi - lo) / width) + 1.0;
    if (span > 1e8) throw InvalidArgument("bin width too small for the sample range");
    bins.n_bins = static_cast<std::size_t>(span);
    bins.index.resize(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) bins.index[i] = static_cast<std::uint32_t>(bins.locate(b.records[i].b));
    return bins;
}

struct HistogramBuild {
    ConditionalHistogram hist;
    Binning binning;
    std::vector<std::int32_t> retained_slot;  // bin -> slot in hist.bins, or -1
};

inline HistogramBuild build_histogram(const SampleBatch& b, double width, std::size_t occupancy,
                                      bool keep_deviations) {
    if (occupancy < 2) throw InvalidArgument("occupancy threshold must be at least 2");
    if (b.size() < occupancy) throw InvalidArgument("fewer records than the occupancy threshold");
    HistogramBuild out;
    out.binning = make_binning(b, width);
    const std::size_t nb = out.binning.n_bins;
    std::vector<std::size_t> count(nb, 0);
    std::vector<double> sum(nb, 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) {
        const auto k = out.binning.index[i];
        ++count[k];
        sum[k] += b.records[i].a;
    }
    auto& hist = out.hist;
    hist.bin_width = width;
    hist.origin = out.binning.origin;
    hist.occupancy_threshold = occupancy;
    hist.total_count = b.size();
    out.retained_slot.assign(nb, -1);
    const auto n = static_cast<double>(b.size());
    for (std::size_t k = 0; k < nb; ++k) {
        if (count[k] == 0) continue;
        if (count[k] < occupancy) {
            hist.excluded_weight += static_cast<double>(count[k]) / n;
            ++hist.dropped_bins;
            continue;
        }
        ConditionalBin bin;
        bin.lo = hist.origin + width * static_cast<double>(k);
        bin.hi = bin.lo + width;
        bin.count = count[k];
        bin.mean = sum[k] / static_cast<double>(count[k]);
        bin.weight = static_cast<double>(count[k]) / n;
        out.retained_slot[k] = static_cast<std::int32_t>(hist.bins.size());
        hist.bins.push_back(std::move(bin));
    }
    if (hist.bins.empty()) throw OccupancyFailure("no conditioning bin reached the occupancy threshold");
    hist.renormalized = hist.excluded_weight > 0.0;

    for (std::size_t i = 0; i < b.size(); ++i) {
        const auto slot = out.retained_slot[out.binning.index[i]];
        if (slot < 0) continue;
        auto& bin = hist.bins[static_cast<std::size_t>(slot)];
        const double d = b.records[i].a - bin.mean;
        bin.variance += d * d;
        if (keep_deviations) bin.abs_deviations.push_back(std::abs(d));
    }
    for (auto& bin : hist.bins) {
        bin.variance /= static_cast<double>(bin.count - 1);
        if (keep_deviations) std::sort(bin.abs_deviations.begin(), bin.abs_deviations.end());
    }
    return out;
}

}  // namespace detail

/// Conditional distributions of the A outcome binned on the B outcome.
/// A bin width <= 0 selects Scott's rule. Bins below `occupancy` are dropped.
inline ConditionalHistogram empirical_conditionals(const SampleBatch& b, double bin_width = 0.0,
                                                   std::size_t occupancy = 50, bool keep_deviations = false) {
    const double w = bin_width > 0.0 ? bin_width : scott_bin_width(b);
    return detail::build_histogram(b, w, occupancy, keep_deviations).hist;
}

/// Point estimate with a percentile bootstrap interval.
struct Estimate {
    double value = 0.0;
    double ci_low = std::numeric_limits<double>::quiet_NaN();
    double ci_high = std::numeric_limits<double>::quiet_NaN();

    bool contains(double x) const { return x >= ci_low && x <= ci_high; }
    double width() const { return ci_high - ci_low; }
};

struct EmpiricalReport {
    CriterionReport report;
    double ci_low = std::numeric_limits<double>::quiet_NaN();
    double ci_high = std::numeric_limits<double>::quiet_NaN();
    /// Whole confidence interval lies below the bound.
    bool significant = false;
};

struct EstimatorConfig {
    /// <= 0 selects Scott's rule per batch.
    double bin_width = 0.0;
    std::size_t occupancy = 50;
    /// Number of bootstrap resamples; 0 skips interval estimation.
    std::size_t bootstrap = 200;
    double confidence = 0.95;
    std::uint64_t bootstrap_seed = 0;
    unsigned workers = 0;
};

struct EmpiricalCriteria {
    Estimate d2_inf_x;      // binned conditional variance, X_a given X_b
    Estimate d2_inf_p;      // binned conditional variance, P_a given P_b
    Estimate d2_linear_x;   // Var(X_a - g X_b) at the fitted gain
    Estimate d2_linear_p;   // Var(P_a - g P_b) at the fitted gain
    Estimate gain_x;
    Estimate gain_p;
    Estimate d2_linear_x_unit;  // Var(X_a - X_b)
    Estimate d2_linear_p_unit;  // Var(P_a + P_b)
    double bin_width_x = 0.0;
    double bin_width_p = 0.0;
    double excluded_weight_x = 0.0;
    double excluded_weight_p = 0.0;
    std::vector<EmpiricalReport> reports;

    const EmpiricalReport& find(CriterionName name) const {
        for (const auto& r : reports) {
            if (r.report.name == name) return r;
        }
        throw InvalidArgument("no report named " + std::string(to_string(name)));
    }
};

namespace detail {

/// Statistics of one batch, either from the data or one Poisson-weighted resample.
struct BatchStats {
    double inferred = 0.0;  // binned conditional variance
    double var_a = 0.0;
    double var_b = 0.0;
    double cov_ab = 0.0;

    double gain() const { return cov_ab / var_b; }
    double linear_optimal() const { return var_a - cov_ab * cov_ab / var_b; }
    // Var(a - s b) for s = +1 or -1
    double unit(double sign) const { return var_a + var_b - 2.0 * sign * cov_ab; }
};

struct PreparedBatch {
    const SampleBatch* batch = nullptr;
    HistogramBuild build;
    BatchMoments moments;
    std::vector<std::int32_t> slot_of_record;
};

inline PreparedBatch prepare(const SampleBatch& b, const EstimatorConfig& cfg) {
    PreparedBatch p;
    p.batch = &b;
    const double w = cfg.bin_width > 0.0 ? cfg.bin_width : scott_bin_width(b);
    p.build = build_histogram(b, w, cfg.occupancy, false);
    p.moments = batch_moments(b);
    p.slot_of_record.resize(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) p.slot_of_record[i] = p.build.retained_slot[p.build.binning.index[i]];
    return p;
}

inline BatchStats point_stats(const PreparedBatch& p) {
    return BatchStats{p.build.hist.inferred_variance(), p.moments.var_a, p.moments.var_b, p.moments.cov_ab};
}

/// One Poisson(1)-weighted resample. Weights are a pure function of
/// (stream_seed, record index). Retained bins are those of the original data.
inline BatchStats resample_stats(const PreparedBatch& p, std::uint64_t stream_seed, std::size_t occupancy) {
    const auto& recs = p.batch->records;
    const auto& bins = p.build.hist.bins;
    std::vector<double> bw(bins.size(), 0.0), bs(bins.size(), 0.0), bss(bins.size(), 0.0);
    double w_tot = 0.0, sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        if ((i & 1u) == 0) bits = rng::splitmix64(stream_seed + (i >> 1) * 0x9E3779B97F4A7C15ull);
        const auto word = static_cast<std::uint32_t>((i & 1u) == 0 ? bits : bits >> 32);
        const std::uint32_t k = rng::poisson1(word);
        if (k == 0) continue;
        const double w = static_cast<double>(k);
        const double da = recs[i].a - p.moments.mean_a;
        const double db = recs[i].b - p.moments.mean_b;
        w_tot += w;
        sa += w * da;
        sb += w * db;
        saa += w * da * da;
        sbb += w * db * db;
        sab += w * da * db;
        const auto slot = p.slot_of_record[i];
        if (slot >= 0) {
            const auto s = static_cast<std::size_t>(slot);
            const double d = recs[i].a - bins[s].mean;
            bw[s] += w;
            bs[s] += w * d;
            bss[s] += w * d * d;
        }
    }
    BatchStats st;
    const double ma = sa / w_tot;
    const double mb = sb / w_tot;
    st.var_a = (saa - w_tot * ma * ma) / (w_tot - 1.0);
    st.var_b = (sbb - w_tot * mb * mb) / (w_tot - 1.0);
    st.cov_ab = (sab - w_tot * ma * mb) / (w_tot - 1.0);
    double num = 0.0, den = 0.0;
    for (std::size_t s = 0; s < bins.size(); ++s) {
        if (bw[s] < static_cast<double>(occupancy) || bw[s] < 2.0) continue;
        const double var = (bss[s] - bs[s] * bs[s] / bw[s]) / (bw[s] - 1.0);
        num += bw[s] * var;
        den += bw[s];
    }
    st.inferred = den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
    return st;
}

/// Linear-interpolated sample quantile.
inline double quantile(std::vector<double> v, double q) {
    std::erase_if(v, [](double x) { return !std::isfinite(x); });
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace detail

/// Empirical EPR1989, EPRLinear and two-mode-squeezing criteria from an
/// (X, X) batch and an independent (P, P) batch of the same state.
inline EmpiricalCriteria empirical_criteria(const SampleBatch& bx, const SampleBatch& bp,
                                            const EstimatorConfig& cfg = {}) {
    if (!(bx.basis == kBasisXX) || !(bp.basis == kBasisPP)) {
        throw InvalidArgument("empirical criteria need an XX batch and a PP batch");
    }
    if (bx.size() < 10000 || bp.size() < 10000) throw InvalidArgument("empirical criteria need at least 1e4 records");
    if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0)) throw InvalidArgument("confidence must lie in (0, 1)");

    const auto px = detail::prepare(bx, cfg);
    const auto pp = detail::prepare(bp, cfg);

    struct Derived {
        double d2x, d2p, linx, linp, gx, gp, unitx, unitp;
    };
    auto derive = [](const detail::BatchStats& sx, const detail::BatchStats& sp) {
        return Derived{sx.inferred,        sp.inferred,  sx.linear_optimal(), sp.linear_optimal(),
                       sx.gain(),          sp.gain(),    sx.unit(1.0),        sp.unit(-1.0)};
    };
    const Derived point = derive(detail::point_stats(px), detail::point_stats(pp));

    std::vector<Derived> boot(cfg.bootstrap);
    if (cfg.bootstrap > 0) {
        rng::parallel_for(cfg.bootstrap, cfg.workers, [&](std::size_t begin, std::size_t end) {
            for (std::size_t k = begin; k < end; ++k) {
                const auto sx = detail::resample_stats(px, rng::derive_seed(cfg.bootstrap_seed, 2 * k), cfg.occupancy);
                const auto sp =
                    detail::resample_stats(pp, rng::derive_seed(cfg.bootstrap_seed, 2 * k + 1), cfg.occupancy);
                boot[k] = derive(sx, sp);
            }
        });
    }
    const double q_lo = 0.5 * (1.0 - cfg.confidence);
    const double q_hi = 0.5 * (1.0 + cfg.confidence);
    auto interval = [&](double value, auto&& extract) {
        Estimate e;
        e.value = value;
        if (boot.empty()) return e;
        std::vector<double> v;
        v.reserve(boot.size());
        for (const auto& d : boot) v.push_back(extract(d));
        e.ci_low = detail::quantile(v, q_lo);
        e.ci_high = detail::quantile(std::move(v), q_hi);
        return e;
    };

    EmpiricalCriteria out;
    out.d2_inf_x = interval(point.d2x, [](const Derived& d) { return d.d2x; });
    out.d2_inf_p = interval(point.d2p, [](const Derived& d) { return d.d2p; });
    out.d2_linear_x = interval(point.linx, [](const Derived& d) { return d.linx; });
    out.d2_linear_p = interval(point.linp, [](const Derived& d) { return d.linp; });
    out.gain_x = interval(point.gx, [](const Derived& d) { return d.gx; });
    out.gain_p = interval(point.gp, [](const Derived& d) { return d.gp; });
    out.d2_linear_x_unit = interval(point.unitx, [](const Derived& d) { return d.unitx; });
    out.d2_linear_p_unit = interval(point.unitp, [](const Derived& d) { return d.unitp; });
    out.bin_width_x = px.build.hist.bin_width;
    out.bin_width_p = pp.build.hist.bin_width;
    out.excluded_weight_x = px.build.hist.excluded_weight;
    out.excluded_weight_p = pp.build.hist.excluded_weight;

    auto add = [&](CriterionReport rep, auto&& extract) {
        const Estimate e = interval(rep.value, extract);
        EmpiricalReport er{rep, e.ci_low, e.ci_high, false};
        er.significant = std::isfinite(e.ci_high) && e.ci_high < rep.bound;
        out.reports.push_back(er);
    };

    {
        auto rep = CriterionReport::make(CriterionName::EPR1989, std::sqrt(point.d2x * point.d2p), 1.0);
        rep.variance_product = point.d2x * point.d2p;
        add(rep, [](const Derived& d) { return std::sqrt(d.d2x * d.d2p); });
    }
    {
        CriterionParameters params;
        params.g = point.gx;
        params.h = -point.gp;
        auto rep = CriterionReport::make(CriterionName::EPRLinear, std::sqrt(point.linx * point.linp), 1.0, params);
        rep.variance_product = point.linx * point.linp;
        add(rep, [](const Derived& d) { return std::sqrt(d.linx * d.linp); });
    }
    {
        CriterionParameters params;
        params.g = 1.0;
        params.h = 1.0;
        add(CriterionReport::make(CriterionName::TwoModeSqueezingProduct, point.unitx * point.unitp, 4.0, params),
            [](const Derived& d) { return d.unitx * d.unitp; });
        add(CriterionReport::make(CriterionName::TwoModeSqueezingX, point.unitx, 2.0, params),
            [](const Derived& d) { return d.unitx; });
        add(CriterionReport::make(CriterionName::TwoModeSqueezingP, point.unitp, 2.0, params),
            [](const Derived& d) { return d.unitp; });
    }
    return out;
}

inline constexpr std::string_view kEmpiricalCsvHeader =
    "name,value,bound,violated,margin,g,h,delta,ci_low,ci_high,significant";

inline std::string to_csv_row(const EmpiricalReport& r) {
    return to_csv_row(r.report) + "," + csv::row(r.ci_low, r.ci_high, r.significant);
}

/// Batch file: schema line, provenance comment, column header, one record per row.
inline void write_batch_csv(std::ostream& os, const SampleBatch& b) {
    os << csv::kSchemaLine << '\n';
    os << "# seed=" << b.seed << " basis=" << to_string(b.basis);
    if (b.provenance) {
        os << " r=" << csv::format(b.provenance->r) << " eta=" << csv::format(b.provenance->eta_a);
        if (b.provenance->eta_b != b.provenance->eta_a) os << ':' << csv::format(b.provenance->eta_b);
    }
    os << '\n' << "outcome_a,outcome_b\n";
    for (const auto& o : b.records) os << csv::format(o.a) << ',' << csv::format(o.b) << '\n';
}

inline SampleBatch read_batch_csv(std::istream& is) {
    SampleBatch b;
    std::string line;
    bool have_header = false;
    bool have_basis = false;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            std::istringstream tokens(line.substr(1));
            std::string tok;
            while (tokens >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = tok.substr(0, eq);
                const std::string val = tok.substr(eq + 1);
                if (key == "seed") {
                    b.seed = std::stoull(val);
                } else if (key == "basis") {
                    b.basis = parse_basis(val);
                    have_basis = true;
                } else if (key == "r") {
                    if (!b.provenance) b.provenance = Provenance{};
                    b.provenance->r = csv::parse_double(val);
                } else if (key == "eta") {
                    if (!b.provenance) b.provenance = Provenance{};
                    const auto parts = csv::split(val, ':');
                    b.provenance->eta_a = csv::parse_double(parts[0]);
                    b.provenance->eta_b = parts.size() > 1 ? csv::parse_double(parts[1]) : b.provenance->eta_a;
                }
            }
            continue;
        }
        if (!have_header) {
            if (line != "outcome_a,outcome_b") throw InvalidArgument("unexpected batch CSV header: " + line);
            have_header = true;
            continue;
        }
        const auto fields = csv::split(line);
        if (fields.size() != 2) throw InvalidArgument("batch CSV rows need two fields: " + line);
        b.records.push_back(Outcome{csv::parse_double(fields[0]), csv::parse_double(fields[1])});
    }
    if (!have_basis || !have_header) throw InvalidArgument("batch CSV lacks a basis comment or column header");
    return b;
}

}  // namespace cvepr
