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

// Local hidden-variable models for quadrature measurements.
//
// A continuous model is a mixture of Gaussian densities over
// lambda = (x_a, p_a, x_b, p_b). Each site answers a measurement setting
// from its own coordinates of lambda plus optional local noise, so locality
// holds by construction. The positive Wigner function of a Gaussian state is
// the single-component, noise-free case.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cvepr/error.hpp"
#include "cvepr/gaussian.hpp"
#include "cvepr/rng.hpp"
#include "cvepr/sampler.hpp"

namespace cvepr {

struct LhvComponent {
    double weight = 1.0;
    Vector4 mean = Vector4::Zero();
    Matrix4 cov = Matrix4::Identity();
    /// Per-quadrature variance of the local response given lambda; zero means
    /// the outcome is fixed by lambda.
    Vector4 response_variance = Vector4::Zero();
};

class LhvModel {
   public:
    explicit LhvModel(std::vector<LhvComponent> components) : components_(std::move(components)) {
        if (components_.empty()) throw InvalidArgument("hidden-variable model needs at least one component");
        double total = 0.0;
        for (const auto& c : components_) {
            if (!(c.weight >= 0.0) || !c.mean.allFinite() || !c.cov.allFinite() || !c.response_variance.allFinite() ||
                (c.response_variance.array() < 0.0).any()) {
                throw InvalidArgument("invalid hidden-variable component");
            }
            total += c.weight;
        }
        if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("component weights must sum to 1");
        double acc = 0.0;
        for (auto& c : components_) {
            const Matrix4 sym = 0.5 * (c.cov + c.cov.transpose());
            Eigen::SelfAdjointEigenSolver<Matrix4> eig(sym);
            if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, sym.norm())) {
                throw InvalidArgument("hidden-variable density covariance must be positive semidefinite");
            }
            factors_.push_back(eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal());
            acc += c.weight;
            cumulative_.push_back(acc);
        }
        cumulative_.back() = 1.0;
    }

    const std::vector<LhvComponent>& components() const { return components_; }

    /// Draw lambda for record i and report the component it came from.
    Vector4 draw_lambda(const rng::Philox4x32& gen, std::uint64_t i, std::size_t* component = nullptr) const {
        std::size_t k = 0;
        if (components_.size() > 1) {
            const auto blk = gen(i, kLambdaStream, 2);
            const double u = rng::to_open_unit(rng::join(blk[0], blk[1]));
            k = static_cast<std::size_t>(std::lower_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
            k = std::min(k, components_.size() - 1);
        }
        if (component) *component = k;
        const auto [z0, z1] = rng::normal_pair(gen(i, kLambdaStream, 0));
        const auto [z2, z3] = rng::normal_pair(gen(i, kLambdaStream, 1));
        return components_[k].mean + factors_[k] * Vector4(z0, z1, z2, z3);
    }

    /// Local response of one site: depends only on that site's setting and lambda.
    double respond(const rng::Philox4x32& gen, std::uint64_t i, std::size_t component, const Vector4& lambda,
                   Quadrature q) const {
        const double var = components_[component].response_variance(q.index());
        double out = lambda(q.index());
        if (var > 0.0) {
            const std::uint32_t stream = q.mode == Mode::A ? kNoiseStreamA : kNoiseStreamB;
            out += std::sqrt(var) * rng::normal_pair(gen(i, stream)).first;
        }
        return out;
    }

    static constexpr std::uint32_t kLambdaStream = 16;
    static constexpr std::uint32_t kNoiseStreamA = 17;
    static constexpr std::uint32_t kNoiseStreamB = 18;

   private:
    std::vector<LhvComponent> components_;
    std::vector<Matrix4> factors_;
    std::vector<double> cumulative_;
};

/// Hidden variables distributed by the state's Wigner function, with
/// deterministic responses. In the vacuum-variance-1 scaling the Wigner
/// covariance is the quadrature covariance itself.
inline LhvModel wigner_lhv_model(const GaussianState& s) {
    require_physical(s);
    LhvComponent c;
    c.mean = s.mean();
    c.cov = s.cov();
    return LhvModel({c});
}

/// Covariance of (outcome_a, outcome_b) predicted by the model for one setting pair.
inline Eigen::Matrix2d predicted_covariance(const LhvModel& m, Basis basis) {
    const int ia = basis.quadrature_a().index();
    const int ib = basis.quadrature_b().index();
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d second = Eigen::Matrix2d::Zero();
    for (const auto& c : m.components()) {
        const Eigen::Vector2d mu(c.mean(ia), c.mean(ib));
        Eigen::Matrix2d cov;
        cov << c.cov(ia, ia) + c.response_variance(ia), c.cov(ia, ib), c.cov(ib, ia), c.cov(ib, ib) + c.response_variance(ib);
        mean += c.weight * mu;
        second += c.weight * (cov + mu * mu.transpose());
    }
    return second - mean * mean.transpose();
}

inline SampleBatch sample_lhv(const LhvModel& m, Basis basis, std::size_t n, std::uint64_t seed, unsigned workers = 0) {
    if (n < 1) throw InvalidArgument("sample count must be at least 1");
    SampleBatch batch;
    batch.basis = basis;
    batch.seed = seed;
    batch.records.resize(n);
    const rng::Philox4x32 gen(seed);
    rng::parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            std::size_t k = 0;
            const Vector4 lambda = m.draw_lambda(gen, i, &k);
            batch.records[i] = Outcome{m.respond(gen, i, k, lambda, basis.quadrature_a()),
                                       m.respond(gen, i, k, lambda, basis.quadrature_b())};
        }
    });
    return batch;
}

/// Record-by-record settings. A's outcome for record i is a function of
/// (seed, i, settings_a[i]) alone.
inline std::vector<Outcome> sample_lhv(const LhvModel& m, std::span<const Angle> settings_a,
                                       std::span<const Angle> settings_b, std::uint64_t seed, unsigned workers = 0) {
    if (settings_a.size() != settings_b.size()) throw InvalidArgument("setting sequences must have equal length");
    std::vector<Outcome> out(settings_a.size());
    const rng::Philox4x32 gen(seed);
    rng::parallel_for(out.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            std::size_t k = 0;
            const Vector4 lambda = m.draw_lambda(gen, i, &k);
            out[i] = Outcome{m.respond(gen, i, k, lambda, {Mode::A, settings_a[i]}),
                             m.respond(gen, i, k, lambda, {Mode::B, settings_b[i]})};
        }
    });
    return out;
}

struct AuxiliaryAudit {
    /// lambda-mass whose responses at A have Delta_lambda x * Delta_lambda p < 1.
    double fraction_below_one = 0.0;
    double min_product = std::numeric_limits<double>::infinity();
};

/// Audit of Delta_lambda x Delta_lambda p >= 1 at site A. Response spreads
/// are constant within a component, so the audit is exact.
inline AuxiliaryAudit auxiliary_constraint_audit(const LhvModel& m) {
    AuxiliaryAudit audit;
    for (const auto& c : m.components()) {
        const double product = std::sqrt(c.response_variance(kXa.index()) * c.response_variance(kPa.index()));
        audit.min_product = std::min(audit.min_product, product);
        if (product < 1.0) audit.fraction_below_one += c.weight;
    }
    return audit;
}

// ---------------------------------------------------------------------------
// Finite-alphabet mixtures.

/// One hidden state with factorized outcome tables, indexed by quadrature
/// (X_a, P_a, X_b, P_b).
struct DiscreteLambda {
    double weight = 0.0;
    std::array<std::vector<double>, 4> tables;
};

struct DiscreteMixtureLhv {
    /// Outcome values per quadrature.
    std::array<std::vector<double>, 4> alphabets;
    std::vector<DiscreteLambda> lambdas;
};

inline constexpr std::size_t kDefaultAlphabetSize = 32;

inline void validate(const DiscreteMixtureLhv& m, double tol = 1e-12) {
    if (m.lambdas.empty()) throw MalformedTable("mixture has no hidden states");
    double total = 0.0;
    for (const auto& lam : m.lambdas) {
        if (!(lam.weight >= 0.0)) throw MalformedTable("negative hidden-state weight");
        total += lam.weight;
        for (std::size_t q = 0; q < 4; ++q) {
            if (lam.tables[q].size() != m.alphabets[q].size() || m.alphabets[q].empty()) {
                throw MalformedTable("outcome table size does not match its alphabet");
            }
            double row = 0.0;
            for (double p : lam.tables[q]) {
                if (!(p >= 0.0)) throw MalformedTable("negative outcome probability");
                row += p;
            }
            if (std::abs(row - 1.0) > tol) throw MalformedTable("outcome table is not normalized");
        }
    }
    if (std::abs(total - 1.0) > tol) throw MalformedTable("hidden-state weights must sum to 1");
}

/// Normal density sampled on an alphabet and normalized.
inline std::vector<double> discretized_normal(std::span<const double> alphabet, double mean, double variance) {
    std::vector<double> p(alphabet.size());
    double total = 0.0;
    for (std::size_t k = 0; k < alphabet.size(); ++k) {
        const double d = alphabet[k] - mean;
        p[k] = std::exp(-0.5 * d * d / variance);
        total += p[k];
    }
    if (!(total > 0.0)) throw InvalidArgument("normal density vanishes on the alphabet");
    for (double& v : p) v /= total;
    return p;
}

namespace detail {

struct TableMoments {
    double mean = 0.0;
    double variance = 0.0;
};

inline TableMoments table_moments(std::span<const double> alphabet, std::span<const double> p) {
    TableMoments m;
    double total = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        m.mean += p[k] * alphabet[k];
        total += p[k];
    }
    m.mean /= total;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double d = alphabet[k] - m.mean;
        m.variance += p[k] * d * d;
    }
    m.variance /= total;
    return m;
}

}  // namespace detail

inline AuxiliaryAudit auxiliary_constraint_audit(const DiscreteMixtureLhv& m) {
    validate(m);
    AuxiliaryAudit audit;
    for (const auto& lam : m.lambdas) {
        const auto mx = detail::table_moments(m.alphabets[0], lam.tables[0]);
        const auto mp = detail::table_moments(m.alphabets[1], lam.tables[1]);
        const double product = std::sqrt(mx.variance * mp.variance);
        audit.min_product = std::min(audit.min_product, product);
        if (product < 1.0) audit.fraction_below_one += lam.weight;
    }
    return audit;
}

/// Comparison at one conditioning outcome x_i^B.
struct ConditionalBoundRow {
    double conditioning_value = 0.0;
    double probability = 0.0;          // P(x_i^B)
    double mixture_variance = 0.0;     // Delta_i^2 x
    double weighted_lambda_variance = 0.0;  // sum_lambda f_lambda Delta_{lambda,i}^2 x
    double slack = 0.0;                // mixture_variance - weighted_lambda_variance
    double between_variance = 0.0;     // sum_lambda f_lambda (mu_{lambda,i} - mu_i)^2
    bool equality = false;
    bool means_coincide = false;
};

struct ConditionalBoundReport {
    std::vector<ConditionalBoundRow> rows;
    double min_slack = std::numeric_limits<double>::infinity();
    bool bound_holds = true;
    /// Delta_{lambda,i} x == Delta_lambda x for every lambda and i.
    bool factorization_holds = true;
    double max_factorization_error = 0.0;
    bool all_conditionals_sharp = true;
    bool all_lambdas_sharp = true;
};

/// Check Delta_i^2 x >= sum_lambda f_lambda(x_i^B) Delta_{lambda,i}^2 x at every
/// conditioning outcome, computing each conditional from the joint table
/// P_lambda(x, x^B) = P_lambda(x) P_lambda(x^B).
inline ConditionalBoundReport mixture_conditional_bound(const DiscreteMixtureLhv& m, Basis basis = kBasisXX,
                                                        double tol = 1e-12) {
    validate(m);
    const auto qa = static_cast<std::size_t>(basis.quadrature_a().index());
    const auto qb = static_cast<std::size_t>(basis.quadrature_b().index());
    const auto& xa = m.alphabets[qa];
    const auto& xb = m.alphabets[qb];
    const std::size_t n_lambda = m.lambdas.size();

    std::vector<detail::TableMoments> marginal(n_lambda);
    for (std::size_t l = 0; l < n_lambda; ++l) marginal[l] = detail::table_moments(xa, m.lambdas[l].tables[qa]);

    ConditionalBoundReport rep;
    std::vector<double> joint_col(xa.size());
    std::vector<double> cond(xa.size());
    std::vector<double> mixture(xa.size());
    std::vector<detail::TableMoments> per_lambda(n_lambda);
    std::vector<double> f(n_lambda);

    for (std::size_t i = 0; i < xb.size(); ++i) {
        double p_i = 0.0;
        for (std::size_t l = 0; l < n_lambda; ++l) {
            f[l] = m.lambdas[l].weight * m.lambdas[l].tables[qb][i];
            p_i += f[l];
        }
        if (!(p_i > 0.0)) continue;
        std::fill(mixture.begin(), mixture.end(), 0.0);
        double weighted = 0.0;
        for (std::size_t l = 0; l < n_lambda; ++l) {
            f[l] /= p_i;
            const double pb = m.lambdas[l].tables[qb][i];
            if (!(pb > 0.0)) continue;
            for (std::size_t k = 0; k < xa.size(); ++k) {
                joint_col[k] = m.lambdas[l].tables[qa][k] * pb;
                cond[k] = joint_col[k] / pb;
                mixture[k] += f[l] * cond[k];
            }
            per_lambda[l] = detail::table_moments(xa, cond);
            weighted += f[l] * per_lambda[l].variance;
            const double ferr = std::abs(std::sqrt(per_lambda[l].variance) - std::sqrt(marginal[l].variance));
            rep.max_factorization_error = std::max(rep.max_factorization_error, ferr);
        }
        const auto mix = detail::table_moments(xa, mixture);

        ConditionalBoundRow row;
        row.conditioning_value = xb[i];
        row.probability = p_i;
        row.mixture_variance = mix.variance;
        row.weighted_lambda_variance = weighted;
        row.slack = mix.variance - weighted;
        double max_mean_gap = 0.0;
        for (std::size_t l = 0; l < n_lambda; ++l) {
            if (!(f[l] > 0.0)) continue;
            const double d = per_lambda[l].mean - mix.mean;
            row.between_variance += f[l] * d * d;
            max_mean_gap = std::max(max_mean_gap, std::abs(d));
        }
        const double scale = 1.0 + mix.variance;
        row.equality = std::abs(row.slack) <= tol * scale;
        row.means_coincide = max_mean_gap <= std::sqrt(tol) * std::sqrt(scale);
        rep.min_slack = std::min(rep.min_slack, row.slack);
        if (row.slack < -tol * scale) rep.bound_holds = false;
        if (mix.variance > tol) rep.all_conditionals_sharp = false;
        rep.rows.push_back(row);
    }
    rep.factorization_holds = rep.max_factorization_error <= std::sqrt(tol);
    for (std::size_t l = 0; l < n_lambda; ++l) {
        if (m.lambdas[l].weight > 0.0 && marginal[l].variance > tol) rep.all_lambdas_sharp = false;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Quantum vs. hidden-variable output comparison.

struct MomentComparison {
    std::string basis;
    std::string moment;
    double quantum = 0.0;
    double lhv = 0.0;
    double diff = 0.0;
    /// Standard error of diff from the two samples.
    double sigma = 0.0;

    double z() const { return sigma > 0.0 ? diff / sigma : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity()); }
    bool within(double k) const { return std::abs(diff) <= k * sigma; }
};

/// Two-sample comparison of raw moments E[a], E[b], E[a^2], E[b^2], E[ab],
/// E[a^4], E[b^4]; each is a sample mean, so its standard error is exact.
inline std::vector<MomentComparison> compare_moments(const SampleBatch& quantum, const SampleBatch& lhv) {
    struct Stat {
        const char* name;
        double (*f)(const Outcome&);
    };
    static constexpr Stat stats[] = {
        {"E[a]", [](const Outcome& o) { return o.a; }},
        {"E[b]", [](const Outcome& o) { return o.b; }},
        {"E[a^2]", [](const Outcome& o) { return o.a * o.a; }},
        {"E[b^2]", [](const Outcome& o) { return o.b * o.b; }},
        {"E[ab]", [](const Outcome& o) { return o.a * o.b; }},
        {"E[a^4]", [](const Outcome& o) { return o.a * o.a * o.a * o.a; }},
        {"E[b^4]", [](const Outcome& o) { return o.b * o.b * o.b * o.b; }},
    };
    auto mean_and_se = [](const SampleBatch& b, double (*f)(const Outcome&)) {
        const auto n = static_cast<double>(b.size());
        double mean = 0.0;
        for (const auto& o : b.records) mean += f(o);
        mean /= n;
        double ss = 0.0;
        for (const auto& o : b.records) {
            const double d = f(o) - mean;
            ss += d * d;
        }
        return std::pair{mean, ss / (n - 1.0) / n};
    };
    std::vector<MomentComparison> out;
    for (const auto& st : stats) {
        const auto [mq, vq] = mean_and_se(quantum, st.f);
        const auto [ml, vl] = mean_and_se(lhv, st.f);
        out.push_back(MomentComparison{to_string(quantum.basis), st.name, mq, ml, mq - ml, std::sqrt(vq + vl)});
    }
    return out;
}

}  // namespace cvepr
