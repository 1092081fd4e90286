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

#include "cvepr/lhv.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "support/finite_mixtures.hpp"

using namespace cvepr;
using namespace cvepr::fixtures;

TEST(WignerModel, VacuumIsStandardNormal) {
    const auto m = wigner_lhv_model(vacuum_state());
    ASSERT_EQ(m.components().size(), 1u);
    EXPECT_TRUE(m.components()[0].cov.isApprox(Matrix4::Identity(), 0.0));
    EXPECT_TRUE(m.components()[0].response_variance.isZero(0.0));
}

TEST(WignerModel, DensityCovarianceIsStateCovariance) {
    const auto s = two_mode_squeezed(0.5);
    const auto m = wigner_lhv_model(s);
    EXPECT_TRUE(m.components()[0].cov.isApprox(s.cov(), 0.0));
    EXPECT_DOUBLE_EQ(m.components()[0].cov(0, 0), std::cosh(1.0));
    EXPECT_DOUBLE_EQ(m.components()[0].cov(1, 3), -std::sinh(1.0));
    for (Basis b : kAllBases) {
        const auto pred = predicted_covariance(m, b);
        const auto qa = b.quadrature_a(), qb = b.quadrature_b();
        EXPECT_DOUBLE_EQ(pred(0, 0), s.cov(qa, qa));
        EXPECT_DOUBLE_EQ(pred(0, 1), s.cov(qa, qb));
        EXPECT_DOUBLE_EQ(pred(1, 1), s.cov(qb, qb));
    }
    const auto sampled = batch_moments(sample_lhv(m, kBasisPP, 1000000, 3));
    EXPECT_NEAR(sampled.cov_ab, -std::sinh(1.0), 0.01);
    EXPECT_THROW(wigner_lhv_model(GaussianState(Vector4::Zero(), 0.5 * Matrix4::Identity())), UnphysicalState);
}

TEST(LhvModel, RejectsInvalidComponents) {
    EXPECT_THROW(LhvModel({}), InvalidArgument);
    LhvComponent c;
    c.weight = 0.7;
    EXPECT_THROW(LhvModel({c}), InvalidArgument);
    c.weight = 1.0;
    c.cov(0, 0) = -1.0;
    EXPECT_THROW(LhvModel({c}), InvalidArgument);
    c.cov = Matrix4::Identity();
    c.response_variance(2) = -0.1;
    EXPECT_THROW(LhvModel({c}), InvalidArgument);
}

TEST(LhvSampling, MatchesQuantumMomentsInEveryBasis) {
    for (double r : {0.3, 0.5, 1.0}) {
        const auto s = two_mode_squeezed(r);
        const auto model = wigner_lhv_model(s);
        for (Basis b : kAllBases) {
            const auto q = sample_joint(s, b, 1000000, 401);
            const auto l = sample_lhv(model, b, 1000000, 402);
            for (const auto& c : compare_moments(q, l)) {
                EXPECT_TRUE(c.within(3.0)) << "r=" << r << " " << c.basis << " " << c.moment << " z=" << c.z();
            }
        }
    }
}

TEST(LhvSampling, VacuumMatchesQuantum) {
    const auto q = sample_joint(vacuum_state(), kBasisXX, 1000000, 403);
    const auto l = sample_lhv(wigner_lhv_model(vacuum_state()), kBasisXX, 1000000, 404);
    for (const auto& c : compare_moments(q, l)) EXPECT_TRUE(c.within(3.0)) << c.moment << " z=" << c.z();
}

TEST(LhvSampling, StrongCriterionViolatedByHiddenVariables) {
    const auto model = wigner_lhv_model(two_mode_squeezed(0.5));
    EstimatorConfig cfg;
    cfg.bootstrap_seed = 405;
    const auto e = empirical_criteria(sample_lhv(model, kBasisXX, 1000000, 406),
                                      sample_lhv(model, kBasisPP, 1000000, 407), cfg);
    const auto& epr = e.find(CriterionName::EPR1989);
    EXPECT_NEAR(epr.report.value, 0.648, 0.01);
    EXPECT_GT(epr.ci_low, 0.62);
    EXPECT_LT(epr.ci_high, 0.68);
    EXPECT_TRUE(epr.significant);
}

TEST(LhvSampling, DeterministicAcrossWorkers) {
    LhvComponent a, b;
    a.weight = 0.3;
    b.weight = 0.7;
    b.mean = Vector4(1.0, 0.0, -1.0, 0.5);
    b.response_variance = Vector4(0.5, 2.0, 1.0, 1.0);
    const LhvModel m({a, b});
    const auto one = sample_lhv(m, kBasisXP, 100003, 9, 1);
    const auto many = sample_lhv(m, kBasisXP, 100003, 9, 7);
    EXPECT_EQ(one.records, many.records);
}

TEST(LhvSampling, BSettingsDoNotReachSiteA) {
    LhvComponent noisy;
    noisy.response_variance = Vector4(0.5, 0.5, 2.0, 2.0);
    const LhvModel models[] = {wigner_lhv_model(two_mode_squeezed(0.7)), LhvModel({noisy})};
    std::mt19937_64 gen(1);
    std::bernoulli_distribution coin(0.5);
    const std::size_t n = 20000;
    std::vector<Angle> sa(n), sb(n);
    for (std::size_t i = 0; i < n; ++i) {
        sa[i] = coin(gen) ? Angle::X : Angle::P;
        sb[i] = coin(gen) ? Angle::X : Angle::P;
    }
    for (const auto& m : models) {
        const auto base = sample_lhv(m, sa, sb, 77);
        auto permuted = sb;
        std::shuffle(permuted.begin(), permuted.end(), gen);
        const auto moved = sample_lhv(m, sa, permuted, 77);
        std::size_t b_changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            ASSERT_EQ(base[i].a, moved[i].a) << "record " << i;
            if (base[i].b != moved[i].b) ++b_changed;
        }
        EXPECT_GT(b_changed, 0u);
    }
    EXPECT_THROW(sample_lhv(models[0], std::span<const Angle>(sa), std::span<const Angle>(sb).first(3), 1),
                 InvalidArgument);
}

TEST(AuxiliaryAudit, WignerModelHasSharpHiddenStates) {
    for (double r : {0.0, 0.5, 2.0}) {
        const auto audit = auxiliary_constraint_audit(wigner_lhv_model(two_mode_squeezed(r)));
        EXPECT_DOUBLE_EQ(audit.fraction_below_one, 1.0);
        EXPECT_DOUBLE_EQ(audit.min_product, 0.0);
    }
}

TEST(AuxiliaryAudit, SeparableQuantumComponentsComply) {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> squeeze(-0.4, 0.4), noise(1.2, 1.8), shift(-1.0, 1.0);
    auto m = empty_mixture();
    for (int l = 0; l < 6; ++l) {
        DiscreteLambda lam;
        lam.weight = 1.0 / 6.0;
        for (int site = 0; site < 2; ++site) {
            const double nu = noise(gen), s = squeeze(gen);
            lam.tables[2 * site] = discretized_normal(m.alphabets[2 * site], shift(gen), nu * std::exp(2.0 * s));
            lam.tables[2 * site + 1] = discretized_normal(m.alphabets[2 * site + 1], shift(gen), nu * std::exp(-2.0 * s));
        }
        m.lambdas.push_back(lam);
    }
    const auto audit = auxiliary_constraint_audit(m);
    EXPECT_DOUBLE_EQ(audit.fraction_below_one, 0.0);
    EXPECT_GE(audit.min_product, 1.0);
}

TEST(AuxiliaryAudit, HalfDeterministicMixture) {
    LhvComponent sharp, fuzzy;
    sharp.weight = fuzzy.weight = 0.5;
    fuzzy.cov = 0.1 * Matrix4::Identity();
    fuzzy.response_variance = Vector4(2.0, 0.6, 1.0, 1.0);
    const auto audit = auxiliary_constraint_audit(LhvModel({sharp, fuzzy}));
    EXPECT_DOUBLE_EQ(audit.fraction_below_one, 0.5);
    EXPECT_DOUBLE_EQ(audit.min_product, 0.0);

    auto m = empty_mixture();
    DiscreteLambda det, wide;
    det.weight = wide.weight = 0.5;
    for (std::size_t q = 0; q < 4; ++q) {
        det.tables[q] = one_hot(m.alphabets[q].size(), 10);
        wide.tables[q] = discretized_normal(m.alphabets[q], 0.0, 1.5);
    }
    m.lambdas = {det, wide};
    EXPECT_DOUBLE_EQ(auxiliary_constraint_audit(m).fraction_below_one, 0.5);
}

TEST(MixtureBound, SingleHiddenStateIsEquality) {
    auto m = empty_mixture();
    DiscreteLambda lam;
    lam.weight = 1.0;
    for (std::size_t q = 0; q < 4; ++q) lam.tables[q] = discretized_normal(m.alphabets[q], 0.3, 1.7);
    m.lambdas = {lam};
    const auto rep = mixture_conditional_bound(m);
    EXPECT_TRUE(rep.bound_holds);
    EXPECT_TRUE(rep.factorization_holds);
    ASSERT_EQ(rep.rows.size(), m.alphabets[2].size());
    for (const auto& row : rep.rows) {
        EXPECT_TRUE(row.equality);
        EXPECT_TRUE(row.means_coincide);
        // Every conditional is the lambda marginal; tails clipped at the alphabet edge.
        EXPECT_NEAR(row.mixture_variance, rep.rows.front().mixture_variance, 1e-14);
        EXPECT_NEAR(row.mixture_variance, 1.7, 5e-3);
    }
}

TEST(MixtureBound, DistinctMeansGiveStrictInequality) {
    auto m = empty_mixture();
    DiscreteLambda a, b;
    a.weight = 0.4;
    b.weight = 0.6;
    for (std::size_t q = 0; q < 4; ++q) {
        a.tables[q] = discretized_normal(m.alphabets[q], -1.0, 1.0);
        b.tables[q] = discretized_normal(m.alphabets[q], 1.5, 0.8);
    }
    m.lambdas = {a, b};
    const auto rep = mixture_conditional_bound(m, kBasisPX);
    EXPECT_TRUE(rep.bound_holds);
    EXPECT_GT(rep.min_slack, 0.0);
    for (const auto& row : rep.rows) {
        EXPECT_FALSE(row.equality);
        EXPECT_FALSE(row.means_coincide);
        EXPECT_NEAR(row.slack, row.between_variance, 1e-12);
    }
}

TEST(MixtureBound, SharpConditionalsForceSharpHiddenStates) {
    auto m = empty_mixture();
    for (std::size_t l = 0; l < 4; ++l) {
        DiscreteLambda lam;
        lam.weight = 0.25;
        lam.tables[0] = one_hot(m.alphabets[0].size(), 3 * l);
        lam.tables[1] = discretized_normal(m.alphabets[1], 0.0, 1.0);
        lam.tables[2] = one_hot(m.alphabets[2].size(), 5 + l);
        lam.tables[3] = discretized_normal(m.alphabets[3], 0.0, 1.0);
        m.lambdas.push_back(lam);
    }
    const auto rep = mixture_conditional_bound(m);
    EXPECT_TRUE(rep.all_conditionals_sharp);
    EXPECT_TRUE(rep.all_lambdas_sharp);
    EXPECT_EQ(rep.rows.size(), 4u);

    // Overlapping B supports blur the conditionals; the check must notice.
    m.lambdas[1].tables[2] = m.lambdas[0].tables[2];
    EXPECT_FALSE(mixture_conditional_bound(m).all_conditionals_sharp);
    m.lambdas[1].tables[0] = discretized_normal(m.alphabets[0], 0.0, 1.0);
    EXPECT_FALSE(mixture_conditional_bound(m).all_lambdas_sharp);
}

TEST(MixtureBound, MalformedTables) {
    auto m = empty_mixture();
    EXPECT_THROW(mixture_conditional_bound(m), MalformedTable);
    DiscreteLambda lam;
    lam.weight = 1.0;
    for (std::size_t q = 0; q < 4; ++q) lam.tables[q] = discretized_normal(m.alphabets[q], 0.0, 1.0);
    m.lambdas = {lam};
    EXPECT_NO_THROW(mixture_conditional_bound(m));
    auto bad = m;
    bad.lambdas[0].tables[1][0] = -0.01;
    EXPECT_THROW(mixture_conditional_bound(bad), MalformedTable);
    bad = m;
    bad.lambdas[0].tables[2][0] += 0.01;
    EXPECT_THROW(mixture_conditional_bound(bad), MalformedTable);
    bad = m;
    bad.lambdas[0].tables[3].pop_back();
    EXPECT_THROW(mixture_conditional_bound(bad), MalformedTable);
    bad = m;
    bad.lambdas[0].weight = 0.9;
    EXPECT_THROW(auxiliary_constraint_audit(bad), MalformedTable);
}

TEST(MixtureBound, RandomMixturesNeverViolate) {
    std::mt19937_64 gen(2026);
    int violations = 0, mismatches = 0, equal_rows = 0, strict_rows = 0;
    for (int t = 0; t < 1000; ++t) {
        const bool shared = t % 3 == 0;
        const auto m = random_mixture(gen, shared);
        for (Basis b : kAllBases) {
            const auto rep = mixture_conditional_bound(m, b);
            if (!rep.bound_holds) ++violations;
            EXPECT_TRUE(rep.factorization_holds);
            for (const auto& row : rep.rows) {
                if (row.equality != row.means_coincide) ++mismatches;
                (row.equality ? equal_rows : strict_rows) += 1;
                EXPECT_NEAR(row.slack, row.between_variance, 1e-12 * (1.0 + row.mixture_variance));
            }
        }
    }
    EXPECT_EQ(violations, 0);
    EXPECT_EQ(mismatches, 0);
    EXPECT_GT(equal_rows, 0);
    EXPECT_GT(strict_rows, 0);
}
