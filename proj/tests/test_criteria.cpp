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

#include "cvepr/criteria.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cvepr/fock_oracle.hpp"
#include "support/random_states.hpp"
#include "support/separable_mixtures.hpp"

using namespace cvepr;

namespace {

const double kTanh1 = std::tanh(1.0);
const double kTwoOverE = 2.0 * std::exp(-1.0);

GaussianState lossy_half() { return apply_loss(two_mode_squeezed(0.5), 0.5, 0.5); }

}  // namespace

TEST(SeparableLowerBounds, Examples) {
    EXPECT_DOUBLE_EQ(separable_lower_bounds(1.0, 1.0).linear_product_bound, 2.0);
    EXPECT_DOUBLE_EQ(separable_lower_bounds(0.0, 0.0).linear_product_bound, 1.0);
    for (double g : {-3.0, 0.0, 0.4, 7.0}) {
        const auto b = separable_lower_bounds(g, 0.5 * g);
        EXPECT_DOUBLE_EQ(b.tms_product_bound, 4.0);
        EXPECT_DOUBLE_EQ(b.tms_single_bound, 2.0);
        EXPECT_DOUBLE_EQ(b.inf_product_bound, 1.0);
        EXPECT_GE(b.linear_product_bound, 1.0);
    }
    EXPECT_THROW(separable_lower_bounds(std::nan(""), 1.0), InvalidArgument);
}

TEST(InferredVariances, Examples) {
    const auto v0 = inferred_variances(vacuum_state());
    EXPECT_DOUBLE_EQ(v0.x, 1.0);
    EXPECT_DOUBLE_EQ(v0.p, 1.0);
    const auto v = inferred_variances(two_mode_squeezed(0.5));
    EXPECT_NEAR(v.x, 0.6480543, 1e-7);
    EXPECT_NEAR(v.p, 0.6480543, 1e-7);
    const auto l = inferred_variances(lossy_half());
    EXPECT_NEAR(l.x, 1.0, 1e-14);
    EXPECT_NEAR(l.p, 1.0, 1e-14);
    EXPECT_THROW(inferred_variances(GaussianState(Vector4::Zero(), 0.5 * Matrix4::Identity())), UnphysicalState);
}

TEST(Epr1989, Examples) {
    const auto boundary = epr_1989(1.0, 1.0);
    EXPECT_DOUBLE_EQ(boundary.value, 1.0);
    EXPECT_FALSE(boundary.violated);
    EXPECT_DOUBLE_EQ(boundary.margin, 0.0);

    const auto tmsv = epr_1989(two_mode_squeezed(0.5));
    EXPECT_NEAR(tmsv.value, 0.6480543, 1e-7);
    EXPECT_TRUE(tmsv.violated);
    EXPECT_NEAR(*tmsv.variance_product, tmsv.value * tmsv.value, 1e-15);

    const auto lossy = epr_1989(lossy_half());
    EXPECT_DOUBLE_EQ(lossy.value, 1.0);
    EXPECT_FALSE(lossy.violated);

    EXPECT_THROW(epr_1989(0.0, 1.0), InvalidArgument);
    EXPECT_THROW(epr_1989(1.0, -0.1), InvalidArgument);
}

TEST(LinearInferenceVariance, Examples) {
    std::mt19937_64 gen(3);
    for (int t = 0; t < 50; ++t) {
        const auto s = fixtures::random_physical_state(gen);
        EXPECT_DOUBLE_EQ(linear_inference_variance(s, 0.0, kInferX), marginal_variance(s, kXa));
        EXPECT_DOUBLE_EQ(linear_inference_variance(s, 0.0, kInferP), marginal_variance(s, kPa));
    }
    const auto s = two_mode_squeezed(0.5);
    EXPECT_NEAR(linear_inference_variance(s, kTanh1, kInferX), 0.6480543, 1e-7);
    EXPECT_NEAR(linear_inference_variance(s, 1.0, kInferX), 0.7357589, 1e-7);
    EXPECT_NEAR(linear_inference_variance(s, 1.0, kInferX), kTwoOverE, 1e-14);

    // Cross-check against moments integrated on the Fock-space grid.
    const auto g = fock::joint_density(fock::tmsv_coefficients(0.5, 60), fock::default_grid(0.5));
    const auto m = fock::grid_moments(g);
    EXPECT_NEAR(m.var_a + m.var_b - 2.0 * m.cov_ab, kTwoOverE, 1e-6);
}

TEST(OptimalGain, Examples) {
    EXPECT_DOUBLE_EQ(optimal_gain(vacuum_state(), kInferX), 0.0);
    const auto s = two_mode_squeezed(0.5);
    EXPECT_NEAR(optimal_gain(s, kInferX), 0.7615942, 1e-7);
    EXPECT_NEAR(optimal_gain(s, kInferP), -kTanh1, 1e-15);
    const GaussianState degenerate(Vector4::Zero(), Vector4(1.0, 1.0, 0.0, 1.0).asDiagonal().toDenseMatrix());
    EXPECT_THROW(optimal_gain(degenerate, kInferX), DegenerateConditioner);
}

TEST(OptimalOffset, RemovesMeanOfResidual) {
    Vector4 mean(1.0, -2.0, 0.5, 3.0);
    const GaussianState s(mean, two_mode_squeezed(0.4).cov());
    const double g = 0.3;
    EXPECT_DOUBLE_EQ(optimal_offset(s, g, kInferX), -(1.0 - g * 0.5));
}

TEST(EprLinear, Examples) {
    const auto v = epr_linear(vacuum_state(), 0.0, 0.0);
    EXPECT_DOUBLE_EQ(v.value, 1.0);
    EXPECT_FALSE(v.violated);

    const auto s = two_mode_squeezed(0.5);
    const auto opt = epr_linear(s, kTanh1, kTanh1);
    EXPECT_NEAR(opt.value, 0.6480543, 1e-7);
    EXPECT_TRUE(opt.violated);
    EXPECT_DOUBLE_EQ(*opt.parameters.g, kTanh1);
    EXPECT_DOUBLE_EQ(*opt.parameters.h, kTanh1);

    const auto unit = epr_linear(s, 1.0, 1.0);
    EXPECT_NEAR(unit.value, 0.7357589, 1e-7);
    EXPECT_TRUE(unit.violated);
    EXPECT_GT(unit.value, opt.value);

    const auto best = epr_linear_optimal(s);
    EXPECT_NEAR(best.value, opt.value, 1e-15);
    EXPECT_NEAR(*best.parameters.h, kTanh1, 1e-15);
}

TEST(TwoModeSqueezing, Examples) {
    const auto v = two_mode_squeezing_criterion(vacuum_state());
    EXPECT_DOUBLE_EQ(v.product.value, 4.0);
    EXPECT_FALSE(v.product.violated);
    EXPECT_FALSE(v.x_only.violated);
    EXPECT_FALSE(v.p_only.violated);

    const auto half = two_mode_squeezing_criterion(two_mode_squeezed(0.5));
    EXPECT_NEAR(half.x_only.value, 0.7357589, 1e-7);
    EXPECT_NEAR(half.p_only.value, 0.7357589, 1e-7);
    EXPECT_NEAR(half.product.value, 0.5413411, 1e-7);
    EXPECT_TRUE(half.product.violated);
    EXPECT_DOUBLE_EQ(half.product.bound, 4.0);
    EXPECT_DOUBLE_EQ(half.x_only.bound, 2.0);

    const auto one = two_mode_squeezing_criterion(two_mode_squeezed(1.0));
    EXPECT_NEAR(one.product.value, 0.0732626, 1e-7);
    EXPECT_NEAR(one.product.value, 4.0 * std::exp(-4.0), 1e-14);

    // Fock-grid oracle: Var(X_a - X_b) from integrated moments; Var(P_a + P_b) equals it by symmetry.
    for (double r : {0.5, 1.0}) {
        const auto m = fock::grid_moments(fock::joint_density(fock::tmsv_coefficients(r, 80), fock::GridSpec{14.0, 801}));
        const double vx = m.var_a + m.var_b - 2.0 * m.cov_ab;
        EXPECT_NEAR(vx * vx, two_mode_squeezing_criterion(two_mode_squeezed(r)).product.value, 1e-5) << "r=" << r;
    }
}

TEST(BoundedConditional, PointMassConditionalsSatisfyExactSupport) {
    std::vector<ConditionalHistogram> hists(1);
    for (int i = 0; i < 5; ++i) {
        ConditionalBin bin;
        bin.lo = i;
        bin.hi = i + 1;
        bin.count = 100;
        bin.mean = 0.3 * i;
        bin.weight = 0.2;
        bin.abs_deviations.assign(100, 0.0);
        hists[0].bins.push_back(bin);
    }
    const auto rep = bounded_conditional_criterion(hists, 0.1, 1.0);
    EXPECT_TRUE(rep.violated);
    EXPECT_DOUBLE_EQ(rep.value, 0.0);
    EXPECT_DOUBLE_EQ(*rep.parameters.delta, 0.1);

    const auto wide = bounded_conditional_criterion(hists, 1.5, 1.0);
    EXPECT_FALSE(wide.violated) << "delta >= 1 never demonstrates the paradox";
}

TEST(BoundedConditional, SpreadBinsFailExactSupportAndUseQuantilesOtherwise) {
    std::vector<ConditionalHistogram> hists(1);
    ConditionalBin bin;
    bin.count = 1000;
    for (int k = 0; k < 1000; ++k) bin.abs_deviations.push_back(1e-3 * k);
    bin.weight = 1.0;
    hists[0].bins.push_back(bin);
    EXPECT_FALSE(bounded_conditional_criterion(hists, 0.9, 1.0).violated);
    EXPECT_TRUE(std::isinf(bounded_conditional_criterion(hists, 0.9, 1.0).value));
    const auto q = bounded_conditional_criterion(hists, 0.9, 0.5);
    EXPECT_DOUBLE_EQ(q.value, 0.499);
    EXPECT_TRUE(q.violated);
    EXPECT_FALSE(bounded_conditional_criterion(hists, 0.4, 0.5).violated);
}

TEST(BoundedConditional, UnresolvableBinsSitOut) {
    EXPECT_EQ(resolvable_bin_count(0.999), 10000u);
    EXPECT_EQ(resolvable_bin_count(0.5, 1.0), 2u);
    EXPECT_EQ(resolvable_bin_count(1.0), 1u);
    std::vector<ConditionalHistogram> hists(1);
    ConditionalBin big, small;
    big.count = 20000;
    big.abs_deviations.assign(20000, 0.1);
    small.count = 100;
    small.abs_deviations.assign(100, 0.1);
    small.abs_deviations.back() = 5.0;
    hists[0].bins = {big, small};
    const auto rep = bounded_conditional_criterion(hists, 0.75, 0.999);
    EXPECT_DOUBLE_EQ(rep.value, 0.1);
    EXPECT_TRUE(rep.violated);
    // With every bin resolvable the outlier bin decides.
    EXPECT_FALSE(bounded_conditional_criterion(hists, 0.75, 0.999, 0.05).violated);
    hists[0].bins = {small};
    EXPECT_THROW(bounded_conditional_criterion(hists, 0.75, 0.999), OccupancyFailure);
}

TEST(BoundedConditional, Errors) {
    std::vector<ConditionalHistogram> none;
    EXPECT_THROW(bounded_conditional_criterion(none, 0.5, 0.999), InvalidArgument);
    std::vector<ConditionalHistogram> no_devs(1);
    ConditionalBin bin;
    bin.count = 10;
    no_devs[0].bins.push_back(bin);
    EXPECT_THROW(bounded_conditional_criterion(no_devs, 0.5, 0.999), InvalidArgument);
    EXPECT_THROW(bounded_conditional_criterion(no_devs, 0.5, 0.999, 0.0), InvalidArgument);
    EXPECT_THROW(bounded_conditional_criterion(vacuum_state(), 0.5, 0.0), InvalidArgument);
    EXPECT_THROW(bounded_conditional_criterion(vacuum_state(), -0.5, 0.9), InvalidArgument);
}

TEST(BoundedConditional, AnalyticGaussianNeverHasExactSupport) {
    for (double r : {0.0, 0.5, 1.0, 2.0, 3.0, 5.0}) {
        EXPECT_FALSE(bounded_conditional_criterion(two_mode_squeezed(r), 0.75, 1.0).violated) << "r=" << r;
    }
    const auto r2 = bounded_conditional_criterion(two_mode_squeezed(2.0), 0.75, 0.999);
    EXPECT_TRUE(r2.violated);
    // Half-width of the central 99.9% of N(0, 1/cosh 4).
    EXPECT_NEAR(r2.value, 3.2905267 / std::sqrt(std::cosh(4.0)), 1e-6);
}

TEST(CriterionReport, CsvRow) {
    EXPECT_EQ(kReportCsvHeader, "name,value,bound,violated,margin,g,h,delta");
    const auto rep = epr_linear(vacuum_state(), 0.5, 0.25);
    EXPECT_EQ(to_csv_row(rep), "EPRLinear,1.1524430571616109,1,false,-0.15244305716161088,0.5,0.25,");
    EXPECT_EQ(to_csv_row(epr_1989(0.25, 1.0)), "EPR1989,0.5,1,true,0.5,,,");
}

TEST(CriteriaProperties, OptimalGainMinimizesLinearInferenceVariance) {
    std::mt19937_64 gen(99);
    std::normal_distribution<double> normal(0.0, 2.0);
    for (int t = 0; t < 200; ++t) {
        const auto s = fixtures::random_physical_state(gen);
        for (auto pair : {kInferX, kInferP}) {
            const double best = linear_inference_variance(s, optimal_gain(s, pair), pair);
            EXPECT_NEAR(best, conditional_variance(s, pair.target, pair.conditioner), 1e-9 * (1.0 + best));
            for (int k = 0; k < 100; ++k) {
                EXPECT_GE(linear_inference_variance(s, normal(gen), pair), best - 1e-12 * (1.0 + best));
            }
        }
    }
}

TEST(CriteriaProperties, EstimateOrdering) {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> normal(0.0, 1.5);
    for (int t = 0; t < 300; ++t) {
        const auto s = fixtures::random_physical_state(gen);
        const auto inferred = epr_1989(s);
        const auto optimal = epr_linear_optimal(s);
        const auto any = epr_linear(s, normal(gen), normal(gen));
        EXPECT_GE(any.value, optimal.value - 1e-12);
        EXPECT_NEAR(optimal.value, inferred.value, 1e-12 * (1.0 + inferred.value));
    }
}

TEST(CriteriaProperties, SeparableMixturesRespectEveryBound) {
    std::mt19937_64 gen(20260414);
    std::normal_distribution<double> normal(0.0, 1.5);
    int counterexamples = 0;
    for (int t = 0; t < 300; ++t) {
        const auto mix = fixtures::random_separable_mixture(gen);
        const auto s = mix.moments();
        ASSERT_TRUE(is_physical(s));
        const double dx = fixtures::mixture_inferred_variance(mix, 0, 2);
        const double dp = fixtures::mixture_inferred_variance(mix, 1, 3);
        if (epr_1989(dx, dp).value < 1.0 - 1e-9) ++counterexamples;
        if (epr_1989(s).value < 1.0 - 1e-9) ++counterexamples;
        const double g = normal(gen);
        if (epr_linear(s, g, g).variance_product.value() < separable_lower_bounds(g, g).linear_product_bound - 1e-9) {
            ++counterexamples;
        }
        if (two_mode_squeezing_criterion(s).product.value < 4.0 - 1e-9) ++counterexamples;
    }
    EXPECT_EQ(counterexamples, 0);
}

TEST(CriteriaProperties, MarginsGrowStrictlyWithSqueezing) {
    double prev[5] = {-1e300, -1e300, -1e300, -1e300, -1e300};
    for (int k = 0; k <= 40; ++k) {
        const auto s = two_mode_squeezed(0.05 * k);
        const double margins[5] = {epr_1989(s).margin, epr_linear_optimal(s).margin, epr_linear(s, 1.0, 1.0).margin,
                                   two_mode_squeezing_criterion(s).product.margin,
                                   bounded_conditional_criterion(s, 0.75, 0.999).margin};
        for (int c = 0; c < 5; ++c) {
            EXPECT_GT(margins[c], prev[c]) << "criterion " << c << " r=" << 0.05 * k;
            prev[c] = margins[c];
        }
    }
    // Every nonzero squeezing violates the strong criterion.
    EXPECT_TRUE(epr_1989(two_mode_squeezed(1e-3)).violated);
}

TEST(CriteriaProperties, WeakCriterionStrictlyWeakerThanStrong) {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int t = 0; t < 300; ++t) {
        const auto s = apply_loss(two_mode_squeezed(2.0 * unit(gen)), unit(gen), unit(gen));
        const auto strong = epr_linear(s, 1.0, 1.0);
        if (strong.violated) {
            EXPECT_TRUE(two_mode_squeezing_criterion(s).product.violated);
        }
    }
    // Strong threshold sits at eta = 1/2 for every r; just below it only the weak test fires.
    const auto lossy = apply_loss(two_mode_squeezed(0.5), 0.45, 0.45);
    EXPECT_FALSE(epr_1989(lossy).violated);
    EXPECT_FALSE(epr_linear_optimal(lossy).violated);
    EXPECT_TRUE(two_mode_squeezing_criterion(lossy).product.violated);
}
