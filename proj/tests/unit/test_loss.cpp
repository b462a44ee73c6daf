// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/error.hpp"
#include "raymix/loss.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace raymix;
using namespace raymix::loss;

TEST(Profiles, TabulatedWeights) {
    struct Row {
        const char *name;
        double lambda_d;
    };
    for (const Row &r : {Row{"llff3", 1e-4}, Row{"llff6", 1e-5}, Row{"llff9", 1e-6}, Row{"dtu3", 1e-3},
                         Row{"dtu6", 1e-4}, Row{"dtu9", 1e-5}, Row{"syn4", 1e-3}, Row{"syn8", 1e-4}}) {
        const Profile p = parse_profile(r.name);
        EXPECT_EQ(profile_name(p), r.name);
        const LossWeights w = lambda_schedule(10000, p);
        EXPECT_EQ(w.lambda_d, r.lambda_d) << r.name;
        EXPECT_NEAR(w.lambda_c_hat, r.lambda_d / 10.0, 1e-20) << r.name;
        EXPECT_EQ(w.coarse_mult, 0.1);
    }
    EXPECT_THROW(parse_profile("llff4"), ConfigError);
}

TEST(Schedule, ColorWeightAnnealsLinearly) {
    const Profile p = Profile::Llff3;
    EXPECT_EQ(lambda_schedule(0, p).lambda_c, 4.0);
    EXPECT_NEAR(lambda_schedule(256, p).lambda_c, 0.5 * (4.0 + 1e-3), 1e-15);
    EXPECT_NEAR(lambda_schedule(512, p).lambda_c, 1e-3, 1e-18);
    EXPECT_NEAR(lambda_schedule(100000, p).lambda_c, 1e-3, 1e-18);
    for (long s = 1; s <= 512; ++s)
        EXPECT_LT(lambda_schedule(s, p).lambda_c, lambda_schedule(s - 1, p).lambda_c);
}

TEST(Schedule, OverridesAndPhotometricOnly) {
    ScheduleConfig cfg;
    cfg.lambda_d = 0.5;
    const LossWeights w = lambda_schedule(3, Profile::Dtu3, cfg);
    EXPECT_EQ(w.lambda_d, 0.5);
    EXPECT_EQ(w.lambda_c_hat, 1e-4);
    cfg.mse_only = true;
    const LossWeights z = lambda_schedule(3, Profile::Dtu3, cfg);
    EXPECT_EQ(z.lambda_c, 0.0);
    EXPECT_EQ(z.lambda_d, 0.0);
    EXPECT_EQ(z.lambda_c_hat, 0.0);
}

TEST(Mse, ReductionsAndErrors) {
    const std::vector<Vec3> p{Vec3(0, 0, 0), Vec3(1, 1, 1)}, g{Vec3(1, 0, 0), Vec3(1, 1, 0)};
    EXPECT_DOUBLE_EQ(mse_loss(p, g, Reduction::Sum), 2.0);
    EXPECT_DOUBLE_EQ(mse_loss(p, g, Reduction::Mean), 1.0);
    EXPECT_THROW(mse_loss(std::vector<Vec3>{}, std::vector<Vec3>{}), DomainError);
    EXPECT_THROW(mse_loss(p, std::vector<Vec3>{Vec3::Zero()}), DomainError);
}

TEST(Nll, NegatesAndFlagsNonFinite) {
    const std::vector<double> a{-1.0, -3.0}, b{2.0, 0.0}, c{-0.5, -0.5};
    const NllTerms t = nll_terms(a, b, c);
    EXPECT_DOUBLE_EQ(t.nll_c, 2.0);
    EXPECT_DOUBLE_EQ(t.nll_d, -1.0);
    EXPECT_DOUBLE_EQ(t.nll_c_hat, 0.5);
    const std::vector<double> bad{-1.0, -std::numeric_limits<double>::infinity()};
    try {
        nll_terms(a, bad, c);
        FAIL();
    } catch (const NumericFault &e) {
        EXPECT_EQ(e.index(), 1);
    }
}

TEST(Total, CombinesLevels) {
    const LevelTerms fine{1.0, 2.0, 3.0, 4.0}, coarse{10.0, 20.0, 30.0, 40.0};
    const LossWeights w{0.5, 0.25, 0.125, 0.1};
    const double lf = 1.0 + 0.5 * 2 + 0.25 * 3 + 0.125 * 4;
    const double lc = 10.0 + 0.5 * 20 + 0.25 * 30 + 0.125 * 40;
    EXPECT_DOUBLE_EQ(level_total(fine, w), lf);
    EXPECT_DOUBLE_EQ(total_loss(fine, coarse, w), lf + 0.1 * lc);
}
