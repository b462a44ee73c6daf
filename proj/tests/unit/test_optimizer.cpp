// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/error.hpp"
#include "raymix/optimizer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace raymix;
using namespace raymix::optim;

TEST(LearningRate, WarmupAndDecayEndpoints) {
    const LrSchedule s{2e-3, 2e-5, 10000, 512, 1e-2};
    EXPECT_NEAR(lr_at(0, s), 2e-5, 1e-18);
    EXPECT_NEAR(lr_at(512, s), 2e-3 * std::pow(1e-2, 512.0 / 10000.0), 1e-15);
    EXPECT_NEAR(lr_at(10000, s), 2e-5, 1e-18);
    EXPECT_NEAR(lr_at(50000, s), 2e-5, 1e-18);
    // Mid-warmup: quarter sine between delay_mult and 1.
    const double base = 2e-3 * std::pow(1e-2, 256.0 / 10000.0);
    const double delay = 1e-2 + (1 - 1e-2) * std::sin(std::numbers::pi / 4);
    EXPECT_NEAR(lr_at(256, s), delay * base, 1e-15);
    EXPECT_THROW(lr_at(-1, s), DomainError);
}

TEST(LearningRate, MonotoneAfterWarmupAndLogLinear) {
    const LrSchedule s{1e-3, 1e-5, 4000, 100, 1e-2};
    for (long t = 101; t <= 4000; ++t)
        EXPECT_LT(lr_at(t, s), lr_at(t - 1, s));
    // The warmup factor itself rises; the product with the decay need not.
    const LrSchedule flat{1e-3, 1e-3, 4000, 100, 1e-2};
    for (long t = 1; t < 100; ++t)
        EXPECT_GT(lr_at(t, flat), lr_at(t - 1, flat));
    // Equal log-steps in the decay phase.
    const double r1 = std::log(lr_at(1000, s)) - std::log(lr_at(2000, s));
    const double r2 = std::log(lr_at(2000, s)) - std::log(lr_at(3000, s));
    EXPECT_NEAR(r1, r2, 1e-12);
}

TEST(Clip, ValueThenNorm) {
    std::vector<double> g{0.5, -0.05, 0.0, -2.0};
    clip_gradients(g);
    // Value clip gives {0.1, -0.05, 0, -0.1}, norm 0.15 > 0.1.
    const double n = std::sqrt(0.01 + 0.0025 + 0.01);
    EXPECT_NEAR(g[0], 0.1 * 0.1 / n, 1e-15);
    EXPECT_NEAR(g[1], -0.05 * 0.1 / n, 1e-15);
    EXPECT_NEAR(g[3], -0.1 * 0.1 / n, 1e-15);
    double sq = 0.0;
    for (double x : g)
        sq += x * x;
    EXPECT_NEAR(std::sqrt(sq), 0.1, 1e-15);
    std::vector<double> small{0.01, -0.02};
    clip_gradients(small);
    EXPECT_EQ(small[0], 0.01);
    EXPECT_EQ(small[1], -0.02);
}

TEST(Clip, NonFiniteRaisesWithIndex) {
    std::vector<double> g{0.0, 1.0, std::numeric_limits<double>::quiet_NaN()};
    try {
        clip_gradients(g);
        FAIL();
    } catch (const NumericFault &e) {
        EXPECT_EQ(e.index(), 2);
    }
}

TEST(Adam, MatchesTextbookUpdate) {
    std::vector<double> p{1.0, -2.0, 0.5}, ref = p;
    std::vector<double> m(3, 0.0), v(3, 0.0);
    OptimizerState st = OptimizerState::zeros(3);
    const AdamConfig cfg;
    for (int t = 1; t <= 20; ++t) {
        const std::vector<double> g{std::sin(t * 1.0), 0.1 * t, -0.3};
        adam_step(p, g, st, 1e-2, cfg);
        for (int i = 0; i < 3; ++i) {
            m[i] = 0.9 * m[i] + 0.1 * g[i];
            v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
            const double mh = m[i] / (1 - std::pow(0.9, t));
            const double vh = v[i] / (1 - std::pow(0.999, t));
            ref[i] -= 1e-2 * mh / (std::sqrt(vh) + 1e-8);
        }
        for (int i = 0; i < 3; ++i)
            EXPECT_NEAR(p[i], ref[i], 1e-12);
    }
    EXPECT_EQ(st.step, 20);
    std::vector<double> wrong(2);
    EXPECT_THROW(adam_step(p, wrong, st, 1e-2), DomainError);
}
