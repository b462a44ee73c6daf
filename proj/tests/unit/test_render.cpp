// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/error.hpp"
#include "raymix/render.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace raymix;
using namespace raymix::render;

TEST(Blend, HomogeneousMediumMatchesClosedForm) {
    const double sigma = 0.7;
    const std::vector<double> s(10, sigma), d(10, 0.3);
    const BlendWeights bw = compute_blend_weights(s, d);
    for (std::size_t j = 0; j < 10; ++j) {
        EXPECT_NEAR(bw.trans[j], std::exp(-sigma * 0.3 * j), 1e-15);
        EXPECT_NEAR(bw.w[j], std::exp(-sigma * 0.3 * j) - std::exp(-sigma * 0.3 * (j + 1)), 1e-15);
    }
    EXPECT_NEAR(bw.acc, 1.0 - std::exp(-sigma * 3.0), 1e-15);
}

TEST(Blend, WeightsAreNonNegativeAndAccumulateBelowOne) {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> s(32), d(32);
        for (std::size_t j = 0; j < 32; ++j) {
            s[j] = uniform(rng, 0.0, 50.0) * (uniform01(rng) < 0.3 ? 0.0 : 1.0);
            d[j] = uniform(rng, 1e-4, 0.2);
        }
        const BlendWeights bw = compute_blend_weights(s, d);
        double sum = 0.0;
        for (double w : bw.w) {
            EXPECT_GE(w, 0.0);
            sum += w;
        }
        EXPECT_EQ(sum, bw.acc);
        EXPECT_LE(bw.acc, 1.0 + 1e-15);
        // Telescoping: acc = 1 - T_{M+1}.
        double optical = 0.0;
        for (std::size_t j = 0; j < 32; ++j)
            optical += s[j] * d[j];
        EXPECT_NEAR(bw.acc, -std::expm1(-optical), 1e-13);
    }
}

TEST(Blend, RejectsInvalidInputs) {
    const std::vector<double> ok{1.0, 1.0};
    EXPECT_THROW(compute_blend_weights(std::vector<double>{-1.0, 1.0}, ok), DomainError);
    EXPECT_THROW(compute_blend_weights(std::vector<double>{NAN, 1.0}, ok), DomainError);
    EXPECT_THROW(compute_blend_weights(ok, std::vector<double>{0.0, 1.0}), DomainError);
    EXPECT_THROW(compute_blend_weights(ok, std::vector<double>{1.0}), DomainError);
    EXPECT_NO_THROW(blend_weights_allow_empty(ok, std::vector<double>{0.0, 1.0}));
}

TEST(Composite, ColorAndDepth) {
    const std::vector<double> s{0.0, 2.0, 100.0}, d{1.0, 0.5, 1.0};
    const BlendWeights bw = compute_blend_weights(s, d);
    const std::vector<Vec3> c{Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
    const Vec3 bg(0.2, 0.2, 0.2);
    const Vec3 rgb = composite_color(bw, c, bg);
    EXPECT_NEAR(rgb.y(), bw.w[1], 1e-15);
    EXPECT_NEAR(rgb.x(), 0.2 * (1 - bw.acc), 1e-15);
    const std::vector<double> t{1.0, 2.0, 3.0};
    const double depth = composite_depth(bw, t, 2.0);
    EXPECT_NEAR(depth, 2.0 * (bw.w[1] * 2 + bw.w[2] * 3) / bw.acc, 1e-14);
    // An empty ray reports zero depth instead of dividing by zero.
    const BlendWeights empty = compute_blend_weights(std::vector<double>{0, 0}, std::vector<double>{1, 1});
    EXPECT_EQ(composite_depth(empty, std::vector<double>{1, 2}, 1.0), 0.0);
}

TEST(Blend, TapeFormMatchesScalarForm) {
    Rng rng(3);
    ad::Matrix s(4, 6), d(4, 6);
    for (auto &x : s.data)
        x = uniform(rng, 0, 5);
    for (auto &x : d.data)
        x = uniform(rng, 0.01, 0.5);
    ad::Tape t;
    const BlendVars v = blend_weights(t, t.constant(s), t.constant(d));
    for (std::size_t r = 0; r < 4; ++r) {
        const BlendWeights bw = compute_blend_weights(std::span(s.row(r), 6), std::span(d.row(r), 6));
        for (std::size_t j = 0; j < 6; ++j) {
            EXPECT_NEAR(t.value(v.w)(r, j), bw.w[j], 1e-15);
            EXPECT_NEAR(t.value(v.trans)(r, j), bw.trans[j], 1e-15);
        }
        EXPECT_NEAR(t.value(v.acc)(r, 0), bw.acc, 1e-15);
    }
}
