// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/error.hpp"
#include "raymix/field.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

using namespace raymix;
using namespace raymix::field;

namespace {

Architecture tiny() {
    Architecture a;
    a.encoding = {2, 1};
    a.depth = 2;
    a.width = 8;
    a.bottleneck = 4;
    a.view_width = 6;
    return a;
}

} // namespace

TEST(Encoding, LayoutAndFrequencies) {
    const Vec3 x(0.1, -0.2, 0.3);
    const auto e = positional_encode(x, 3);
    ASSERT_EQ(e.size(), 21u);
    EXPECT_EQ(e[0], 0.1);
    EXPECT_EQ(e[2], 0.3);
    for (int k = 0; k < 3; ++k) {
        const double f = std::ldexp(std::numbers::pi, k);
        for (int c = 0; c < 3; ++c) {
            EXPECT_NEAR(e[3 + 6 * k + c], std::sin(f * x[c]), 1e-15);
            EXPECT_NEAR(e[6 + 6 * k + c], std::cos(f * x[c]), 1e-15);
        }
    }
    EXPECT_EQ(positional_encode(x, 0).size(), 3u);
    EXPECT_THROW(positional_encode(x, -1), DomainError);
}

TEST(FieldParams, SlotsTileTheBuffer) {
    const Architecture a = tiny();
    const FieldParams p = FieldParams::initialize(a, 1);
    std::size_t next = 0;
    std::set<std::string> names;
    for (const auto &s : p.slots()) {
        EXPECT_EQ(s.offset, next) << s.name;
        next += s.size();
        names.insert(s.name);
    }
    EXPECT_EQ(next, p.size());
    EXPECT_EQ(names.size(), p.slots().size());
    EXPECT_EQ(p.slot("trunk0.weight").cols, static_cast<std::size_t>(a.position_features()));
    EXPECT_EQ(p.slot("view.weight").cols, static_cast<std::size_t>(a.bottleneck + a.view_features()));
    EXPECT_THROW(p.slot("nope"), DomainError);
}

TEST(FieldParams, InitializationIsSeededAndBounded) {
    const FieldParams a = FieldParams::initialize(tiny(), 5);
    const FieldParams b = FieldParams::initialize(tiny(), 5);
    const FieldParams c = FieldParams::initialize(tiny(), 6);
    EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
    EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
    for (const auto &s : a.slots()) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double v = a.values()[s.offset + i];
            if (s.name == "depth.bias")
                EXPECT_EQ(v, i == 0 ? 1.0 : 0.0);
            else if (s.name.ends_with(".bias"))
                EXPECT_EQ(v, 0.0);
            else
                EXPECT_LE(std::abs(v), std::sqrt(6.0 / static_cast<double>(s.cols)));
        }
    }
}

TEST(FieldParams, RejectsBadShapesAndNonFiniteValues) {
    Architecture a = tiny();
    a.width = 0;
    EXPECT_THROW(FieldParams::zeros(a), DomainError);
    FieldParams p = FieldParams::zeros(tiny());
    p.values()[3] = std::nan("");
    try {
        p.validate();
        FAIL();
    } catch (const NumericFault &e) {
        EXPECT_EQ(e.index(), 3);
    }
}

TEST(Field, OutputRangesHold) {
    const FieldParams p = FieldParams::initialize(tiny(), 2);
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
        ad::Tape t;
        const Vec3 pos(uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3));
        const Vec3 view = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), 0.5).normalized();
        const FieldOutput o = field_forward(p, t, pos, view);
        EXPECT_GE(o.sigma, 0.0);
        EXPECT_TRUE((o.mu_c.array() >= 0.0).all() && (o.mu_c.array() <= 1.0).all());
        EXPECT_TRUE((o.beta.array() >= p.architecture().beta_min).all());
        EXPECT_NEAR(o.mu_d, o.mu_d_raw.norm(), 1e-15);
    }
}

TEST(Field, ZeroNetworkGivesFixedHeads) {
    const FieldParams p = FieldParams::zeros(tiny());
    ad::Tape t;
    const FieldOutput o = field_forward(p, t, Vec3(0.3, 0.1, -0.2), Vec3::UnitX());
    EXPECT_NEAR(o.sigma, std::log1p(std::exp(tiny().sigma_bias)), 1e-15);
    EXPECT_NEAR(o.mu_c.x(), 0.5, 1e-15);
    EXPECT_NEAR(o.beta.x(), std::log(2.0) + tiny().beta_min, 1e-15);
    EXPECT_DOUBLE_EQ(o.mu_d, 1.0);
}

TEST(Field, DensityAndScaleIgnoreTheViewDirection) {
    const FieldParams p = FieldParams::initialize(tiny(), 3);
    ad::Tape t1, t2;
    const Vec3 pos(0.2, -0.4, 0.7);
    const FieldOutput a = field_forward(p, t1, pos, Vec3::UnitX());
    const FieldOutput b = field_forward(p, t2, pos, Vec3(0, 0.6, 0.8));
    EXPECT_EQ(a.sigma, b.sigma);
    EXPECT_EQ(a.beta, b.beta);
    EXPECT_NE(a.mu_c, b.mu_c);
}

TEST(Field, BatchedForwardMatchesSingleSamples) {
    const FieldParams p = FieldParams::initialize(tiny(), 8);
    Rng rng(9);
    ad::Matrix pos(5, 3), view(5, 3);
    for (std::size_t r = 0; r < 5; ++r) {
        const Vec3 d = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), 1.0).normalized();
        for (int c = 0; c < 3; ++c) {
            pos(r, c) = uniform(rng, -1, 1);
            view(r, c) = d[c];
        }
    }
    ad::Tape t;
    const FieldBinding b = bind(t, p);
    const FieldVars v = forward(t, p, b, pos, view);
    for (std::size_t r = 0; r < 5; ++r) {
        ad::Tape s;
        const FieldOutput o =
            field_forward(p, s, Vec3(pos(r, 0), pos(r, 1), pos(r, 2)), Vec3(view(r, 0), view(r, 1), view(r, 2)));
        EXPECT_NEAR(t.value(v.sigma)(r, 0), o.sigma, 1e-14);
        EXPECT_NEAR(t.value(v.mu_d)(r, 0), o.mu_d, 1e-14);
        for (int c = 0; c < 3; ++c)
            EXPECT_NEAR(t.value(v.mu_c)(r, c), o.mu_c[c], 1e-14);
    }
    ad::Matrix bad = view;
    bad(0, 2) *= 3.0;
    EXPECT_THROW(forward(t, p, b, pos, bad), DomainError);
    ad::Matrix nan_pos = pos;
    nan_pos(1, 1) = std::nan("");
    EXPECT_THROW(forward(t, p, b, nan_pos, view), NumericFault);
}
