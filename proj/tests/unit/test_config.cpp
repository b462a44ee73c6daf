// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/config.hpp"
#include "raymix/error.hpp"

#include <gtest/gtest.h>

using namespace raymix;
using namespace raymix::config;

TEST(Config, ProfileLearningRates) {
    EXPECT_EQ(defaults_for(loss::Profile::Llff3).lr_init, 2e-3);
    EXPECT_EQ(defaults_for(loss::Profile::Llff3).lr_final, 2e-5);
    EXPECT_EQ(defaults_for(loss::Profile::Syn8).lr_init, 1e-3);
    EXPECT_EQ(defaults_for(loss::Profile::Syn8).lr_final, 1e-5);
    const TrainConfig c;
    EXPECT_EQ(c.warmup_steps, 512);
    EXPECT_EQ(c.delay_mult, 1e-2);
    EXPECT_EQ(c.clip_value, 0.1);
    EXPECT_EQ(c.clip_norm, 0.1);
}

TEST(Config, OverridesParseAndValidate) {
    TrainConfig c;
    apply_assignment(c, "train.batch_size=512");
    apply_assignment(c, "loss.lambda_d=0.25");
    apply_assignment(c, "loss.mse_only=true");
    apply_assignment(c, "loss.depth_scale=geometric");
    apply_assignment(c, "model.width=32");
    apply_assignment(c, "train.profile=dtu6");
    EXPECT_EQ(c.batch_size, 512);
    EXPECT_EQ(c.schedule.lambda_d, 0.25);
    EXPECT_TRUE(c.schedule.mse_only);
    EXPECT_EQ(c.objective.depth_scale, mixture::DepthScale::GeometricMean);
    EXPECT_EQ(c.arch.width, 32);
    EXPECT_EQ(c.profile, loss::Profile::Dtu6);
    apply_assignment(c, "loss.lambda_d=default");
    EXPECT_FALSE(c.schedule.lambda_d.has_value());

    EXPECT_THROW(apply_assignment(c, "train.nope=1"), ConfigError);
    EXPECT_THROW(apply_assignment(c, "train.batch_size"), ConfigError);
    EXPECT_THROW(apply_assignment(c, "train.batch_size=12x"), ConfigError);
    EXPECT_THROW(apply_assignment(c, "loss.mse_only=maybe"), ConfigError);
    EXPECT_THROW(apply_assignment(c, "train.profile=llff5"), ConfigError);
    c.batch_size = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, JsonRoundTripCoversEveryKey) {
    TrainConfig c = defaults_for(loss::Profile::Syn4);
    apply_assignment(c, "train.seed=99");
    apply_assignment(c, "loss.lambda_c_hat=3e-4");
    apply_assignment(c, "anneal.enabled=false");
    apply_assignment(c, "model.beta_min=0.01");
    const std::string text = to_json(c);
    const TrainConfig d = from_json(text);
    EXPECT_EQ(to_json(d), text);
    for (const auto &k : known_keys())
        EXPECT_NE(text.find("\"" + k + "\""), std::string::npos) << k;
    EXPECT_THROW(from_json("{\"bogus\": 1}"), ConfigError);
    EXPECT_THROW(from_json("[1, 2]"), ConfigError);
    EXPECT_THROW(from_json("{"), ConfigError);
    EXPECT_THROW(from_json("{\"train.batch_size\": \"big\"}"), ConfigError);
}

TEST(Config, TotalSteps) {
    TrainConfig c;
    c.batch_size = 100;
    c.epochs = 2.5;
    EXPECT_EQ(c.total_steps(1000), 25);
    c.steps = 7;
    EXPECT_EQ(c.total_steps(1000), 7);
}
