// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/checkpoint.hpp"
#include "raymix/error.hpp"
#include "raymix/synthetic.hpp"
#include "raymix/trainer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

using namespace raymix;
using train::TrainData;
using train::Trainer;
using train::TrainOptions;
using train::TrainResult;
using train::LossRecord;
namespace fs = std::filesystem;

namespace {

TrainData tiny_data(int res, std::size_t views) {
    const synth::SyntheticScene sc = synth::desk_scene(res);
    const auto cams = synth::cameras(sc.cameras);
    TrainData d;
    d.near = sc.near;
    d.far = sc.far;
    d.background = data::background_color(sc.background);
    for (std::size_t i = 0; i < views; ++i)
        d.views.push_back({cams[i], synth::render_synthetic_gt(sc, cams[i]).rgb});
    return d;
}

config::TrainConfig tiny_config(long steps) {
    config::TrainConfig c = config::defaults_for(loss::Profile::Desk);
    c.arch.encoding = {4, 1};
    c.arch.depth = 2;
    c.arch.width = 32;
    c.arch.bottleneck = 16;
    c.arch.view_width = 16;
    c.batch_size = 64;
    c.chunk = 32;
    c.n_coarse = 8;
    c.n_fine = 8;
    c.steps = steps;
    c.warmup_steps = 20;
    c.seed = 3;
    return c;
}

bool same_bits(std::span<const double> a, std::span<const double> b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

double mean_mse(const std::vector<LossRecord> &log, std::size_t begin, std::size_t end) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i)
        s += log[i].mse;
    return s / static_cast<double>(end - begin);
}

} // namespace

TEST(Trainer, LossDecreasesOverTwoHundredSteps) {
    // Constant weights, so totals from different steps are comparable. Early on the
    // likelihood terms dominate and the photometric error alone may rise.
    config::TrainConfig c = tiny_config(200);
    c.schedule.lambda_c_start = c.schedule.lambda_c_end = 0.5;
    const TrainResult r = train::train(tiny_data(16, 2), c);
    ASSERT_EQ(r.log.size(), 200u);
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
        first += r.log[i].total / 20;
        last += r.log[180 + i].total / 20;
    }
    for (const LossRecord &rec : r.log)
        ASSERT_TRUE(std::isfinite(rec.total));
    EXPECT_LT(last, first - 1.0);
}

TEST(Trainer, MemorizesATinyImage) {
    // One 8x8 view with a photometric loss: the fit error must fall below 1e-3.
    config::TrainConfig c = tiny_config(2000);
    c.schedule.mse_only = true;
    c.anneal = false;
    const TrainResult r = train::train(tiny_data(8, 1), c);
    EXPECT_LT(mean_mse(r.log, 1900, 2000), 1e-3);
}

TEST(Trainer, RunsAreBitwiseReproducible) {
    const TrainData d = tiny_data(12, 2);
    config::TrainConfig c = tiny_config(15);
    const TrainResult a = train::train(d, c);
    const TrainResult b = train::train(d, c);
    EXPECT_TRUE(same_bits(a.checkpoint.params.values(), b.checkpoint.params.values()));
    EXPECT_EQ(ckpt::serialize(a.checkpoint), ckpt::serialize(b.checkpoint));
    // Worker threads only change who computes a chunk, not the reduction order.
    c.threads = 3;
    const TrainResult t = train::train(d, c);
    EXPECT_TRUE(same_bits(a.checkpoint.params.values(), t.checkpoint.params.values()));
    // A different seed gives a different run.
    c.seed = 4;
    const TrainResult other = train::train(d, c);
    EXPECT_FALSE(same_bits(a.checkpoint.params.values(), other.checkpoint.params.values()));
}

TEST(Trainer, ZeroLikelihoodWeightsEqualPhotometricOnly) {
    const TrainData d = tiny_data(12, 2);
    config::TrainConfig zero = tiny_config(10);
    zero.schedule.lambda_c_start = 0.0;
    zero.schedule.lambda_c_end = 0.0;
    zero.schedule.lambda_d = 0.0;
    zero.schedule.lambda_c_hat = 0.0;
    config::TrainConfig mse = tiny_config(10);
    mse.schedule.mse_only = true;
    const TrainResult a = train::train(d, zero);
    const TrainResult b = train::train(d, mse);
    EXPECT_TRUE(same_bits(a.checkpoint.params.values(), b.checkpoint.params.values()));
}

TEST(Trainer, ResumeContinuesBitwise) {
    const TrainData d = tiny_data(12, 2);
    const config::TrainConfig full = tiny_config(12);
    const TrainResult straight = train::train(d, full);

    // Stop after 6 of 12 steps. The learning-rate schedule depends on the run length,
    // so the interrupted run uses the full config too.
    Trainer first(d, full);
    for (int i = 0; i < 6; ++i)
        first.step();
    // Round-trip through bytes, as a restart would.
    ckpt::Checkpoint saved = ckpt::deserialize(ckpt::serialize(first.checkpoint()));
    Trainer t(d, full, std::move(saved));
    EXPECT_EQ(t.current_step(), 6);
    while (t.current_step() < t.total_steps())
        t.step();
    EXPECT_TRUE(same_bits(t.params().values(), straight.checkpoint.params.values()));
    EXPECT_EQ(t.state().m, straight.checkpoint.state.m);
}

TEST(Trainer, NonFiniteParametersFaultWithoutSideEffects) {
    const TrainData d = tiny_data(8, 1);
    const config::TrainConfig c = tiny_config(5);
    ckpt::Checkpoint bad{field::FieldParams::initialize(c.arch, 1), optim::OptimizerState::zeros(0), "{}"};
    bad.params.values()[7] = std::nan("");
    Trainer t(d, c, bad);
    const std::vector<double> before(t.params().values().begin(), t.params().values().end());
    EXPECT_THROW(t.step(), NumericFault);
    EXPECT_EQ(t.current_step(), 0);
    EXPECT_TRUE(same_bits(before, t.params().values()));

    const fs::path dir = fs::temp_directory_path() / "raymix_fault_test";
    fs::remove_all(dir);
    TrainOptions opts;
    opts.out_dir = dir;
    opts.resume = bad;
    EXPECT_THROW(train::train(d, c, opts), NumericFault);
    EXPECT_TRUE(fs::exists(dir / "fault.json"));
    EXPECT_TRUE(fs::exists(dir / "last_good.bin"));
    fs::remove_all(dir);
}

TEST(Trainer, WritesLogConfigAndCheckpoint) {
    const fs::path dir = fs::temp_directory_path() / "raymix_train_out";
    fs::remove_all(dir);
    config::TrainConfig c = tiny_config(4);
    c.checkpoint_every = 2;
    TrainOptions opts;
    opts.out_dir = dir;
    long seen = 0;
    opts.on_step = [&](const LossRecord &) { ++seen; };
    const TrainResult r = train::train(tiny_data(8, 1), c, opts);
    EXPECT_EQ(seen, 4);
    std::ifstream log(dir / "loss_log.csv");
    std::string line;
    std::getline(log, line);
    EXPECT_EQ(line + "\n", train::format_loss_header());
    int rows = 0;
    while (std::getline(log, line))
        ++rows;
    EXPECT_EQ(rows, 4);
    const ckpt::Checkpoint back = ckpt::load_checkpoint(dir / "checkpoint.bin");
    EXPECT_EQ(ckpt::serialize(back), ckpt::serialize(r.checkpoint));
    EXPECT_EQ(config::to_json(config::from_json(back.config_json)), config::to_json(c));
    fs::remove_all(dir);
}

TEST(Trainer, RejectsMismatchedInputs) {
    TrainData d = tiny_data(8, 1);
    config::TrainConfig c = tiny_config(1);
    ckpt::Checkpoint other{field::FieldParams::initialize(field::Architecture{}, 0), {}, "{}"};
    EXPECT_THROW(Trainer(d, c, other), ckpt::CheckpointError);
    c.batch_size = 0;
    EXPECT_THROW(Trainer(d, c), ConfigError);
    EXPECT_THROW(Trainer(TrainData{}, tiny_config(1)), DomainError);
}
