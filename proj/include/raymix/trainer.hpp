// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "raymix/checkpoint.hpp"
#include "raymix/config.hpp"
#include "raymix/data.hpp"
#include "raymix/field.hpp"
#include "raymix/image.hpp"
#include "raymix/optimizer.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace raymix::train {

using geometry::Vec3;

struct TrainView {
    geometry::Camera camera;
    image::Image image;  ///< RGB
};

struct TrainData {
    std::vector<TrainView> views;
    double near = 2.0;
    double far = 6.0;
    Vec3 background = Vec3::Zero();

    std::size_t pixels() const;
};

/// Training views of `scene` picked by index.
TrainData from_scene(const data::Scene &scene, const std::vector<std::size_t> &indices);

/// Fine-level terms of one step plus the full objective. With mean reduction every
/// term is a per-ray average.
struct LossRecord {
    long step = 0;
    double lr = 0.0;
    double mse = 0.0;
    double nll_c = 0.0;
    double nll_d = 0.0;
    double nll_c_hat = 0.0;
    double total = 0.0;
};

class Trainer {
public:
    /// Fresh parameters from cfg.seed. Throws ConfigError / DomainError.
    Trainer(TrainData data, config::TrainConfig cfg);
    /// Continues from a checkpoint; its architecture must match cfg.arch.
    Trainer(TrainData data, config::TrainConfig cfg, ckpt::Checkpoint resume);

    /// One optimization step. On a non-finite loss or gradient it throws NumericFault
    /// and leaves parameters and optimizer state untouched.
    LossRecord step();

    /// Loss and gradient at the current parameters for the batch of `step`, without
    /// clipping or updating. `grads` is overwritten.
    LossRecord evaluate(long step, std::span<double> grads) const;

    long current_step() const { return state_.step; }
    long total_steps() const { return total_steps_; }
    const config::TrainConfig &config() const { return cfg_; }
    const field::FieldParams &params() const { return params_; }
    const optim::OptimizerState &state() const { return state_; }
    ckpt::Checkpoint checkpoint() const;

    /// Pixel ids of the rays drawn at `step` (view-major flat indices).
    std::vector<long> batch_ids(long step) const;

private:
    TrainData data_;
    config::TrainConfig cfg_;
    field::FieldParams params_;
    optim::OptimizerState state_;
    long total_steps_ = 0;
    std::vector<std::size_t> view_offsets_;
};

struct TrainOptions {
    /// Output directory for config.json, loss_log.csv and checkpoints; empty writes nothing.
    std::filesystem::path out_dir;
    std::function<void(const LossRecord &)> on_step;
    /// Resume from this checkpoint instead of initializing.
    std::optional<ckpt::Checkpoint> resume;
};

struct TrainResult {
    ckpt::Checkpoint checkpoint;
    std::vector<LossRecord> log;
};

/// Runs the configured number of steps. Writes checkpoint.bin at the end (and every
/// checkpoint_every steps). On a numeric fault writes last_good.bin and fault.json,
/// then rethrows.
TrainResult train(const TrainData &data, const config::TrainConfig &cfg, const TrainOptions &opts = {});

std::string format_loss_header();
std::string format_loss_row(const LossRecord &r);

} // namespace raymix::train
