// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "raymix/field.hpp"
#include "raymix/geometry.hpp"
#include "raymix/loss.hpp"
#include "raymix/pipeline.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace raymix::config {

struct TrainConfig {
    loss::Profile profile = loss::Profile::Desk;
    long batch_size = 4096;
    /// Pixel epochs; only used when steps == 0.
    double epochs = 500.0;
    long steps = 0;
    double lr_init = 2e-3;
    double lr_final = 2e-5;
    long warmup_steps = 512;
    double delay_mult = 1e-2;
    double clip_value = 0.1;
    double clip_norm = 0.1;
    long n_coarse = 64;
    long n_fine = 64;
    std::uint64_t seed = 0;
    /// 0 writes only the final checkpoint.
    long checkpoint_every = 0;
    /// Rays per tape; also the unit of parallel work. Results do not depend on it
    /// only up to floating point summation order, so it is part of the config.
    long chunk = 128;
    int threads = 1;
    bool anneal = true;
    geometry::AnnealConfig anneal_cfg;
    loss::ScheduleConfig schedule;
    pipeline::ObjectiveConfig objective;
    field::Architecture arch;

    /// Throws ConfigError.
    void validate() const;
    /// steps if set, otherwise ceil(epochs * pixels / batch_size).
    long total_steps(std::size_t pixels) const;
};

/// Learning-rate range used by a profile: the synthetic-scene profiles run at half
/// the rate of the others.
TrainConfig defaults_for(loss::Profile profile);

/// Applies one dotted-key override, e.g. "train.batch_size" = "512". Throws
/// ConfigError for an unknown key or a malformed value.
void set_override(TrainConfig &cfg, std::string_view key, std::string_view value);

/// Parses "key=value" and applies it.
void apply_assignment(TrainConfig &cfg, std::string_view assignment);

std::vector<std::string> known_keys();

/// Flat JSON object keyed by the override names.
std::string to_json(const TrainConfig &cfg);
/// Inverse of to_json; unknown keys are rejected.
TrainConfig from_json(const std::string &text);

} // namespace raymix::config
