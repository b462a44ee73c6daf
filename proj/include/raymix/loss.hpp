// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "raymix/geometry.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace raymix::loss {

using geometry::Vec3;

/// Dataset / view-count combinations with tabulated loss balancing weights,
/// plus `Desk` for small synthetic scenes.
enum class Profile { Llff3, Llff6, Llff9, Dtu3, Dtu6, Dtu9, Syn4, Syn8, Desk };

/// Throws ConfigError on an unknown name.
Profile parse_profile(std::string_view name);
std::string_view profile_name(Profile p);

enum class Reduction { Mean, Sum };

struct LossWeights {
    double lambda_c = 0.0;
    double lambda_d = 0.0;
    double lambda_c_hat = 0.0;
    double coarse_mult = 0.1;
};

/// Knobs of the balancing-weight schedule. lambda_d / lambda_c_hat fall back to the
/// profile's tabulated values when unset.
struct ScheduleConfig {
    double lambda_c_start = 4.0;
    double lambda_c_end = 1e-3;
    long lambda_c_steps = 512;
    std::optional<double> lambda_d;
    std::optional<double> lambda_c_hat;
    double coarse_mult = 0.1;
    /// Zero every likelihood weight: plain photometric training.
    bool mse_only = false;
};

/// lambda_c anneals linearly from lambda_c_start to lambda_c_end over lambda_c_steps and
/// stays constant afterwards; lambda_d and lambda_c_hat are per-profile constants.
LossWeights lambda_schedule(long step, Profile profile, const ScheduleConfig &cfg = {});

/// Per-level loss terms.
struct LevelTerms {
    double mse = 0.0;
    double nll_c = 0.0;
    double nll_d = 0.0;
    double nll_c_hat = 0.0;
};

struct LossBundle {
    LevelTerms fine;
    LevelTerms coarse;
    double total = 0.0;
};

/// Batch reduction of squared color errors |pred - gt|^2. Throws DomainError on an
/// empty batch or a length mismatch.
double mse_loss(std::span<const Vec3> pred, std::span<const Vec3> gt, Reduction reduction = Reduction::Mean);

struct NllTerms {
    double nll_c = 0.0;
    double nll_d = 0.0;
    double nll_c_hat = 0.0;
};

/// Negated, reduced per-ray log-densities. Throws NumericFault naming the first
/// ray with a non-finite value.
NllTerms nll_terms(std::span<const double> log_p_c, std::span<const double> log_p_d,
                   std::span<const double> log_p_c_hat, Reduction reduction = Reduction::Mean);

/// mse + lambda_c nll_c + lambda_d nll_d + lambda_c_hat nll_c_hat
double level_total(const LevelTerms &terms, const LossWeights &weights);

/// Fine-level total plus coarse_mult times the coarse-level total.
double total_loss(const LevelTerms &fine, const LevelTerms &coarse, const LossWeights &weights);

} // namespace raymix::loss
