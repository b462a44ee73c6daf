// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "raymix/field.hpp"
#include "raymix/geometry.hpp"
#include "raymix/image.hpp"
#include "raymix/loss.hpp"
#include "raymix/mixture.hpp"
#include "raymix/render.hpp"
#include "raymix/tape.hpp"

#include <span>
#include <vector>

namespace raymix::pipeline {

using geometry::Vec3;

/// A batch of training rays with their target colors.
struct RayBatch {
    std::vector<geometry::Ray> rays;
    std::vector<Vec3> colors;
    Vec3 background = Vec3::Zero();
    /// Identifiers reported in numeric fault diagnostics (e.g. flat pixel ids).
    std::vector<long> ids;

    std::size_t size() const { return rays.size(); }
};

struct ObjectiveConfig {
    mixture::DepthScale depth_scale = mixture::DepthScale::ArithmeticMean;
    /// Treat the ray-depth estimates as constants inside weight regeneration.
    bool stop_grad_regen_depth = false;
    loss::Reduction reduction = loss::Reduction::Mean;
};

/// Tape variables of one sampling level (coarse or fine).
struct LevelVars {
    ad::Var w;            ///< R x M blending weights
    ad::Var acc;          ///< R x 1
    ad::Var rgb;          ///< R x 3 composited colors
    ad::Var log_p_c;      ///< R x 1
    ad::Var log_p_d;      ///< R x 1
    ad::Var log_p_c_hat;  ///< R x 1
    ad::Var mse;          ///< 1 x 1
    ad::Var nll_c;        ///< 1 x 1
    ad::Var nll_d;        ///< 1 x 1
    ad::Var nll_c_hat;    ///< 1 x 1
};

/// Records one level for every ray of `batch` at the given samples (all of equal
/// length). Throws NumericFault naming the batch id of a ray whose likelihood is not finite.
LevelVars evaluate_level(ad::Tape &tape, const field::FieldParams &params, const field::FieldBinding &binding,
                         const RayBatch &batch, std::span<const geometry::RaySamples> samples,
                         const ObjectiveConfig &cfg);

loss::LevelTerms level_terms(const ad::Tape &tape, const LevelVars &level);

/// Weighted total of one level; terms whose weight is exactly zero are left out of
/// the graph so a zero-weight run is bitwise identical to a photometric-only run.
ad::Var level_objective(ad::Tape &tape, const LevelVars &level, const loss::LossWeights &weights);

struct Objective {
    LevelVars coarse;
    LevelVars fine;
    ad::Var total;
    loss::LossBundle bundle;
};

/// fine + coarse_mult * coarse, with the scalar terms of both levels.
Objective combine_levels(ad::Tape &tape, const LevelVars &coarse, const LevelVars &fine,
                         const loss::LossWeights &weights);

/// Both levels at fixed samples, combined as by combine_levels.
Objective objective(ad::Tape &tape, const field::FieldParams &params, const field::FieldBinding &binding,
                    const RayBatch &batch, std::span<const geometry::RaySamples> coarse,
                    std::span<const geometry::RaySamples> fine, const loss::LossWeights &weights,
                    const ObjectiveConfig &cfg);

/// Fine samples for each ray from the recorded coarse weights. `rngs` is either empty
/// (deterministic quantiles) or holds one stream per ray.
std::vector<geometry::RaySamples> fine_samples(const ad::Tape &tape, const LevelVars &coarse,
                                               std::span<const geometry::RaySamples> coarse_samples,
                                               const RayBatch &batch, std::size_t n_fine, std::span<Rng> rngs);

struct SamplingConfig {
    std::size_t n_coarse = 64;
    std::size_t n_fine = 64;
};

/// Inference: coarse pass, deterministic hierarchical resampling, fine pass; color,
/// expected depth and opacity of the fine level. Rays are processed in chunks.
std::vector<render::RenderResult> render_rays(const field::FieldParams &params, std::span<const geometry::Ray> rays,
                                              const Vec3 &background, const SamplingConfig &sampling,
                                              std::size_t chunk = 256);

struct ViewRender {
    image::Image rgb;
    std::vector<double> depth;  ///< row-major, distance along the ray
    std::vector<double> acc;
};

/// Renders every pixel center of `camera` with render_rays.
ViewRender render_view(const field::FieldParams &params, const geometry::Camera &camera, double t_near, double t_far,
                       const Vec3 &background, const SamplingConfig &sampling, std::size_t chunk = 256);

} // namespace raymix::pipeline
