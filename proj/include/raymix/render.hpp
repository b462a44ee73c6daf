// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "raymix/geometry.hpp"
#include "raymix/tape.hpp"

#include <span>
#include <vector>

namespace raymix::render {

using geometry::Vec3;

/// Accumulated opacity below which the expected depth is reported as 0.
inline constexpr double kAccEpsilon = 1e-10;

struct BlendWeights {
    std::vector<double> trans; ///< T_j = exp(-sum_{m<j} sigma_m delta_m)
    std::vector<double> w;     ///< w_j = T_j (1 - exp(-sigma_j delta_j))
    double acc = 0.0;          ///< sum_j w_j

    std::size_t size() const { return w.size(); }
};

struct RenderResult {
    Vec3 rgb = Vec3::Zero();
    double depth = 0.0;
    double acc = 0.0;
};

/// Quadrature of the emission-absorption integral. Throws DomainError on a length
/// mismatch, a negative or non-finite density, or a non-positive interval.
BlendWeights compute_blend_weights(std::span<const double> sigma, std::span<const double> delta);

/// Same as compute_blend_weights but accepts zero-length intervals.
BlendWeights blend_weights_allow_empty(std::span<const double> sigma, std::span<const double> delta);

/// sum_j w_j c_j + (1 - acc) * background
Vec3 composite_color(const BlendWeights &weights, std::span<const Vec3> mu_c, const Vec3 &background);

/// Expected termination distance in scene units, sum_j w_j t_j |d| / max(acc, kAccEpsilon).
double composite_depth(const BlendWeights &weights, std::span<const double> t_mid, double dir_norm);

/// Tape form over a batch of rays: sigma and delta are R x M.
struct BlendVars {
    ad::Var trans; ///< R x M
    ad::Var w;     ///< R x M
    ad::Var acc;   ///< R x 1
};

BlendVars blend_weights(ad::Tape &tape, ad::Var sigma, ad::Var delta);

} // namespace raymix::render
