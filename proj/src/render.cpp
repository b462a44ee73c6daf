// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/render.hpp"

#include "raymix/error.hpp"

#include <cmath>
#include <string>

namespace raymix::render {
namespace {

BlendWeights blend(std::span<const double> sigma, std::span<const double> delta, bool strict) {
    if (sigma.size() != delta.size())
        throw DomainError("blend weights: sigma and delta lengths differ");
    const std::size_t m = sigma.size();
    BlendWeights bw;
    bw.trans.resize(m);
    bw.w.resize(m);
    double optical = 0.0;
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        if (!(sigma[j] >= 0.0) || !std::isfinite(sigma[j]))
            throw DomainError("blend weights: density " + std::to_string(j) + " is negative or non-finite");
        if (strict ? !(delta[j] > 0.0) : !(delta[j] >= 0.0))
            throw DomainError("blend weights: interval " + std::to_string(j) + " is not positive");
        const double tau = sigma[j] * delta[j];
        bw.trans[j] = std::exp(-optical);
        bw.w[j] = bw.trans[j] * -std::expm1(-tau);
        optical += tau;
        acc += bw.w[j];
    }
    bw.acc = acc;
    return bw;
}

} // namespace

BlendWeights compute_blend_weights(std::span<const double> sigma, std::span<const double> delta) {
    return blend(sigma, delta, true);
}

BlendWeights blend_weights_allow_empty(std::span<const double> sigma, std::span<const double> delta) {
    return blend(sigma, delta, false);
}

Vec3 composite_color(const BlendWeights &weights, std::span<const Vec3> mu_c, const Vec3 &background) {
    if (mu_c.size() != weights.size())
        throw DomainError("composite_color: weights and colors differ in length");
    Vec3 rgb = Vec3::Zero();
    for (std::size_t j = 0; j < mu_c.size(); ++j)
        rgb += weights.w[j] * mu_c[j];
    return rgb + (1.0 - weights.acc) * background;
}

double composite_depth(const BlendWeights &weights, std::span<const double> t_mid, double dir_norm) {
    if (t_mid.size() != weights.size())
        throw DomainError("composite_depth: weights and sample positions differ in length");
    double s = 0.0;
    for (std::size_t j = 0; j < t_mid.size(); ++j)
        s += weights.w[j] * t_mid[j] * dir_norm;
    return s / std::max(weights.acc, kAccEpsilon);
}

BlendVars blend_weights(ad::Tape &tape, ad::Var sigma, ad::Var delta) {
    const ad::Var tau = tape.mul(sigma, delta);
    BlendVars out{};
    out.trans = tape.exp(tape.neg(tape.exclusive_cumsum_rows(tau)));
    out.w = tape.mul(out.trans, tape.one_minus_exp_neg(tau));
    out.acc = tape.row_sum(out.w);
    return out;
}

} // namespace raymix::render
