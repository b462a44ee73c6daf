// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/optimizer.hpp"

#include "raymix/error.hpp"
#include "raymix/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace raymix::optim {

double lr_at(long step, const LrSchedule &s) {
    if (step < 0)
        throw DomainError("lr_at: negative step");
    const double progress =
        s.total_steps > 0 ? std::min(static_cast<double>(step) / static_cast<double>(s.total_steps), 1.0) : 1.0;
    const double base = std::exp(std::log(s.lr_init) + progress * (std::log(s.lr_final) - std::log(s.lr_init)));
    if (s.warmup_steps <= 0 || step >= s.warmup_steps)
        return base;
    const double ramp = static_cast<double>(step) / static_cast<double>(s.warmup_steps);
    const double delay = s.delay_mult + (1.0 - s.delay_mult) * std::sin(0.5 * std::numbers::pi * ramp);
    return delay * base;
}

void clip_gradients(std::span<double> grads, const ClipConfig &cfg) {
    double sq = 0.0;
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i]))
            throw NumericFault("non-finite gradient", static_cast<long>(i));
        grads[i] = std::clamp(grads[i], -cfg.value, cfg.value);
        sq += grads[i] * grads[i];
    }
    const double norm = std::sqrt(sq);
    if (norm > cfg.norm) {
        const double scale = cfg.norm / norm;
        for (double &g : grads)
            g *= scale;
    }
}

void adam_step(std::span<double> params, std::span<const double> grads, OptimizerState &state, double lr,
               const AdamConfig &cfg) {
    if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size())
        throw DomainError("adam_step: parameter, gradient and moment sizes differ");
    ++state.step;
    const double t = static_cast<double>(state.step);
    const simd::AdamCoefficients coef{lr / (1.0 - std::pow(cfg.beta1, t)), cfg.beta1, cfg.beta2,
                                      1.0 - std::pow(cfg.beta2, t), cfg.eps};
    simd::active().adam(params.data(), grads.data(), state.m.data(), state.v.data(), params.size(), coef);
}

} // namespace raymix::optim
