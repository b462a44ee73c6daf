// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace raymix::optim {

struct LrSchedule {
    double lr_init = 2e-3;
    double lr_final = 2e-5;
    long total_steps = 1;
    long warmup_steps = 512;
    double delay_mult = 1e-2;
};

/// Log-linear decay from lr_init to lr_final over total_steps, scaled during the
/// first warmup_steps by a delay factor rising from delay_mult to 1 along a quarter sine.
/// Steps past total_steps keep lr_final. Throws DomainError for step < 0.
double lr_at(long step, const LrSchedule &s);

struct ClipConfig {
    double value = 0.1;
    double norm = 0.1;
};

/// Clamps every component to [-value, value], then rescales the whole vector to the
/// norm bound if it is longer. Throws NumericFault at the first non-finite component.
void clip_gradients(std::span<double> grads, const ClipConfig &cfg = {});

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct OptimizerState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;  ///< updates applied so far

    static OptimizerState zeros(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0}; }
    std::size_t size() const { return m.size(); }
};

/// One bias-corrected Adam update in place; state.step is incremented first.
void adam_step(std::span<double> params, std::span<const double> grads, OptimizerState &state, double lr,
               const AdamConfig &cfg = {});

} // namespace raymix::optim
