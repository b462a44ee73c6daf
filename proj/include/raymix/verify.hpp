// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "raymix/field.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace raymix::verify {

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct GradCheckConfig {
    int seeds = 20;
    double h = 1e-5;
    double rel_tol = 1e-4;
    double abs_tol = 1e-6;
    /// Below this gradient magnitude the absolute tolerance applies.
    double small_grad = 1e-3;
    std::size_t rays = 4;
    std::size_t samples = 2;
    field::Architecture arch = small_architecture();

    /// A network of a few hundred parameters for finite differences.
    static field::Architecture small_architecture();
};

struct GradCheckReport {
    std::size_t checked = 0;
    std::size_t failures = 0;
    double worst_rel = 0.0;
    std::string worst;
};

/// Central differences of the full two-level objective against the tape gradient,
/// for the combined loss and for each term alone, over cfg.seeds random problems.
GradCheckReport gradient_check(std::uint64_t seed, const GradCheckConfig &cfg = {});

SuiteResult gradient_suite(std::uint64_t seed);
/// Closed-form slabs with aligned samples, and stratified convergence on random scenes.
SuiteResult oracle_suite(std::uint64_t seed);
/// Mixing coefficients of random and degenerate weight vectors sum to one.
SuiteResult normalization_suite(std::uint64_t seed);
/// Regenerated weights equal the rendering weights when every depth estimate is the ray depth.
SuiteResult regeneration_suite(std::uint64_t seed);

std::vector<std::string> suite_names();
/// Throws ConfigError for an unknown name.
SuiteResult run_suite(const std::string &name, std::uint64_t seed);

} // namespace raymix::verify
