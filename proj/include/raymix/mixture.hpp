// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "raymix/geometry.hpp"
#include "raymix/tape.hpp"

#include <array>
#include <span>
#include <vector>

namespace raymix::mixture {

using geometry::Vec3;

/// Weight sums below this fall back to uniform mixing coefficients.
inline constexpr double kSumEpsilon = 1e-12;

/// How the three per-channel Laplace scales reduce to the scalar scale of the depth mixture.
enum class DepthScale {
    ArithmeticMean,
    GeometricMean,
};

/// Log-density of a product of three independent Laplace distributions:
/// sum_ch [ -log(2 beta_ch) - |c_ch - mu_ch| / beta_ch ].
/// Throws DomainError for a non-positive scale.
double laplace_log_pdf(const Vec3 &c, const Vec3 &mu, const Vec3 &beta);

/// One-dimensional Laplace log-density.
double laplace_log_pdf(double x, double mu, double beta);

/// pi = w / sum(w), or uniform when sum(w) < kSumEpsilon. Throws DomainError on a
/// negative or non-finite weight.
std::vector<double> mixing_coefficients(std::span<const double> w);

/// log sum_j pi_j exp(log_f_j) with max-subtraction, skipping pi_j == 0.
double log_mix(std::span<const double> pi, std::span<const double> log_f);

/// Color mixture log-density at c_gt with Laplace components (mu_c[j], beta[j]).
double color_mixture_log_pdf(std::span<const double> pi, std::span<const Vec3> mu_c, std::span<const Vec3> beta,
                             const Vec3 &c_gt);

double depth_scale(const Vec3 &beta, DepthScale mode);

/// Depth mixture log-density at d_gt; component j is Laplace(mu_d[j], reduced beta[j]).
double depth_mixture_log_pdf(std::span<const double> pi, std::span<const double> mu_d, std::span<const Vec3> beta,
                             double d_gt, DepthScale mode = DepthScale::ArithmeticMean);

/// Blending weights recomputed with the per-sample ray-depth estimates in place of |d|.
struct RegenWeights {
    std::vector<double> delta_hat; ///< mu_d_j * (t_{j+1} - t_j)
    std::vector<double> w_hat;
    std::vector<double> pi_hat;
};

RegenWeights regenerate_weights(std::span<const double> sigma, std::span<const double> mu_d,
                                std::span<const double> t_edges);

/// The color mixture evaluated with regenerated coefficients; identical math to color_mixture_log_pdf.
inline double regen_color_mixture_log_pdf(std::span<const double> pi_hat, std::span<const Vec3> mu_c,
                                          std::span<const Vec3> beta, const Vec3 &c_gt) {
    return color_mixture_log_pdf(pi_hat, mu_c, beta, c_gt);
}

// --- tape forms over R rays x M samples ---------------------------------------

using Channels = std::array<ad::Var, 3>;

/// R x M component log-densities of the per-ray target colors `c_gt` (R x 3).
ad::Var color_component_log_pdf(ad::Tape &tape, const Channels &mu_c, const Channels &beta, const ad::Matrix &c_gt);

/// R x M reduced depth scales.
ad::Var depth_scale(ad::Tape &tape, const Channels &beta, DepthScale mode);

/// R x M component log-densities of the per-ray target depths `d_gt` (R x 1).
ad::Var depth_component_log_pdf(ad::Tape &tape, ad::Var mu_d, ad::Var scale, const ad::Matrix &d_gt);

/// R x M mixing coefficients from R x M weights.
inline ad::Var mixing_coefficients(ad::Tape &tape, ad::Var w) { return tape.normalize_rows(w, kSumEpsilon); }

/// R x 1 mixture log-densities.
inline ad::Var mixture_log_pdf(ad::Tape &tape, ad::Var pi, ad::Var log_f) {
    return tape.weighted_logsumexp_rows(pi, log_f);
}

struct RegenVars {
    ad::Var delta_hat;
    ad::Var w_hat;
    ad::Var pi_hat;
};

/// Tape form of regenerate_weights; `gaps` holds t_{j+1} - t_j per ray (R x M).
RegenVars regenerate_weights(ad::Tape &tape, ad::Var sigma, ad::Var mu_d, const ad::Matrix &gaps);

} // namespace raymix::mixture
