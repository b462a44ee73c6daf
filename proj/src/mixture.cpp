// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/mixture.hpp"

#include "raymix/error.hpp"
#include "raymix/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace raymix::mixture {

double laplace_log_pdf(double x, double mu, double beta) {
    if (!(beta > 0.0))
        throw DomainError("Laplace scale must be positive");
    return -std::log(2.0 * beta) - std::fabs(x - mu) / beta;
}

double laplace_log_pdf(const Vec3 &c, const Vec3 &mu, const Vec3 &beta) {
    double s = 0.0;
    for (int ch = 0; ch < 3; ++ch)
        s += laplace_log_pdf(c[ch], mu[ch], beta[ch]);
    return s;
}

std::vector<double> mixing_coefficients(std::span<const double> w) {
    if (w.empty())
        throw DomainError("mixing_coefficients: no components");
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        if (!(w[j] >= 0.0) || !std::isfinite(w[j]))
            throw DomainError("mixing_coefficients: weight " + std::to_string(j) + " is negative or non-finite");
        s += w[j];
    }
    std::vector<double> pi(w.size());
    if (s < kSumEpsilon) {
        std::fill(pi.begin(), pi.end(), 1.0 / static_cast<double>(w.size()));
    } else {
        for (std::size_t j = 0; j < w.size(); ++j)
            pi[j] = w[j] / s;
    }
    return pi;
}

double log_mix(std::span<const double> pi, std::span<const double> log_f) {
    if (pi.size() != log_f.size())
        throw DomainError("log_mix: length mismatch");
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pi.size(); ++j)
        if (pi[j] > 0.0)
            mx = std::max(mx, log_f[j]);
    if (!std::isfinite(mx))
        return mx;
    double s = 0.0;
    for (std::size_t j = 0; j < pi.size(); ++j)
        if (pi[j] > 0.0)
            s += pi[j] * std::exp(log_f[j] - mx);
    return mx + std::log(s);
}

double color_mixture_log_pdf(std::span<const double> pi, std::span<const Vec3> mu_c, std::span<const Vec3> beta,
                             const Vec3 &c_gt) {
    if (pi.size() != mu_c.size() || pi.size() != beta.size())
        throw DomainError("color_mixture_log_pdf: component arrays differ in length");
    std::vector<double> log_f(pi.size());
    for (std::size_t j = 0; j < pi.size(); ++j)
        log_f[j] = laplace_log_pdf(c_gt, mu_c[j], beta[j]);
    return log_mix(pi, log_f);
}

double depth_scale(const Vec3 &beta, DepthScale mode) {
    switch (mode) {
    case DepthScale::GeometricMean:
        return std::exp((std::log(beta[0]) + std::log(beta[1]) + std::log(beta[2])) / 3.0);
    case DepthScale::ArithmeticMean:
        break;
    }
    return (beta[0] + beta[1] + beta[2]) / 3.0;
}

double depth_mixture_log_pdf(std::span<const double> pi, std::span<const double> mu_d, std::span<const Vec3> beta,
                             double d_gt, DepthScale mode) {
    if (pi.size() != mu_d.size() || pi.size() != beta.size())
        throw DomainError("depth_mixture_log_pdf: component arrays differ in length");
    if (!(d_gt > 0.0))
        throw DomainError("depth_mixture_log_pdf: target depth must be positive");
    std::vector<double> log_f(pi.size());
    for (std::size_t j = 0; j < pi.size(); ++j)
        log_f[j] = laplace_log_pdf(d_gt, mu_d[j], depth_scale(beta[j], mode));
    return log_mix(pi, log_f);
}

RegenWeights regenerate_weights(std::span<const double> sigma, std::span<const double> mu_d,
                                std::span<const double> t_edges) {
    const std::size_t m = sigma.size();
    if (mu_d.size() != m || t_edges.size() != m + 1)
        throw DomainError("regenerate_weights: need M densities, M depths and M+1 edges");
    RegenWeights out;
    out.delta_hat.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        if (!(mu_d[j] >= 0.0))
            throw DomainError("regenerate_weights: ray depth " + std::to_string(j) + " is negative");
        if (!(t_edges[j + 1] > t_edges[j]))
            throw DomainError("regenerate_weights: edges must be strictly increasing");
        out.delta_hat[j] = mu_d[j] * (t_edges[j + 1] - t_edges[j]);
    }
    out.w_hat = render::blend_weights_allow_empty(sigma, out.delta_hat).w;
    out.pi_hat = mixing_coefficients(out.w_hat);
    return out;
}

// --- tape forms ---------------------------------------------------------------

ad::Var color_component_log_pdf(ad::Tape &tape, const Channels &mu_c, const Channels &beta, const ad::Matrix &c_gt) {
    const std::size_t rays = tape.value(mu_c[0]).rows;
    const std::size_t m = tape.value(mu_c[0]).cols;
    if (c_gt.rows != rays || c_gt.cols != 3)
        throw DomainError("color_component_log_pdf: targets must be R x 3");
    ad::Var total{};
    for (int ch = 0; ch < 3; ++ch) {
        ad::Matrix target(rays, m);
        for (std::size_t r = 0; r < rays; ++r)
            std::fill(target.row(r), target.row(r) + m, c_gt(r, static_cast<std::size_t>(ch)));
        const ad::Var residual = tape.abs(tape.sub(tape.constant(std::move(target)), mu_c[ch]));
        // -log(2 beta) - |c - mu| / beta
        const ad::Var term =
            tape.neg(tape.add(tape.log(tape.mul_scalar(beta[ch], 2.0)), tape.div(residual, beta[ch])));
        total = ch == 0 ? term : tape.add(total, term);
    }
    return total;
}

ad::Var depth_scale(ad::Tape &tape, const Channels &beta, DepthScale mode) {
    if (mode == DepthScale::GeometricMean) {
        const ad::Var s = tape.add(tape.add(tape.log(beta[0]), tape.log(beta[1])), tape.log(beta[2]));
        return tape.exp(tape.mul_scalar(s, 1.0 / 3.0));
    }
    return tape.mul_scalar(tape.add(tape.add(beta[0], beta[1]), beta[2]), 1.0 / 3.0);
}

ad::Var depth_component_log_pdf(ad::Tape &tape, ad::Var mu_d, ad::Var scale, const ad::Matrix &d_gt) {
    const std::size_t rays = tape.value(mu_d).rows;
    const std::size_t m = tape.value(mu_d).cols;
    if (d_gt.rows != rays || d_gt.cols != 1)
        throw DomainError("depth_component_log_pdf: targets must be R x 1");
    ad::Matrix target(rays, m);
    for (std::size_t r = 0; r < rays; ++r)
        std::fill(target.row(r), target.row(r) + m, d_gt.data[r]);
    const ad::Var residual = tape.abs(tape.sub(tape.constant(std::move(target)), mu_d));
    return tape.neg(tape.add(tape.log(tape.mul_scalar(scale, 2.0)), tape.div(residual, scale)));
}

RegenVars regenerate_weights(ad::Tape &tape, ad::Var sigma, ad::Var mu_d, const ad::Matrix &gaps) {
    RegenVars out{};
    out.delta_hat = tape.mul(mu_d, tape.constant(gaps));
    out.w_hat = render::blend_weights(tape, sigma, out.delta_hat).w;
    out.pi_hat = mixing_coefficients(tape, out.w_hat);
    return out;
}

} // namespace raymix::mixture
