// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/loss.hpp"

#include "raymix/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace raymix::loss {
namespace {

struct ProfileRow {
    Profile profile;
    std::string_view name;
    double lambda_d;
    double lambda_c_hat;
};

// Depth and regenerated-color weights per dataset and view count; both drop by 10x
// as the number of input views grows.
constexpr std::array<ProfileRow, 9> kProfiles{{
    {Profile::Llff3, "llff3", 1e-4, 1e-5},
    {Profile::Llff6, "llff6", 1e-5, 1e-6},
    {Profile::Llff9, "llff9", 1e-6, 1e-7},
    {Profile::Dtu3, "dtu3", 1e-3, 1e-4},
    {Profile::Dtu6, "dtu6", 1e-4, 1e-5},
    {Profile::Dtu9, "dtu9", 1e-5, 1e-6},
    {Profile::Syn4, "syn4", 1e-3, 1e-4},
    {Profile::Syn8, "syn8", 1e-4, 1e-5},
    {Profile::Desk, "desk", 1e-3, 1e-4},
}};

const ProfileRow &row(Profile p) {
    for (const auto &r : kProfiles)
        if (r.profile == p)
            return r;
    throw ConfigError("unknown profile");
}

double reduce(double sum, std::size_t n, Reduction reduction) {
    return reduction == Reduction::Mean ? sum / static_cast<double>(n) : sum;
}

} // namespace

Profile parse_profile(std::string_view name) {
    for (const auto &r : kProfiles)
        if (r.name == name)
            return r.profile;
    throw ConfigError("unknown profile '" + std::string(name) + "'");
}

std::string_view profile_name(Profile p) { return row(p).name; }

LossWeights lambda_schedule(long step, Profile profile, const ScheduleConfig &cfg) {
    LossWeights w;
    w.coarse_mult = cfg.coarse_mult;
    if (cfg.mse_only)
        return w;
    const ProfileRow &r = row(profile);
    const double progress =
        cfg.lambda_c_steps > 0
            ? std::clamp(static_cast<double>(step) / static_cast<double>(cfg.lambda_c_steps), 0.0, 1.0)
            : 1.0;
    w.lambda_c = cfg.lambda_c_start * (1.0 - progress) + cfg.lambda_c_end * progress;
    w.lambda_d = cfg.lambda_d.value_or(r.lambda_d);
    w.lambda_c_hat = cfg.lambda_c_hat.value_or(r.lambda_c_hat);
    return w;
}

double mse_loss(std::span<const Vec3> pred, std::span<const Vec3> gt, Reduction reduction) {
    if (pred.empty())
        throw DomainError("mse_loss: empty batch");
    if (pred.size() != gt.size())
        throw DomainError("mse_loss: prediction and target batches differ in length");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        s += (pred[i] - gt[i]).squaredNorm();
    return reduce(s, pred.size(), reduction);
}

NllTerms nll_terms(std::span<const double> log_p_c, std::span<const double> log_p_d,
                   std::span<const double> log_p_c_hat, Reduction reduction) {
    if (log_p_c.empty() || log_p_c.size() != log_p_d.size() || log_p_c.size() != log_p_c_hat.size())
        throw DomainError("nll_terms: batches must be non-empty and of equal length");
    NllTerms t;
    for (std::size_t i = 0; i < log_p_c.size(); ++i) {
        if (!std::isfinite(log_p_c[i]) || !std::isfinite(log_p_d[i]) || !std::isfinite(log_p_c_hat[i]))
            throw NumericFault("non-finite log-likelihood for ray", static_cast<long>(i));
        t.nll_c -= log_p_c[i];
        t.nll_d -= log_p_d[i];
        t.nll_c_hat -= log_p_c_hat[i];
    }
    t.nll_c = reduce(t.nll_c, log_p_c.size(), reduction);
    t.nll_d = reduce(t.nll_d, log_p_c.size(), reduction);
    t.nll_c_hat = reduce(t.nll_c_hat, log_p_c.size(), reduction);
    return t;
}

double level_total(const LevelTerms &terms, const LossWeights &weights) {
    return terms.mse + weights.lambda_c * terms.nll_c + weights.lambda_d * terms.nll_d +
           weights.lambda_c_hat * terms.nll_c_hat;
}

double total_loss(const LevelTerms &fine, const LevelTerms &coarse, const LossWeights &weights) {
    return level_total(fine, weights) + weights.coarse_mult * level_total(coarse, weights);
}

} // namespace raymix::loss
