// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/pipeline.hpp"

#include "raymix/error.hpp"

#include <algorithm>
#include <cmath>

namespace raymix::pipeline {
namespace {

struct CoreVars {
    field::FieldVars field;
    ad::Var sigma;   ///< R x M
    mixture::Channels mu_c;
    mixture::Channels beta;
    ad::Var mu_d;    ///< R x M
    render::BlendVars blend;
    ad::Var rgb;     ///< R x 3
};

std::size_t common_length(std::span<const geometry::RaySamples> samples, std::size_t rays) {
    if (samples.size() != rays || rays == 0)
        throw DomainError("need one sample set per ray");
    const std::size_t m = samples[0].size();
    for (const auto &s : samples)
        if (s.size() != m || m == 0)
            throw DomainError("all rays of a batch must carry the same number of samples");
    return m;
}

CoreVars record_core(ad::Tape &tape, const field::FieldParams &params, const field::FieldBinding &binding,
                     std::span<const geometry::Ray> rays, std::span<const geometry::RaySamples> samples,
                     const Vec3 &background) {
    const std::size_t r_count = rays.size();
    const std::size_t m = common_length(samples, r_count);

    ad::Matrix positions(r_count * m, 3);
    ad::Matrix views(r_count * m, 3);
    ad::Matrix delta(r_count, m);
    for (std::size_t r = 0; r < r_count; ++r) {
        const geometry::Ray &ray = rays[r];
        const Vec3 view = ray.dir / ray.dir_norm();
        for (std::size_t j = 0; j < m; ++j) {
            const Vec3 p = ray.at(samples[r].t_mid[j]);
            const std::size_t row = r * m + j;
            for (int c = 0; c < 3; ++c) {
                positions(row, c) = p[c];
                views(row, c) = view[c];
            }
            delta(r, j) = samples[r].delta[j];
        }
    }

    CoreVars core{};
    core.field = field::forward(tape, params, binding, positions, views);
    core.sigma = tape.reshape(core.field.sigma, r_count, m);
    for (std::size_t ch = 0; ch < 3; ++ch) {
        core.mu_c[ch] = tape.reshape(tape.slice_cols(core.field.mu_c, ch, ch + 1), r_count, m);
        core.beta[ch] = tape.reshape(tape.slice_cols(core.field.beta, ch, ch + 1), r_count, m);
    }
    core.mu_d = tape.reshape(core.field.mu_d, r_count, m);
    core.blend = render::blend_weights(tape, core.sigma, tape.constant(std::move(delta)));

    const ad::Var transparency = tape.add_scalar(tape.neg(core.blend.acc), 1.0);
    ad::Var rgb{};
    for (std::size_t ch = 0; ch < 3; ++ch) {
        const ad::Var channel = tape.add(tape.row_sum(tape.mul(core.blend.w, core.mu_c[ch])),
                                         tape.mul_scalar(transparency, background[static_cast<int>(ch)]));
        rgb = ch == 0 ? channel : tape.concat_cols(rgb, channel);
    }
    core.rgb = rgb;
    return core;
}

ad::Var reduce(ad::Tape &tape, ad::Var per_ray, loss::Reduction reduction) {
    return reduction == loss::Reduction::Mean ? tape.mean(per_ray) : tape.sum(per_ray);
}

} // namespace

LevelVars evaluate_level(ad::Tape &tape, const field::FieldParams &params, const field::FieldBinding &binding,
                         const RayBatch &batch, std::span<const geometry::RaySamples> samples,
                         const ObjectiveConfig &cfg) {
    const std::size_t r_count = batch.size();
    if (batch.colors.size() != r_count)
        throw DomainError("ray batch: one target color per ray required");
    const CoreVars core = record_core(tape, params, binding, batch.rays, samples, batch.background);
    const std::size_t m = samples[0].size();

    ad::Matrix c_gt(r_count, 3);
    ad::Matrix d_gt(r_count, 1);
    ad::Matrix gaps(r_count, m);
    for (std::size_t r = 0; r < r_count; ++r) {
        for (int c = 0; c < 3; ++c)
            c_gt(r, static_cast<std::size_t>(c)) = batch.colors[r][c];
        d_gt.data[r] = batch.rays[r].dir_norm();
        for (std::size_t j = 0; j < m; ++j)
            gaps(r, j) = samples[r].t_edges[j + 1] - samples[r].t_edges[j];
    }

    LevelVars lv{};
    lv.w = core.blend.w;
    lv.acc = core.blend.acc;
    lv.rgb = core.rgb;

    const ad::Var err = tape.row_sum(tape.square(tape.sub(core.rgb, tape.constant(c_gt))));
    lv.mse = reduce(tape, err, cfg.reduction);

    const ad::Var pi = mixture::mixing_coefficients(tape, core.blend.w);
    const ad::Var log_f_c = mixture::color_component_log_pdf(tape, core.mu_c, core.beta, c_gt);
    lv.log_p_c = mixture::mixture_log_pdf(tape, pi, log_f_c);

    const ad::Var scale = mixture::depth_scale(tape, core.beta, cfg.depth_scale);
    const ad::Var log_f_d = mixture::depth_component_log_pdf(tape, core.mu_d, scale, d_gt);
    lv.log_p_d = mixture::mixture_log_pdf(tape, pi, log_f_d);

    const ad::Var regen_depth = cfg.stop_grad_regen_depth ? tape.stop_gradient(core.mu_d) : core.mu_d;
    const mixture::RegenVars regen = mixture::regenerate_weights(tape, core.sigma, regen_depth, gaps);
    lv.log_p_c_hat = mixture::mixture_log_pdf(tape, regen.pi_hat, log_f_c);

    for (const ad::Var v : {lv.log_p_c, lv.log_p_d, lv.log_p_c_hat}) {
        const auto &vals = tape.value(v).data;
        for (std::size_t r = 0; r < r_count; ++r)
            if (!std::isfinite(vals[r]))
                throw NumericFault("non-finite log-likelihood for ray",
                                   r < batch.ids.size() ? batch.ids[r] : static_cast<long>(r));
    }

    lv.nll_c = tape.neg(reduce(tape, lv.log_p_c, cfg.reduction));
    lv.nll_d = tape.neg(reduce(tape, lv.log_p_d, cfg.reduction));
    lv.nll_c_hat = tape.neg(reduce(tape, lv.log_p_c_hat, cfg.reduction));
    return lv;
}

loss::LevelTerms level_terms(const ad::Tape &tape, const LevelVars &level) {
    return {tape.scalar(level.mse), tape.scalar(level.nll_c), tape.scalar(level.nll_d), tape.scalar(level.nll_c_hat)};
}

ad::Var level_objective(ad::Tape &tape, const LevelVars &level, const loss::LossWeights &weights) {
    ad::Var total = level.mse;
    if (weights.lambda_c != 0.0)
        total = tape.add(total, tape.mul_scalar(level.nll_c, weights.lambda_c));
    if (weights.lambda_d != 0.0)
        total = tape.add(total, tape.mul_scalar(level.nll_d, weights.lambda_d));
    if (weights.lambda_c_hat != 0.0)
        total = tape.add(total, tape.mul_scalar(level.nll_c_hat, weights.lambda_c_hat));
    return total;
}

Objective combine_levels(ad::Tape &tape, const LevelVars &coarse, const LevelVars &fine,
                         const loss::LossWeights &weights) {
    Objective o{};
    o.coarse = coarse;
    o.fine = fine;
    const ad::Var fine_total = level_objective(tape, fine, weights);
    const ad::Var coarse_total = level_objective(tape, coarse, weights);
    o.total = weights.coarse_mult != 0.0 ? tape.add(fine_total, tape.mul_scalar(coarse_total, weights.coarse_mult))
                                         : fine_total;
    o.bundle.fine = level_terms(tape, fine);
    o.bundle.coarse = level_terms(tape, coarse);
    o.bundle.total = tape.scalar(o.total);
    return o;
}

Objective objective(ad::Tape &tape, const field::FieldParams &params, const field::FieldBinding &binding,
                    const RayBatch &batch, std::span<const geometry::RaySamples> coarse,
                    std::span<const geometry::RaySamples> fine, const loss::LossWeights &weights,
                    const ObjectiveConfig &cfg) {
    const LevelVars c = evaluate_level(tape, params, binding, batch, coarse, cfg);
    const LevelVars f = evaluate_level(tape, params, binding, batch, fine, cfg);
    return combine_levels(tape, c, f, weights);
}

std::vector<geometry::RaySamples> fine_samples(const ad::Tape &tape, const LevelVars &coarse,
                                               std::span<const geometry::RaySamples> coarse_samples,
                                               const RayBatch &batch, std::size_t n_fine, std::span<Rng> rngs) {
    const ad::Matrix &w = tape.value(coarse.w);
    if (w.rows != batch.size() || coarse_samples.size() != batch.size())
        throw DomainError("fine_samples: batch and coarse samples disagree");
    if (!rngs.empty() && rngs.size() != batch.size())
        throw DomainError("fine_samples: need one random stream per ray");
    std::vector<geometry::RaySamples> out;
    out.reserve(batch.size());
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const std::span<const double> weights(w.row(r), w.cols);
        out.push_back(geometry::hierarchical_sample(coarse_samples[r], weights, n_fine, batch.rays[r].dir_norm(),
                                                    rngs.empty() ? nullptr : &rngs[r]));
    }
    return out;
}

std::vector<render::RenderResult> render_rays(const field::FieldParams &params, std::span<const geometry::Ray> rays,
                                              const Vec3 &background, const SamplingConfig &sampling,
                                              std::size_t chunk) {
    std::vector<render::RenderResult> out(rays.size());
    chunk = std::max<std::size_t>(chunk, 1);
    ad::Tape tape;
    for (std::size_t begin = 0; begin < rays.size(); begin += chunk) {
        const std::size_t end = std::min(rays.size(), begin + chunk);
        const std::span<const geometry::Ray> part = rays.subspan(begin, end - begin);
        tape.clear();
        const field::FieldBinding binding = field::bind(tape, params);

        std::vector<geometry::RaySamples> coarse;
        coarse.reserve(part.size());
        for (const auto &ray : part)
            coarse.push_back(geometry::stratified_sample(ray, sampling.n_coarse, nullptr));
        const CoreVars cv = record_core(tape, params, binding, part, coarse, background);

        std::vector<geometry::RaySamples> fine;
        fine.reserve(part.size());
        const ad::Matrix &w = tape.value(cv.blend.w);
        for (std::size_t r = 0; r < part.size(); ++r)
            fine.push_back(geometry::hierarchical_sample(coarse[r], std::span<const double>(w.row(r), w.cols),
                                                         sampling.n_fine, part[r].dir_norm(), nullptr));
        const CoreVars fv = record_core(tape, params, binding, part, fine, background);

        const ad::Matrix &wf = tape.value(fv.blend.w);
        const ad::Matrix &rgb = tape.value(fv.rgb);
        for (std::size_t r = 0; r < part.size(); ++r) {
            render::BlendWeights bw;
            bw.w.assign(wf.row(r), wf.row(r) + wf.cols);
            bw.acc = tape.value(fv.blend.acc).data[r];
            render::RenderResult res;
            res.rgb = Vec3(rgb(r, 0), rgb(r, 1), rgb(r, 2));
            res.acc = bw.acc;
            res.depth = render::composite_depth(bw, fine[r].t_mid, part[r].dir_norm());
            out[begin + r] = res;
        }
    }
    return out;
}

ViewRender render_view(const field::FieldParams &params, const geometry::Camera &camera, double t_near, double t_far,
                       const Vec3 &background, const SamplingConfig &sampling, std::size_t chunk) {
    std::vector<geometry::Ray> rays;
    rays.reserve(static_cast<std::size_t>(camera.width) * camera.height);
    for (int y = 0; y < camera.height; ++y)
        for (int x = 0; x < camera.width; ++x)
            rays.push_back(geometry::generate_ray(camera, x, y, t_near, t_far));
    const std::vector<render::RenderResult> px = render_rays(params, rays, background, sampling, chunk);
    ViewRender out;
    out.rgb = image::Image(camera.width, camera.height, 3);
    out.depth.resize(px.size());
    out.acc.resize(px.size());
    for (std::size_t i = 0; i < px.size(); ++i) {
        for (int c = 0; c < 3; ++c)
            out.rgb.data[i * 3 + c] = px[i].rgb[c];
        out.depth[i] = px[i].depth;
        out.acc[i] = px[i].acc;
    }
    return out;
}

} // namespace raymix::pipeline
