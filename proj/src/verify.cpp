// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/verify.hpp"

#include "raymix/error.hpp"
#include "raymix/mixture.hpp"
#include "raymix/pipeline.hpp"
#include "raymix/render.hpp"
#include "raymix/rng.hpp"
#include "raymix/synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

namespace raymix::verify {
namespace {

using geometry::Vec3;

std::string fmt(const char *f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

SuiteResult timed(const std::string &name, const std::function<void(SuiteResult &)> &body) {
    SuiteResult r;
    r.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    body(r);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

struct GradProblem {
    field::FieldParams params;
    pipeline::RayBatch batch;
    std::vector<geometry::RaySamples> coarse;
    std::vector<geometry::RaySamples> fine;
};

GradProblem make_problem(std::uint64_t seed, const GradCheckConfig &cfg) {
    Rng rng = make_stream({seed, 0x67726164ULL});
    GradProblem p;
    p.params = field::FieldParams::initialize(cfg.arch, seed);
    // Non-zero biases so that no pre-activation sits exactly on a ReLU kink.
    for (double &v : p.params.values())
        v += uniform(rng, -0.1, 0.1);
    p.batch.background = Vec3(uniform01(rng), uniform01(rng), uniform01(rng));
    for (std::size_t r = 0; r < cfg.rays; ++r) {
        geometry::Ray ray;
        ray.origin = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
        Vec3 d(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
        ray.dir = d.normalized() * uniform(rng, 1.0, 1.5);
        ray.t_near = 0.5;
        ray.t_far = 2.0;
        p.batch.rays.push_back(ray);
        p.batch.colors.push_back(Vec3(uniform01(rng), uniform01(rng), uniform01(rng)));
        p.batch.ids.push_back(static_cast<long>(r));
        for (auto *level : {&p.coarse, &p.fine}) {
            std::vector<double> pts(cfg.samples);
            for (double &t : pts)
                t = uniform(rng, ray.t_near, ray.t_far);
            level->push_back(geometry::samples_from_points(pts, ray.t_near, ray.t_far, ray.dir_norm()));
        }
    }
    return p;
}

double objective_value(const GradProblem &p, const loss::LossWeights &w, ad::Tape &tape,
                       std::span<double> grads) {
    tape.clear();
    const field::FieldBinding binding = field::bind(tape, p.params);
    const pipeline::Objective obj =
        pipeline::objective(tape, p.params, binding, p.batch, p.coarse, p.fine, w, pipeline::ObjectiveConfig{});
    if (!grads.empty())
        tape.backward(obj.total, grads);
    return tape.scalar(obj.total);
}

} // namespace

field::Architecture GradCheckConfig::small_architecture() {
    field::Architecture a;
    a.encoding.l_pos = 1;
    a.encoding.l_dir = 1;
    a.depth = 2;
    a.width = 16;
    a.bottleneck = 4;
    a.view_width = 8;
    return a;
}

GradCheckReport gradient_check(std::uint64_t seed, const GradCheckConfig &cfg) {
    // The combined loss, then every likelihood term alone on top of the photometric term.
    const std::vector<std::pair<std::string, loss::LossWeights>> variants{
        {"all terms", {0.7, 0.4, 0.3, 0.1}},
        {"mse", {0.0, 0.0, 0.0, 0.1}},
        {"mse+nll_c", {1.0, 0.0, 0.0, 0.1}},
        {"mse+nll_d", {0.0, 1.0, 0.0, 0.1}},
        {"mse+nll_c_hat", {0.0, 0.0, 1.0, 0.1}},
    };
    GradCheckReport rep;
    ad::Tape tape;
    for (int s = 0; s < cfg.seeds; ++s) {
        GradProblem p = make_problem(stream_seed({seed, static_cast<std::uint64_t>(s)}), cfg);
        const std::size_t n = p.params.size();
        std::vector<double> g(n);
        for (const auto &[name, w] : variants) {
            std::fill(g.begin(), g.end(), 0.0);
            objective_value(p, w, tape, g);
            for (std::size_t i = 0; i < n; ++i) {
                double &x = p.params.values()[i];
                const double x0 = x;
                x = x0 + cfg.h;
                const double up = objective_value(p, w, tape, {});
                x = x0 - cfg.h;
                const double down = objective_value(p, w, tape, {});
                x = x0;
                const double fd = (up - down) / (2.0 * cfg.h);
                const double scale = std::max(std::fabs(g[i]), std::fabs(fd));
                const double err = std::fabs(g[i] - fd);
                const bool ok = scale < cfg.small_grad ? err <= cfg.abs_tol : err <= cfg.rel_tol * scale;
                const double rel = scale > 0.0 ? err / scale : 0.0;
                ++rep.checked;
                if (!ok)
                    ++rep.failures;
                if (scale >= cfg.small_grad && rel > rep.worst_rel) {
                    rep.worst_rel = rel;
                    rep.worst = name + " seed " + std::to_string(s) + " param " + std::to_string(i) +
                                fmt(": tape %.12g fd %.12g", g[i], fd);
                }
            }
        }
    }
    return rep;
}

SuiteResult gradient_suite(std::uint64_t seed) {
    return timed("gradient", [&](SuiteResult &r) {
        const GradCheckReport rep = gradient_check(seed);
        r.passed = rep.failures == 0 && rep.checked > 0;
        r.detail = std::to_string(rep.checked) + " partials, " + std::to_string(rep.failures) + " outside tolerance" +
                   fmt(", worst relative error %.3g", rep.worst_rel);
    });
}

SuiteResult oracle_suite(std::uint64_t seed) {
    return timed("oracle", [&](SuiteResult &r) {
        double slab_err = 0.0;
        // Homogeneous medium filling the whole interval, then two separated slabs.
        geometry::Ray ray;
        ray.origin = Vec3(0.05, -0.02, 5.0);
        ray.dir = Vec3(0.01, 0.02, -1.0);
        ray.t_near = 2.0;
        ray.t_far = 8.0;
        const double dn = ray.dir_norm();
        {
            synth::SyntheticScene s;
            s.near = ray.t_near;
            s.far = ray.t_far;
            s.background = data::Background::White;
            synth::Primitive box;
            box.shape = synth::Shape::Box;
            box.half_extent = Vec3::Constant(100.0);
            box.density = 0.7;
            box.color = Vec3(0.2, 0.5, 0.9);
            s.primitives = {box};
            const double trans = std::exp(-box.density * (ray.t_far - ray.t_near) * dn);
            const Vec3 expected = box.color * (1.0 - trans) + Vec3::Ones() * trans;
            const auto px = synth::render_ray_sampled(s, ray, synth::slab_aligned_samples(s, ray, 5));
            slab_err = std::max(slab_err, (px.rgb - expected).cwiseAbs().maxCoeff());
        }
        {
            synth::SyntheticScene s;
            s.near = ray.t_near;
            s.far = ray.t_far;
            synth::Primitive a;
            a.shape = synth::Shape::Box;
            a.center = Vec3(0, 0, 1.5);
            a.half_extent = Vec3(10, 10, 0.5);
            a.density = 1.3;
            a.color = Vec3(0.9, 0.1, 0.3);
            synth::Primitive b = a;
            b.center = Vec3(0, 0, -0.5);
            b.density = 2.1;
            b.color = Vec3(0.1, 0.8, 0.4);
            s.primitives = {a, b};
            // Both slabs are 1 unit thick along z.
            const double la = 1.0 * dn / std::fabs(ray.dir.z());
            const double ta = std::exp(-a.density * la);
            const double tb = std::exp(-b.density * la);
            const Vec3 expected = a.color * (1.0 - ta) + ta * b.color * (1.0 - tb);
            const auto px = synth::render_ray_sampled(s, ray, synth::slab_aligned_samples(s, ray, 3));
            slab_err = std::max(slab_err, (px.rgb - expected).cwiseAbs().maxCoeff());
            const auto ex = synth::render_ray_exact(s, ray);
            slab_err = std::max(slab_err, (ex.rgb - expected).cwiseAbs().maxCoeff());
        }

        Rng rng = make_stream({seed, 0x6f7263ULL});
        bool converges = true;
        double worst256 = 0.0;
        for (int k = 0; k < 3; ++k) {
            synth::SyntheticScene s = synth::random_scene(rng);
            synth::CameraSpec spec;
            spec.width = spec.height = 16;
            spec.rings = {synth::CameraRing{1, 4.0, 20.0, 360.0 * uniform01(rng)}};
            const geometry::Camera cam = synth::cameras(spec).front();
            double prev = std::numeric_limits<double>::infinity();
            for (std::size_t m : {16u, 64u, 256u}) {
                double err = 0.0;
                for (int y = 0; y < cam.height; ++y)
                    for (int x = 0; x < cam.width; ++x) {
                        const auto ray2 = geometry::generate_ray(cam, x, y, s.near, s.far);
                        const auto num = synth::render_ray_sampled(s, ray2, geometry::stratified_sample(ray2, m, nullptr));
                        const auto ex = synth::render_ray_exact(s, ray2);
                        err = std::max(err, (num.rgb - ex.rgb).cwiseAbs().maxCoeff());
                    }
                converges = converges && err < prev;
                prev = err;
            }
            worst256 = std::max(worst256, prev);
        }
        r.passed = slab_err <= 1e-12 && converges && worst256 < 5e-3;
        r.detail = fmt("closed-form slab error %.3g; stratified max error at M=256 %.3g", slab_err, worst256) +
                   (converges ? "" : "; error not decreasing in M");
    });
}

SuiteResult normalization_suite(std::uint64_t seed) {
    return timed("normalization", [&](SuiteResult &r) {
        Rng rng = make_stream({seed, 0x6e6f726dULL});
        double worst = 0.0;
        for (int i = 0; i < 2000; ++i) {
            const std::size_t m = 1 + uniform_index(rng, 64);
            std::vector<double> w(m);
            const int kind = i % 4;
            for (double &v : w)
                v = kind == 0 ? 0.0 : (kind == 1 ? 1e-300 * uniform01(rng) : uniform01(rng) * std::pow(10.0, uniform(rng, -8, 3)));
            double s = 0.0;
            for (double p : mixture::mixing_coefficients(w))
                s += p;
            worst = std::max(worst, std::fabs(s - 1.0));
        }
        r.passed = worst <= 1e-6;
        r.detail = fmt("max |sum pi - 1| = %.3g over 2000 weight vectors", worst);
    });
}

SuiteResult regeneration_suite(std::uint64_t seed) {
    return timed("regeneration", [&](SuiteResult &r) {
        Rng rng = make_stream({seed, 0x72656765ULL});
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const std::size_t m = 1 + uniform_index(rng, 64);
            const double dn = uniform(rng, 1.0, 1.8);
            std::vector<double> pts(m);
            for (double &t : pts)
                t = uniform(rng, 2.0, 6.0);
            const geometry::RaySamples s = geometry::samples_from_points(pts, 2.0, 6.0, dn);
            std::vector<double> sigma(m);
            for (double &v : sigma)
                v = uniform01(rng) < 0.2 ? 0.0 : std::pow(10.0, uniform(rng, -3, 2));
            const auto w = render::compute_blend_weights(sigma, s.delta).w;
            const auto w_hat = mixture::regenerate_weights(sigma, std::vector<double>(m, dn), s.t_edges).w_hat;
            for (std::size_t j = 0; j < m; ++j)
                worst = std::max(worst, std::fabs(w[j] - w_hat[j]));
        }
        r.passed = worst <= 1e-12;
        r.detail = fmt("max |w_hat - w| = %.3g over 1000 rays", worst);
    });
}

std::vector<std::string> suite_names() { return {"gradient", "oracle", "normalization", "regeneration"}; }

SuiteResult run_suite(const std::string &name, std::uint64_t seed) {
    if (name == "gradient")
        return gradient_suite(seed);
    if (name == "oracle")
        return oracle_suite(seed);
    if (name == "normalization")
        return normalization_suite(seed);
    if (name == "regeneration")
        return regeneration_suite(seed);
    throw ConfigError("unknown verification suite '" + name + "'");
}

} // namespace raymix::verify
