// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/trainer.hpp"

#include "raymix/error.hpp"
#include "raymix/fileio.hpp"
#include "raymix/pipeline.hpp"
#include "raymix/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>

namespace raymix::train {
namespace fs = std::filesystem;

namespace {

// Stream tags; every random draw is keyed by (seed, step, tag[, ray]).
constexpr std::uint64_t kBatchStream = 0x62617463ULL;
constexpr std::uint64_t kCoarseStream = 0x636f6172ULL;
constexpr std::uint64_t kFineStream = 0x66696e65ULL;

struct ChunkResult {
    std::vector<double> grad;
    loss::LevelTerms fine;
    double total = 0.0;
};

optim::LrSchedule lr_schedule(const config::TrainConfig &cfg, long total_steps) {
    return {cfg.lr_init, cfg.lr_final, total_steps, cfg.warmup_steps, cfg.delay_mult};
}

} // namespace

std::size_t TrainData::pixels() const {
    std::size_t n = 0;
    for (const TrainView &v : views)
        n += v.image.pixels();
    return n;
}

TrainData from_scene(const data::Scene &scene, const std::vector<std::size_t> &indices) {
    TrainData d;
    d.near = scene.manifest.near;
    d.far = scene.manifest.far;
    d.background = scene.background();
    for (std::size_t i : indices) {
        if (i >= scene.views.size())
            throw DomainError("training view index out of range");
        d.views.push_back({scene.views[i].camera, scene.views[i].image});
    }
    return d;
}

Trainer::Trainer(TrainData data, config::TrainConfig cfg)
    : data_(std::move(data)), cfg_(std::move(cfg)) {
    cfg_.validate();
    if (data_.views.empty())
        throw DomainError("training needs at least one view");
    params_ = field::FieldParams::initialize(cfg_.arch, cfg_.seed);
    state_ = optim::OptimizerState::zeros(params_.size());
    std::size_t offset = 0;
    for (const TrainView &v : data_.views) {
        if (v.image.channels != 3 || v.image.width != v.camera.width || v.image.height != v.camera.height)
            throw DomainError("training image does not match its camera");
        view_offsets_.push_back(offset);
        offset += v.image.pixels();
    }
    total_steps_ = cfg_.total_steps(offset);
}

Trainer::Trainer(TrainData data, config::TrainConfig cfg, ckpt::Checkpoint resume)
    : Trainer(std::move(data), std::move(cfg)) {
    if (!(resume.params.architecture() == cfg_.arch))
        throw ckpt::CheckpointError(ckpt::Errc::ArchitectureMismatch,
                                    "checkpoint architecture [" + resume.params.architecture().describe() +
                                        "] does not match configured [" + cfg_.arch.describe() + "]");
    params_ = std::move(resume.params);
    state_ = resume.state.m.empty() ? optim::OptimizerState::zeros(params_.size()) : std::move(resume.state);
    state_.step = resume.state.step;
}

std::vector<long> Trainer::batch_ids(long step) const {
    Rng rng = make_stream({cfg_.seed, static_cast<std::uint64_t>(step), kBatchStream});
    const std::uint64_t total = data_.pixels();
    std::vector<long> ids(static_cast<std::size_t>(cfg_.batch_size));
    for (long &id : ids)
        id = static_cast<long>(uniform_index(rng, total));
    return ids;
}

LossRecord Trainer::evaluate(long step, std::span<double> grads) const {
    if (grads.size() != params_.size())
        throw DomainError("evaluate: gradient buffer has the wrong size");
    const std::vector<long> ids = batch_ids(step);
    const std::size_t batch = ids.size();

    pipeline::RayBatch all;
    all.background = data_.background;
    all.ids = ids;
    for (long id : ids) {
        const auto it = std::upper_bound(view_offsets_.begin(), view_offsets_.end(), static_cast<std::size_t>(id));
        const std::size_t v = static_cast<std::size_t>(it - view_offsets_.begin()) - 1;
        const TrainView &view = data_.views[v];
        const std::size_t local = static_cast<std::size_t>(id) - view_offsets_[v];
        const int x = static_cast<int>(local % view.image.width);
        const int y = static_cast<int>(local / view.image.width);
        geometry::Ray ray = geometry::generate_ray(view.camera, x, y, data_.near, data_.far);
        if (cfg_.anneal)
            std::tie(ray.t_near, ray.t_far) = geometry::anneal_bounds(ray, step, cfg_.anneal_cfg);
        all.rays.push_back(ray);
        all.colors.push_back(view.image.rgb(x, y));
    }

    const loss::LossWeights weights = loss::lambda_schedule(step, cfg_.profile, cfg_.schedule);
    pipeline::ObjectiveConfig ocfg = cfg_.objective;
    ocfg.reduction = loss::Reduction::Sum;
    const double scale =
        cfg_.objective.reduction == loss::Reduction::Mean ? 1.0 / static_cast<double>(batch) : 1.0;

    const std::size_t chunk = static_cast<std::size_t>(cfg_.chunk);
    const std::size_t n_chunks = (batch + chunk - 1) / chunk;
    std::vector<ChunkResult> results(n_chunks);
    std::vector<std::exception_ptr> errors(n_chunks);

    auto run_chunk = [&](std::size_t c) {
        const std::size_t begin = c * chunk;
        const std::size_t end = std::min(batch, begin + chunk);
        pipeline::RayBatch sub;
        sub.background = all.background;
        sub.rays.assign(all.rays.begin() + begin, all.rays.begin() + end);
        sub.colors.assign(all.colors.begin() + begin, all.colors.begin() + end);
        sub.ids.assign(all.ids.begin() + begin, all.ids.begin() + end);

        ad::Tape tape;
        const field::FieldBinding binding = field::bind(tape, params_);
        std::vector<geometry::RaySamples> coarse;
        std::vector<Rng> fine_rngs;
        for (std::size_t r = begin; r < end; ++r) {
            Rng rng = make_stream({cfg_.seed, static_cast<std::uint64_t>(step), kCoarseStream, r});
            coarse.push_back(geometry::stratified_sample(all.rays[r], static_cast<std::size_t>(cfg_.n_coarse), &rng));
            fine_rngs.push_back(make_stream({cfg_.seed, static_cast<std::uint64_t>(step), kFineStream, r}));
        }
        const pipeline::LevelVars coarse_lv = pipeline::evaluate_level(tape, params_, binding, sub, coarse, ocfg);
        const std::vector<geometry::RaySamples> fine = pipeline::fine_samples(
            tape, coarse_lv, coarse, sub, static_cast<std::size_t>(cfg_.n_fine), fine_rngs);
        const pipeline::LevelVars fine_lv = pipeline::evaluate_level(tape, params_, binding, sub, fine, ocfg);
        const pipeline::Objective obj = pipeline::combine_levels(tape, coarse_lv, fine_lv, weights);
        const ad::Var loss = tape.mul_scalar(obj.total, scale);

        ChunkResult &res = results[c];
        res.grad.assign(params_.size(), 0.0);
        tape.backward(loss, res.grad);
        res.fine = obj.bundle.fine;
        res.total = tape.scalar(loss);
    };

    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg_.threads), n_chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) {
            try {
                run_chunk(c);
            } catch (...) {
                errors[c] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t c = next++; c < n_chunks; c = next++) {
                    try {
                        run_chunk(c);
                    } catch (...) {
                        errors[c] = std::current_exception();
                    }
                }
            });
        for (std::thread &t : pool)
            t.join();
    }
    for (const std::exception_ptr &e : errors)
        if (e)
            std::rethrow_exception(e);

    // Reduction in chunk order keeps the result independent of the thread count.
    std::fill(grads.begin(), grads.end(), 0.0);
    LossRecord rec;
    rec.step = step;
    rec.lr = optim::lr_at(step, lr_schedule(cfg_, total_steps_));
    for (const ChunkResult &res : results) {
        for (std::size_t i = 0; i < grads.size(); ++i)
            grads[i] += res.grad[i];
        rec.mse += res.fine.mse * scale;
        rec.nll_c += res.fine.nll_c * scale;
        rec.nll_d += res.fine.nll_d * scale;
        rec.nll_c_hat += res.fine.nll_c_hat * scale;
        rec.total += res.total;
    }
    return rec;
}

LossRecord Trainer::step() {
    std::vector<double> grads(params_.size());
    const LossRecord rec = evaluate(state_.step, grads);
    if (!std::isfinite(rec.total))
        throw NumericFault("non-finite loss at step " + std::to_string(state_.step));
    optim::clip_gradients(grads, {cfg_.clip_value, cfg_.clip_norm});
    optim::adam_step(params_.values(), grads, state_, rec.lr);
    return rec;
}

ckpt::Checkpoint Trainer::checkpoint() const { return {params_, state_, config::to_json(cfg_)}; }

std::string format_loss_header() { return "step,lr,mse,nll_c,nll_d,nll_c_hat,total\n"; }

std::string format_loss_row(const LossRecord &r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step, r.lr, r.mse, r.nll_c,
                  r.nll_d, r.nll_c_hat, r.total);
    return buf;
}

TrainResult train(const TrainData &data, const config::TrainConfig &cfg, const TrainOptions &opts) {
    Trainer t = opts.resume ? Trainer(data, cfg, *opts.resume) : Trainer(data, cfg);
    const bool write = !opts.out_dir.empty();
    std::ofstream log;
    if (write) {
        fs::create_directories(opts.out_dir);
        io::write_atomic(opts.out_dir / "config.json", config::to_json(cfg));
        const fs::path log_path = opts.out_dir / "loss_log.csv";
        const bool append = opts.resume.has_value() && fs::exists(log_path);
        log.open(log_path, append ? std::ios::app : std::ios::trunc);
        if (!log)
            throw std::runtime_error("cannot open " + log_path.string());
        if (!append)
            log << format_loss_header();
    }

    TrainResult result;
    while (t.current_step() < t.total_steps()) {
        LossRecord rec;
        try {
            rec = t.step();
        } catch (const NumericFault &e) {
            if (write) {
                ckpt::save_checkpoint(opts.out_dir / "last_good.bin", t.checkpoint());
                const nlohmann::json diag{{"step", t.current_step()}, {"message", e.what()}, {"index", e.index()}};
                io::write_atomic(opts.out_dir / "fault.json", diag.dump(2) + "\n");
            }
            throw;
        }
        result.log.push_back(rec);
        if (write)
            log << format_loss_row(rec) << std::flush;
        if (opts.on_step)
            opts.on_step(rec);
        if (write && cfg.checkpoint_every > 0 && t.current_step() % cfg.checkpoint_every == 0)
            ckpt::save_checkpoint(opts.out_dir / "checkpoint.bin", t.checkpoint());
    }
    result.checkpoint = t.checkpoint();
    if (write)
        ckpt::save_checkpoint(opts.out_dir / "checkpoint.bin", result.checkpoint);
    return result;
}

} // namespace raymix::train
