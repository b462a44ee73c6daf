// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

// Command line front end: synth, train, render, eval, verify.

#include "raymix/checkpoint.hpp"
#include "raymix/config.hpp"
#include "raymix/data.hpp"
#include "raymix/error.hpp"
#include "raymix/fileio.hpp"
#include "raymix/metrics.hpp"
#include "raymix/pipeline.hpp"
#include "raymix/platform.hpp"
#include "raymix/rng.hpp"
#include "raymix/synthetic.hpp"
#include "raymix/trainer.hpp"
#include "raymix/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace raymix;

namespace {

struct Options {
    std::string scene;
    std::string ckpt;
    std::optional<std::size_t> views;
    std::optional<std::string> profile;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> sets;
    std::vector<std::string> suites;
};

int code(ExitCode c) { return static_cast<int>(c); }

std::string indexed(const char *stem, std::size_t i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%03zu.png", stem, i);
    return buf;
}

void require_path(const std::string &path, const char *flag) {
    if (path.empty())
        throw ConfigError(std::string(flag) + " is required for this command");
}

data::Protocol protocol_for(loss::Profile p) {
    switch (p) {
    case loss::Profile::Syn4:
    case loss::Profile::Syn8:
    case loss::Profile::Desk:
        return data::Protocol::Synthetic;
    default:
        return data::Protocol::ForwardFacing;
    }
}

std::size_t default_views(loss::Profile p) {
    switch (p) {
    case loss::Profile::Llff6:
    case loss::Profile::Dtu6:
        return 6;
    case loss::Profile::Llff9:
    case loss::Profile::Dtu9:
        return 9;
    case loss::Profile::Syn4:
        return 4;
    case loss::Profile::Syn8:
        return 8;
    default:
        return 3;
    }
}

/// Profile defaults, then --seed, then --set overrides in order.
config::TrainConfig build_config(const Options &o, std::optional<config::TrainConfig> base = std::nullopt) {
    config::TrainConfig cfg = base ? *base : config::defaults_for(loss::parse_profile(o.profile.value_or("desk")));
    if (base && o.profile)
        cfg.profile = loss::parse_profile(*o.profile);
    if (o.seed)
        cfg.seed = *o.seed;
    for (const std::string &s : o.sets)
        config::apply_assignment(cfg, s);
    cfg.validate();
    return cfg;
}

int cmd_synth(const Options &o) {
    require_path(o.out, "--out");
    synth::SyntheticScene scene;
    std::string kind = "desk";
    int width = 0, height = 0;
    double fov = 0.0;
    for (const std::string &s : o.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override '" + s + "' is not of the form key=value");
        const std::string key = s.substr(0, eq), value = s.substr(eq + 1);
        try {
            if (key == "synth.kind")
                kind = value;
            else if (key == "synth.width")
                width = std::stoi(value);
            else if (key == "synth.height")
                height = std::stoi(value);
            else if (key == "synth.fov_deg")
                fov = std::stod(value);
            else
                throw ConfigError("unknown synth key '" + key + "'");
        } catch (const std::logic_error &) {
            throw ConfigError("invalid value '" + value + "' for " + key);
        }
    }
    if (!o.scene.empty()) {
        scene = synth::load_descriptor(o.scene);
    } else if (kind == "desk") {
        scene = synth::desk_scene();
    } else if (kind == "random") {
        Rng rng = make_stream({o.seed.value_or(0), 0x73796e74ULL});
        scene = synth::random_scene(rng);
    } else {
        throw ConfigError("synth.kind must be desk or random");
    }
    if (width > 0)
        scene.cameras.width = width;
    if (height > 0)
        scene.cameras.height = height;
    if (fov > 0.0)
        scene.cameras.fov_deg = fov;
    const data::Manifest m = synth::write_scene(scene, o.out);
    std::cout << "wrote " << m.frames.size() << " views to " << o.out << "\n";
    return 0;
}

int cmd_train(const Options &o) {
    require_path(o.scene, "--scene");
    require_path(o.out, "--out");
    const config::TrainConfig cfg = build_config(o);
    const data::Scene scene = data::load_scene(o.scene);
    const std::size_t k = o.views.value_or(default_views(cfg.profile));
    const data::ViewSplit split = data::select_views(scene.views.size(), k, protocol_for(cfg.profile));
    train::TrainOptions opts;
    opts.out_dir = o.out;
    if (!o.ckpt.empty())
        opts.resume = ckpt::load_checkpoint(o.ckpt, &cfg.arch);
    const train::TrainData td = train::from_scene(scene, split.train);
    const long total = cfg.total_steps(td.pixels());
    opts.on_step = [total](const train::LossRecord &r) {
        if ((r.step + 1) % 100 == 0 || r.step + 1 == total)
            std::cout << "step " << r.step + 1 << "/" << total << " mse " << r.mse << " total " << r.total << "\n";
    };
    train::train(td, cfg, opts);
    std::cout << "checkpoint written to " << (fs::path(o.out) / "checkpoint.bin").string() << "\n";
    return 0;
}

struct Loaded {
    ckpt::Checkpoint ck;
    config::TrainConfig cfg;
};

Loaded load_model(const Options &o) {
    require_path(o.ckpt, "--ckpt");
    Loaded l;
    l.ck = ckpt::load_checkpoint(o.ckpt);
    l.cfg = build_config(o, config::from_json(l.ck.config_json));
    if (!(l.cfg.arch == l.ck.params.architecture()))
        throw ConfigError("model.* overrides cannot change the architecture of a trained checkpoint");
    return l;
}

pipeline::SamplingConfig sampling(const config::TrainConfig &cfg) {
    return {static_cast<std::size_t>(cfg.n_coarse), static_cast<std::size_t>(cfg.n_fine)};
}

void write_view(const fs::path &dir, std::size_t i, const pipeline::ViewRender &v, const data::Manifest &m,
                const geometry::Camera &cam) {
    image::write_png(dir / indexed("rgb", i), v.rgb);
    const double corner = std::hypot(0.5 * cam.width / cam.focal, 0.5 * cam.height / cam.focal, 1.0);
    data::write_depth(dir / indexed("depth", i), {cam.width, cam.height, v.depth}, m.far * corner);
}

int cmd_render(const Options &o) {
    require_path(o.scene, "--scene");
    require_path(o.out, "--out");
    const Loaded l = load_model(o);
    const data::Manifest m = data::load_manifest(o.scene);
    int width = m.width, height = m.height;
    if (width == 0 || height == 0) {
        const data::Scene s = data::load_scene(o.scene);
        width = s.views.front().camera.width;
        height = s.views.front().camera.height;
    }
    const fs::path out(o.out);
    io::write_atomic(out / "config.json", config::to_json(l.cfg));
    for (std::size_t i = 0; i < m.frames.size(); ++i) {
        const geometry::Camera cam = geometry::Camera::centered(
            width, height, data::focal_from_fov(width, m.camera_angle_x), m.frames[i].pose);
        const auto v = pipeline::render_view(l.ck.params, cam, m.near, m.far, data::background_color(m.background),
                                             sampling(l.cfg), static_cast<std::size_t>(l.cfg.chunk));
        write_view(out, i, v, m, cam);
    }
    std::cout << "rendered " << m.frames.size() << " views to " << o.out << "\n";
    return 0;
}

int cmd_eval(const Options &o) {
    require_path(o.scene, "--scene");
    require_path(o.out, "--out");
    const Loaded l = load_model(o);
    const data::Scene scene = data::load_scene(o.scene);
    const std::size_t k = o.views.value_or(default_views(l.cfg.profile));
    const data::ViewSplit split = data::select_views(scene.views.size(), k, protocol_for(l.cfg.profile));
    const fs::path out(o.out);
    io::write_atomic(out / "config.json", config::to_json(l.cfg));
    const std::string name = scene.root.filename().string().empty() ? "scene" : scene.root.filename().string();

    std::vector<metrics::MetricRow> rows;
    std::string depth_csv = "scene,view,depth_mae,pixels\n";
    for (std::size_t i : split.test) {
        const data::View &view = scene.views[i];
        const auto v = pipeline::render_view(l.ck.params, view.camera, scene.manifest.near, scene.manifest.far,
                                             scene.background(), sampling(l.cfg), static_cast<std::size_t>(l.cfg.chunk));
        write_view(out, i, v, scene.manifest, view.camera);
        rows.push_back(metrics::evaluate(name, std::to_string(i), v.rgb, view.image));
        const data::Frame &f = scene.manifest.frames[i];
        if (!f.depth_path.empty() && !f.opacity_path.empty()) {
            const data::DepthMap gt = data::read_depth(scene.root / f.depth_path);
            const std::vector<double> acc = data::read_opacity(scene.root / f.opacity_path);
            std::size_t n = 0;
            const double mae = metrics::depth_mae(v.depth, gt.depth, acc, 0.5, &n);
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%s,%zu,%.8f,%zu\n", name.c_str(), i, mae, n);
            depth_csv += buf;
        }
    }
    metrics::write_report(out / "metrics.csv", rows);
    io::write_atomic(out / "depth_eval.csv", depth_csv);
    std::cout << metrics::format_report(rows);
    return 0;
}

int cmd_verify(const Options &o) {
    const std::vector<std::string> names = o.suites.empty() ? verify::suite_names() : o.suites;
    bool ok = true;
    nlohmann::json report = nlohmann::json::array();
    for (const std::string &n : names) {
        const verify::SuiteResult r = verify::run_suite(n, o.seed.value_or(0));
        ok = ok && r.passed;
        std::printf("%-14s %s  %s (%.2fs)\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.detail.c_str(), r.seconds);
        report.push_back({{"suite", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"seconds", r.seconds}});
    }
    if (!o.out.empty())
        io::write_atomic(fs::path(o.out) / "verify.json", report.dump(2) + "\n");
    return ok ? 0 : code(ExitCode::Verification);
}

} // namespace

int main(int argc, char **argv) {
    raymix::tune_allocator();
    CLI::App app{"raymix: mixture-density radiance fields"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App *sub) {
        sub->add_option("--seed", o.seed, "Random seed");
        sub->add_option("--set", o.sets, "Config override key=value (repeatable)");
        sub->add_option("--out", o.out, "Output directory");
    };
    auto profile = [&](CLI::App *sub) {
        sub->add_option("--profile", o.profile, "Loss-weight profile")
            ->check(CLI::IsMember({"llff3", "llff6", "llff9", "dtu3", "dtu6", "dtu9", "syn4", "syn8", "desk"}));
    };

    CLI::App *synth_cmd = app.add_subcommand("synth", "Render a synthetic scene to a loadable dataset");
    synth_cmd->add_option("--scene", o.scene, "Scene descriptor JSON (default: built-in desk scene)");
    common(synth_cmd);

    CLI::App *train_cmd = app.add_subcommand("train", "Train on the selected views of a scene");
    train_cmd->add_option("--scene", o.scene, "Scene manifest JSON");
    train_cmd->add_option("--views", o.views, "Number of training views");
    train_cmd->add_option("--ckpt", o.ckpt, "Resume from this checkpoint");
    profile(train_cmd);
    common(train_cmd);

    CLI::App *render_cmd = app.add_subcommand("render", "Render every pose of a manifest");
    render_cmd->add_option("--ckpt", o.ckpt, "Checkpoint");
    render_cmd->add_option("--scene", o.scene, "Manifest with the poses to render");
    common(render_cmd);

    CLI::App *eval_cmd = app.add_subcommand("eval", "Render held-out views and report metrics");
    eval_cmd->add_option("--ckpt", o.ckpt, "Checkpoint");
    eval_cmd->add_option("--scene", o.scene, "Scene manifest JSON");
    eval_cmd->add_option("--views", o.views, "Number of training views (selects the held-out set)");
    profile(eval_cmd);
    common(eval_cmd);

    CLI::App *verify_cmd = app.add_subcommand("verify", "Run the verification suites");
    verify_cmd->add_option("suites", o.suites, "Suites to run (default: all)");
    common(verify_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : code(ExitCode::Config);
    }

    try {
        if (*synth_cmd)
            return cmd_synth(o);
        if (*train_cmd)
            return cmd_train(o);
        if (*render_cmd)
            return cmd_render(o);
        if (*eval_cmd)
            return cmd_eval(o);
        return cmd_verify(o);
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return code(ExitCode::Config);
    } catch (const DomainError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return code(ExitCode::Config);
    } catch (const DataError &e) {
        std::cerr << "data error: " << e.what() << "\n";
        return code(ExitCode::Data);
    } catch (const NumericFault &e) {
        std::cerr << "numeric fault: " << e.what() << "\n";
        return code(ExitCode::Numeric);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
