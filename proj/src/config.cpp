// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/config.hpp"

#include "raymix/error.hpp"

#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <type_traits>

namespace raymix::config {
using nlohmann::json;

namespace {

// Every configurable field with its dotted key. One table drives overrides,
// serialization and the list of known keys.
template <class Cfg, class F>
void visit(Cfg &c, F &&f) {
    f("train.profile", c.profile);
    f("train.batch_size", c.batch_size);
    f("train.epochs", c.epochs);
    f("train.steps", c.steps);
    f("train.lr_init", c.lr_init);
    f("train.lr_final", c.lr_final);
    f("train.warmup_steps", c.warmup_steps);
    f("train.delay_mult", c.delay_mult);
    f("train.clip_value", c.clip_value);
    f("train.clip_norm", c.clip_norm);
    f("train.n_coarse", c.n_coarse);
    f("train.n_fine", c.n_fine);
    f("train.seed", c.seed);
    f("train.checkpoint_every", c.checkpoint_every);
    f("train.chunk", c.chunk);
    f("train.threads", c.threads);
    f("anneal.enabled", c.anneal);
    f("anneal.steps", c.anneal_cfg.anneal_steps);
    f("anneal.start_fraction", c.anneal_cfg.start_fraction);
    f("loss.lambda_c_start", c.schedule.lambda_c_start);
    f("loss.lambda_c_end", c.schedule.lambda_c_end);
    f("loss.lambda_c_steps", c.schedule.lambda_c_steps);
    f("loss.lambda_d", c.schedule.lambda_d);
    f("loss.lambda_c_hat", c.schedule.lambda_c_hat);
    f("loss.coarse_mult", c.schedule.coarse_mult);
    f("loss.mse_only", c.schedule.mse_only);
    f("loss.reduction", c.objective.reduction);
    f("loss.depth_scale", c.objective.depth_scale);
    f("loss.stop_grad_regen_depth", c.objective.stop_grad_regen_depth);
    f("model.l_pos", c.arch.encoding.l_pos);
    f("model.l_dir", c.arch.encoding.l_dir);
    f("model.depth", c.arch.depth);
    f("model.width", c.arch.width);
    f("model.bottleneck", c.arch.bottleneck);
    f("model.view_width", c.arch.view_width);
    f("model.beta_min", c.arch.beta_min);
    f("model.sigma_bias", c.arch.sigma_bias);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key) + " (expected " +
                      std::string(expected) + ")");
}

double parse_double(std::string_view key, std::string_view value) {
    const std::string s(value);
    char *end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
        bad_value(key, value, "a finite number");
    return v;
}

long long parse_integer(std::string_view key, std::string_view value) {
    const std::string s(value);
    char *end = nullptr;
    errno = 0;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
        bad_value(key, value, "an integer");
    return v;
}

template <class T>
void parse_into(std::string_view key, std::string_view value, T &out) {
    if constexpr (std::is_same_v<T, bool>) {
        if (value == "true" || value == "1")
            out = true;
        else if (value == "false" || value == "0")
            out = false;
        else
            bad_value(key, value, "true or false");
    } else if constexpr (std::is_same_v<T, double>) {
        out = parse_double(key, value);
    } else if constexpr (std::is_same_v<T, std::optional<double>>) {
        if (value == "default" || value == "profile")
            out.reset();
        else
            out = parse_double(key, value);
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        const long long v = parse_integer(key, value);
        if (v < 0)
            bad_value(key, value, "a non-negative integer");
        out = static_cast<std::uint64_t>(v);
    } else if constexpr (std::is_integral_v<T>) {
        const long long v = parse_integer(key, value);
        if (v < std::numeric_limits<T>::min() || v > std::numeric_limits<T>::max())
            bad_value(key, value, "an integer in range");
        out = static_cast<T>(v);
    } else if constexpr (std::is_same_v<T, loss::Profile>) {
        out = loss::parse_profile(value);
    } else if constexpr (std::is_same_v<T, loss::Reduction>) {
        if (value == "mean")
            out = loss::Reduction::Mean;
        else if (value == "sum")
            out = loss::Reduction::Sum;
        else
            bad_value(key, value, "mean or sum");
    } else if constexpr (std::is_same_v<T, mixture::DepthScale>) {
        if (value == "mean")
            out = mixture::DepthScale::ArithmeticMean;
        else if (value == "geometric")
            out = mixture::DepthScale::GeometricMean;
        else
            bad_value(key, value, "mean or geometric");
    } else {
        static_assert(sizeof(T) == 0, "unhandled config field type");
    }
}

template <class T>
json to_json_value(const T &v) {
    if constexpr (std::is_same_v<T, std::optional<double>>)
        return v ? json(*v) : json(nullptr);
    else if constexpr (std::is_same_v<T, loss::Profile>)
        return std::string(loss::profile_name(v));
    else if constexpr (std::is_same_v<T, loss::Reduction>)
        return v == loss::Reduction::Mean ? "mean" : "sum";
    else if constexpr (std::is_same_v<T, mixture::DepthScale>)
        return v == mixture::DepthScale::ArithmeticMean ? "mean" : "geometric";
    else
        return json(v);
}

template <class T>
void from_json_value(std::string_view key, const json &j, T &out) {
    if constexpr (std::is_same_v<T, std::optional<double>>) {
        if (j.is_null())
            out.reset();
        else
            out = j.get<double>();
    } else if constexpr (std::is_same_v<T, bool> || std::is_arithmetic_v<T>) {
        out = j.get<T>();
    } else {
        parse_into(key, j.get<std::string>(), out);
    }
}

} // namespace

void TrainConfig::validate() const {
    auto require = [](bool ok, const std::string &what) {
        if (!ok)
            throw ConfigError(what);
    };
    require(batch_size >= 1, "train.batch_size must be >= 1");
    require(steps >= 0, "train.steps must be >= 0");
    require(steps > 0 || epochs > 0.0, "either train.steps or train.epochs must be positive");
    require(lr_final > 0.0 && lr_init >= lr_final, "learning rates need lr_init >= lr_final > 0");
    require(warmup_steps >= 0, "train.warmup_steps must be >= 0");
    require(delay_mult > 0.0 && delay_mult <= 1.0, "train.delay_mult must lie in (0, 1]");
    require(clip_value > 0.0 && clip_norm > 0.0, "clipping thresholds must be positive");
    require(n_coarse >= 1 && n_fine >= 1, "train.n_coarse and train.n_fine must be >= 1");
    require(chunk >= 1 && threads >= 1, "train.chunk and train.threads must be >= 1");
    require(checkpoint_every >= 0, "train.checkpoint_every must be >= 0");
    require(anneal_cfg.anneal_steps >= 0 && anneal_cfg.start_fraction > 0.0 && anneal_cfg.start_fraction <= 1.0,
            "anneal.steps must be >= 0 and anneal.start_fraction in (0, 1]");
    require(schedule.lambda_c_steps >= 0, "loss.lambda_c_steps must be >= 0");
    require(schedule.coarse_mult >= 0.0, "loss.coarse_mult must be >= 0");
    require(arch.encoding.l_pos >= 0 && arch.encoding.l_dir >= 0 && arch.depth >= 1 && arch.width >= 1 &&
                arch.bottleneck >= 1 && arch.view_width >= 1,
            "model sizes must be positive");
    require(arch.beta_min > 0.0, "model.beta_min must be positive");
}

long TrainConfig::total_steps(std::size_t pixels) const {
    if (steps > 0)
        return steps;
    return static_cast<long>(std::ceil(epochs * static_cast<double>(pixels) / static_cast<double>(batch_size)));
}

TrainConfig defaults_for(loss::Profile profile) {
    TrainConfig c;
    c.profile = profile;
    if (profile == loss::Profile::Syn4 || profile == loss::Profile::Syn8) {
        c.lr_init = 1e-3;
        c.lr_final = 1e-5;
    }
    return c;
}

void set_override(TrainConfig &cfg, std::string_view key, std::string_view value) {
    bool found = false;
    visit(cfg, [&](std::string_view k, auto &field) {
        if (k == key) {
            parse_into(key, value, field);
            found = true;
        }
    });
    if (!found)
        throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void apply_assignment(TrainConfig &cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
    set_override(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::vector<std::string> known_keys() {
    std::vector<std::string> keys;
    TrainConfig c;
    visit(c, [&](std::string_view k, auto &) { keys.emplace_back(k); });
    return keys;
}

std::string to_json(const TrainConfig &cfg) {
    json j = json::object();
    visit(cfg, [&](std::string_view k, const auto &field) { j[std::string(k)] = to_json_value(field); });
    return j.dump(2) + "\n";
}

TrainConfig from_json(const std::string &text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception &e) {
        throw ConfigError(std::string("malformed config JSON: ") + e.what());
    }
    if (!j.is_object())
        throw ConfigError("config JSON must be an object");
    TrainConfig cfg;
    std::size_t matched = 0;
    try {
        visit(cfg, [&](std::string_view k, auto &field) {
            const auto it = j.find(std::string(k));
            if (it == j.end())
                return;
            from_json_value(k, *it, field);
            ++matched;
        });
    } catch (const json::exception &e) {
        throw ConfigError(std::string("config JSON value of the wrong type: ") + e.what());
    }
    if (matched != j.size())
        throw ConfigError("config JSON contains unknown keys");
    return cfg;
}

} // namespace raymix::config
