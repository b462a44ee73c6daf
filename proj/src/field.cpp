// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/field.hpp"

#include "raymix/error.hpp"
#include "raymix/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace raymix::field {

std::string Architecture::describe() const {
    std::ostringstream os;
    os << "trunk " << depth << "x" << width << ", bottleneck " << bottleneck << ", view head " << view_width
       << ", l_pos " << encoding.l_pos << ", l_dir " << encoding.l_dir << ", beta_min " << beta_min
       << ", sigma_bias " << sigma_bias;
    return os.str();
}

void positional_encode_into(const Vec3 &x, int l, double *out) {
    out[0] = x.x();
    out[1] = x.y();
    out[2] = x.z();
    double *p = out + 3;
    double freq = std::numbers::pi;
    for (int k = 0; k < l; ++k, freq *= 2.0) {
        for (int c = 0; c < 3; ++c)
            p[c] = std::sin(freq * x[c]);
        for (int c = 0; c < 3; ++c)
            p[3 + c] = std::cos(freq * x[c]);
        p += 6;
    }
}

std::vector<double> positional_encode(const Vec3 &x, int l) {
    if (l < 0)
        throw DomainError("positional_encode: frequency count must be non-negative");
    std::vector<double> out(static_cast<std::size_t>(3 + 6 * l));
    positional_encode_into(x, l, out.data());
    return out;
}

// ---------------------------------------------------------------------------

FieldParams::FieldParams(const Architecture &arch) : arch_(arch) {
    if (arch.depth < 1 || arch.width < 1 || arch.bottleneck < 1 || arch.view_width < 1 || arch.encoding.l_pos < 0 ||
        arch.encoding.l_dir < 0)
        throw DomainError("invalid architecture: " + arch.describe());
    std::size_t offset = 0;
    auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
        slots_.push_back({std::move(name), offset, rows, cols});
        offset += rows * cols;
    };
    const auto w = static_cast<std::size_t>(arch.width);
    const auto b = static_cast<std::size_t>(arch.bottleneck);
    const auto v = static_cast<std::size_t>(arch.view_width);
    std::size_t in = static_cast<std::size_t>(arch.position_features());
    for (int i = 0; i < arch.depth; ++i) {
        add("trunk" + std::to_string(i) + ".weight", w, in);
        add("trunk" + std::to_string(i) + ".bias", 1, w);
        in = w;
    }
    add("sigma.weight", 1, w);
    add("sigma.bias", 1, 1);
    add("beta.weight", 3, w);
    add("beta.bias", 1, 3);
    add("bottleneck.weight", b, w);
    add("bottleneck.bias", 1, b);
    add("view.weight", v, b + static_cast<std::size_t>(arch.view_features()));
    add("view.bias", 1, v);
    add("color.weight", 3, v);
    add("color.bias", 1, 3);
    add("depth.weight", 3, v);
    add("depth.bias", 1, 3);
    values_.assign(offset, 0.0);
}

const ParamSlot &FieldParams::slot(const std::string &name) const {
    for (const auto &s : slots_)
        if (s.name == name)
            return s;
    throw DomainError("no parameter slot named '" + name + "'");
}

FieldParams FieldParams::zeros(const Architecture &arch) {
    FieldParams p(arch);
    p.values_[p.slot("depth.bias").offset] = 1.0;
    return p;
}

FieldParams FieldParams::initialize(const Architecture &arch, std::uint64_t seed) {
    FieldParams p = zeros(arch);
    Rng rng = make_stream({seed, 0x6669656c64ULL});
    for (const auto &s : p.slots_) {
        if (s.name.ends_with(".bias"))
            continue;
        const bool relu_input = s.name.starts_with("trunk") || s.name.starts_with("view");
        const double fan_in = static_cast<double>(s.cols);
        const double bound = relu_input ? std::sqrt(6.0 / fan_in) : std::sqrt(1.0 / fan_in);
        for (std::size_t i = 0; i < s.size(); ++i)
            p.values_[s.offset + i] = uniform(rng, -bound, bound);
    }
    return p;
}

void FieldParams::validate() const {
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (!std::isfinite(values_[i]))
            throw NumericFault("non-finite network parameter", static_cast<long>(i));
}

FieldBinding bind(ad::Tape &tape, const FieldParams &params) {
    params.validate();
    FieldBinding b;
    b.vars.reserve(params.slots().size());
    for (const auto &s : params.slots())
        b.vars.push_back(tape.parameter(params.values().subspan(s.offset, s.size()), s.rows, s.cols, s.offset));
    return b;
}

FieldVars forward(ad::Tape &tape, const FieldParams &params, const FieldBinding &binding,
                  const ad::Matrix &positions, const ad::Matrix &views) {
    const Architecture &arch = params.architecture();
    if (positions.cols != 3 || views.cols != 3 || positions.rows != views.rows)
        throw DomainError("field forward: positions and views must both be n x 3");
    if (binding.vars.size() != params.slots().size())
        throw DomainError("field forward: binding does not match parameters");
    const std::size_t n = positions.rows;

    ad::Matrix pos_enc(n, static_cast<std::size_t>(arch.position_features()));
    ad::Matrix view_enc(n, static_cast<std::size_t>(arch.view_features()));
    for (std::size_t r = 0; r < n; ++r) {
        const Vec3 p(positions(r, 0), positions(r, 1), positions(r, 2));
        const Vec3 d(views(r, 0), views(r, 1), views(r, 2));
        if (!p.allFinite())
            throw NumericFault("non-finite sample position", static_cast<long>(r));
        if (!d.allFinite() || std::fabs(d.norm() - 1.0) > 1e-6)
            throw DomainError("field forward: view direction " + std::to_string(r) + " is not unit length");
        positional_encode_into(p, arch.encoding.l_pos, pos_enc.row(r));
        positional_encode_into(d, arch.encoding.l_dir, view_enc.row(r));
    }

    std::size_t k = 0;
    auto next = [&]() { return binding.vars[k++]; };

    ad::Var h = tape.constant(std::move(pos_enc));
    for (int i = 0; i < arch.depth; ++i) {
        const ad::Var w = next();
        const ad::Var b = next();
        h = tape.relu(tape.linear(h, w, b));
    }

    FieldVars out{};
    {
        const ad::Var w = next();
        const ad::Var b = next();
        out.sigma = tape.softplus(tape.add_scalar(tape.linear(h, w, b), arch.sigma_bias));
    }
    {
        const ad::Var w = next();
        const ad::Var b = next();
        out.beta = tape.add_scalar(tape.softplus(tape.linear(h, w, b)), arch.beta_min);
    }
    ad::Var bottleneck;
    {
        const ad::Var w = next();
        const ad::Var b = next();
        bottleneck = tape.linear(h, w, b);
    }
    ad::Var g;
    {
        const ad::Var w = next();
        const ad::Var b = next();
        g = tape.relu(tape.linear(tape.concat_cols(bottleneck, tape.constant(std::move(view_enc))), w, b));
    }
    {
        const ad::Var w = next();
        const ad::Var b = next();
        out.mu_c = tape.sigmoid(tape.linear(g, w, b));
    }
    {
        const ad::Var w = next();
        const ad::Var b = next();
        out.mu_d_raw = tape.linear(g, w, b);
        out.mu_d = tape.row_norm(out.mu_d_raw);
    }
    return out;
}

FieldOutput field_forward(const FieldParams &params, ad::Tape &tape, const Vec3 &pos, const Vec3 &view) {
    const FieldBinding binding = bind(tape, params);
    ad::Matrix p(1, 3), d(1, 3);
    for (int c = 0; c < 3; ++c) {
        p(0, c) = pos[c];
        d(0, c) = view[c];
    }
    const FieldVars v = forward(tape, params, binding, p, d);
    FieldOutput out{};
    for (int c = 0; c < 3; ++c) {
        out.mu_c[c] = tape.value(v.mu_c).data[c];
        out.beta[c] = tape.value(v.beta).data[c];
        out.mu_d_raw[c] = tape.value(v.mu_d_raw).data[c];
    }
    out.sigma = tape.scalar(v.sigma);
    out.mu_d = tape.scalar(v.mu_d);
    return out;
}

} // namespace raymix::field
