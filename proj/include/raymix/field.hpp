// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "raymix/geometry.hpp"
#include "raymix/tape.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace raymix::field {

using geometry::Vec3;

struct EncodingConfig {
    int l_pos = 8;
    int l_dir = 4;

    bool operator==(const EncodingConfig &) const = default;
};

/// Network shape. The trunk sees only the encoded position, so density and the
/// Laplace scales are view independent; color and the ray-depth vector come from
/// a head that also sees the encoded view direction.
struct Architecture {
    EncodingConfig encoding;
    int depth = 4;        ///< trunk layers
    int width = 128;      ///< trunk width
    int bottleneck = 128; ///< bottleneck feature size
    int view_width = 64;  ///< hidden width of the view-conditioned head
    double beta_min = 1e-3;
    double sigma_bias = -1.0;

    bool operator==(const Architecture &) const = default;

    int position_features() const { return 3 + 6 * encoding.l_pos; }
    int view_features() const { return 3 + 6 * encoding.l_dir; }
    /// Human-readable shape summary, used in mismatch errors.
    std::string describe() const;
};

/// [x, sin(2^0 pi x), cos(2^0 pi x), ..., sin(2^(l-1) pi x), cos(2^(l-1) pi x)], each block 3 wide.
std::vector<double> positional_encode(const Vec3 &x, int l);
void positional_encode_into(const Vec3 &x, int l, double *out);

struct ParamSlot {
    std::string name;
    std::size_t offset;
    std::size_t rows;
    std::size_t cols;

    std::size_t size() const { return rows * cols; }
};

/// All network weights in one flat buffer, addressed by named slots.
class FieldParams {
public:
    FieldParams() = default;

    /// Every value zero except the fixed head biases.
    static FieldParams zeros(const Architecture &arch);
    /// Fan-in scaled uniform weights, zero biases, depth head biased towards unit ray depth.
    static FieldParams initialize(const Architecture &arch, std::uint64_t seed);

    const Architecture &architecture() const { return arch_; }
    const std::vector<ParamSlot> &slots() const { return slots_; }
    const ParamSlot &slot(const std::string &name) const;
    std::size_t size() const { return values_.size(); }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    /// Throws NumericFault with the flat index of the first non-finite value.
    void validate() const;

private:
    explicit FieldParams(const Architecture &arch);

    Architecture arch_;
    std::vector<ParamSlot> slots_;
    std::vector<double> values_;
};

/// Parameters recorded once on a tape, shared by every forward pass on that tape.
struct FieldBinding {
    std::vector<ad::Var> vars;
};

FieldBinding bind(ad::Tape &tape, const FieldParams &params);

/// Per-sample outputs as tape variables; n rows each.
struct FieldVars {
    ad::Var mu_c;       ///< n x 3, in [0, 1]
    ad::Var sigma;      ///< n x 1, >= 0
    ad::Var beta;       ///< n x 3, >= beta_min
    ad::Var mu_d_raw;   ///< n x 3, unnormalized ray-depth vector
    ad::Var mu_d;       ///< n x 1, its Euclidean norm
};

/// Batched forward pass over n samples. `positions` and `views` are n x 3; views must be unit length.
FieldVars forward(ad::Tape &tape, const FieldParams &params, const FieldBinding &binding,
                  const ad::Matrix &positions, const ad::Matrix &views);

struct FieldOutput {
    Vec3 mu_c;
    double sigma;
    Vec3 beta;
    Vec3 mu_d_raw;
    double mu_d;
};

/// Single-sample forward pass, recorded on `tape`.
FieldOutput field_forward(const FieldParams &params, ad::Tape &tape, const Vec3 &pos, const Vec3 &view);

} // namespace raymix::field
