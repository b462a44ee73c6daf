// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace raymix::ad {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    static Matrix column(std::vector<double> values) {
        Matrix m;
        m.rows = values.size();
        m.cols = 1;
        m.data = std::move(values);
        return m;
    }
    static Matrix scalar(double v) { return Matrix(1, 1, v); }

    std::size_t size() const { return data.size(); }
    double &operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double *row(std::size_t r) { return data.data() + r * cols; }
    const double *row(std::size_t r) const { return data.data() + r * cols; }
};

/// Handle to a node on a Tape.
struct Var {
    std::uint32_t id = 0;
};

/// Append-only reverse-mode differentiation tape over matrix values.
///
/// Nodes are recorded in evaluation order, so the recording order is a topological
/// order of the graph; backward() walks it once in reverse. Parameter leaves carry
/// an offset into a caller-owned flat gradient buffer that backward() accumulates into.
/// A tape is single-writer; independent tapes may be used concurrently.
class Tape {
public:
    Tape() = default;

    void clear();
    std::size_t size() const { return nodes_.size(); }

    Var constant(Matrix value);
    Var parameter(std::span<const double> values, std::size_t rows, std::size_t cols, std::size_t grad_offset);

    const Matrix &value(Var v) const { return nodes_[v.id].value; }
    double scalar(Var v) const { return nodes_[v.id].value.data.at(0); }
    /// Gradient of the last backward() loss with respect to `v` (zeros if unreached).
    Matrix grad(Var v) const;

    /// Accumulates d(loss)/d(parameter) into `param_grads` (+=). Throws DomainError
    /// when `loss` is not 1x1.
    void backward(Var loss, std::span<double> param_grads);

    // Elementwise, shapes must match.
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);
    Var add_scalar(Var a, double s);
    Var mul_scalar(Var a, double s);
    Var neg(Var a) { return mul_scalar(a, -1.0); }
    Var square(Var a);
    Var exp(Var a);
    Var log(Var a);
    Var abs(Var a);
    Var relu(Var a);
    Var sigmoid(Var a);
    Var softplus(Var a);
    /// 1 - exp(-x), evaluated as -expm1(-x).
    Var one_minus_exp_neg(Var a);
    Var stop_gradient(Var a);

    /// y = x * W^T + b for x [n x k], W [o x k], b [1 x o].
    Var linear(Var x, Var w, Var b);

    // Shape manipulation.
    Var broadcast_cols(Var column, std::size_t cols);
    Var slice_cols(Var a, std::size_t begin, std::size_t end);
    Var concat_cols(Var a, Var b);
    Var reshape(Var a, std::size_t rows, std::size_t cols);

    // Reductions.
    Var row_sum(Var a);
    Var sum(Var a);
    Var mean(Var a);
    /// Euclidean norm of each row, [n x k] -> [n x 1]; zero rows get a zero subgradient.
    Var row_norm(Var a);
    /// y[r][j] = sum_{m<j} x[r][m]
    Var exclusive_cumsum_rows(Var a);
    /// Each row divided by its sum; rows summing below `eps_sum` become uniform
    /// (and pass no gradient).
    Var normalize_rows(Var a, double eps_sum);
    /// y[r] = log sum_j p[r][j] * exp(f[r][j]) with max-subtraction over the j with p > 0.
    Var weighted_logsumexp_rows(Var p, Var f);

private:
    enum class Op : std::uint8_t {
        Constant,
        Parameter,
        Add,
        Sub,
        Mul,
        Div,
        AddScalar,
        MulScalar,
        Square,
        Exp,
        Log,
        Abs,
        Relu,
        Sigmoid,
        Softplus,
        OneMinusExpNeg,
        StopGradient,
        Linear,
        BroadcastCols,
        SliceCols,
        ConcatCols,
        Reshape,
        RowSum,
        Sum,
        Mean,
        RowNorm,
        ExclusiveCumsumRows,
        NormalizeRows,
        WeightedLogSumExpRows,
    };

    struct Node {
        Op op = Op::Constant;
        bool needs_grad = false;
        std::uint32_t in0 = 0;
        std::uint32_t in1 = 0;
        std::uint32_t in2 = 0;
        double scalar = 0.0;
        std::size_t aux = 0;
        Matrix value;
        std::vector<double> grad;
    };

    Var push(Node node);
    Var unary(Op op, Var a, Matrix value);
    Var binary(Op op, Var a, Var b, Matrix value);
    const Node &node(Var v) const { return nodes_[v.id]; }
    void check_same_shape(Var a, Var b, const char *what) const;
    std::vector<double> &grad_buffer(std::uint32_t id);
    void backward_node(std::uint32_t id, std::span<double> param_grads);

    std::vector<Node> nodes_;
};

} // namespace raymix::ad
