// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/tape.hpp"

#include "raymix/error.hpp"
#include "raymix/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace raymix::ad {
namespace {

double stable_softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
    if (x >= 0.0)
        return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::string shape_str(const Matrix &m) { return std::to_string(m.rows) + "x" + std::to_string(m.cols); }

} // namespace

void Tape::clear() { nodes_.clear(); }

Var Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::unary(Op op, Var a, Matrix value) {
    Node n;
    n.op = op;
    n.in0 = a.id;
    n.needs_grad = nodes_[a.id].needs_grad;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::binary(Op op, Var a, Var b, Matrix value) {
    Node n;
    n.op = op;
    n.in0 = a.id;
    n.in1 = b.id;
    n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
    n.value = std::move(value);
    return push(std::move(n));
}

void Tape::check_same_shape(Var a, Var b, const char *what) const {
    const Matrix &x = node(a).value;
    const Matrix &y = node(b).value;
    if (x.rows != y.rows || x.cols != y.cols)
        throw DomainError(std::string(what) + ": shape mismatch " + shape_str(x) + " vs " + shape_str(y));
}

Var Tape::constant(Matrix value) {
    Node n;
    n.op = Op::Constant;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::parameter(std::span<const double> values, std::size_t rows, std::size_t cols, std::size_t grad_offset) {
    if (values.size() != rows * cols)
        throw DomainError("parameter: value count does not match shape");
    Node n;
    n.op = Op::Parameter;
    n.needs_grad = true;
    n.aux = grad_offset;
    n.value = Matrix(rows, cols);
    std::copy(values.begin(), values.end(), n.value.data.begin());
    return push(std::move(n));
}

Matrix Tape::grad(Var v) const {
    const Node &n = node(v);
    Matrix g(n.value.rows, n.value.cols);
    if (n.grad.size() == g.size())
        g.data = n.grad;
    return g;
}

// --- elementwise ------------------------------------------------------------

Var Tape::add(Var a, Var b) {
    check_same_shape(a, b, "add");
    Matrix y = node(a).value;
    const auto &bv = node(b).value.data;
    for (std::size_t i = 0; i < y.size(); ++i)
        y.data[i] += bv[i];
    return binary(Op::Add, a, b, std::move(y));
}

Var Tape::sub(Var a, Var b) {
    check_same_shape(a, b, "sub");
    Matrix y = node(a).value;
    const auto &bv = node(b).value.data;
    for (std::size_t i = 0; i < y.size(); ++i)
        y.data[i] -= bv[i];
    return binary(Op::Sub, a, b, std::move(y));
}

Var Tape::mul(Var a, Var b) {
    check_same_shape(a, b, "mul");
    Matrix y = node(a).value;
    const auto &bv = node(b).value.data;
    for (std::size_t i = 0; i < y.size(); ++i)
        y.data[i] *= bv[i];
    return binary(Op::Mul, a, b, std::move(y));
}

Var Tape::div(Var a, Var b) {
    check_same_shape(a, b, "div");
    Matrix y = node(a).value;
    const auto &bv = node(b).value.data;
    for (std::size_t i = 0; i < y.size(); ++i)
        y.data[i] /= bv[i];
    return binary(Op::Div, a, b, std::move(y));
}

Var Tape::add_scalar(Var a, double s) {
    Matrix y = node(a).value;
    for (auto &x : y.data)
        x += s;
    Var v = unary(Op::AddScalar, a, std::move(y));
    nodes_[v.id].scalar = s;
    return v;
}

Var Tape::mul_scalar(Var a, double s) {
    Matrix y = node(a).value;
    for (auto &x : y.data)
        x *= s;
    Var v = unary(Op::MulScalar, a, std::move(y));
    nodes_[v.id].scalar = s;
    return v;
}

#define RAYMIX_ELEMENTWISE(NAME, OP, EXPR)                                                                             \
    Var Tape::NAME(Var a) {                                                                                            \
        Matrix y = node(a).value;                                                                                      \
        for (auto &x : y.data)                                                                                         \
            x = (EXPR);                                                                                                \
        return unary(Op::OP, a, std::move(y));                                                                         \
    }

RAYMIX_ELEMENTWISE(square, Square, x *x)
RAYMIX_ELEMENTWISE(exp, Exp, std::exp(x))
RAYMIX_ELEMENTWISE(log, Log, std::log(x))
RAYMIX_ELEMENTWISE(abs, Abs, std::fabs(x))
RAYMIX_ELEMENTWISE(relu, Relu, x > 0.0 ? x : 0.0)
RAYMIX_ELEMENTWISE(sigmoid, Sigmoid, logistic(x))
RAYMIX_ELEMENTWISE(softplus, Softplus, stable_softplus(x))
RAYMIX_ELEMENTWISE(one_minus_exp_neg, OneMinusExpNeg, -std::expm1(-x))

#undef RAYMIX_ELEMENTWISE

Var Tape::stop_gradient(Var a) {
    Var v = unary(Op::StopGradient, a, node(a).value);
    nodes_[v.id].needs_grad = false;
    return v;
}

// --- dense layer ------------------------------------------------------------

Var Tape::linear(Var x, Var w, Var b) {
    const Matrix &xv = node(x).value;
    const Matrix &wv = node(w).value;
    const Matrix &bv = node(b).value;
    if (xv.cols != wv.cols || bv.size() != wv.rows)
        throw DomainError("linear: incompatible shapes x " + shape_str(xv) + ", W " + shape_str(wv) + ", b " +
                          shape_str(bv));
    Matrix y(xv.rows, wv.rows);
    for (std::size_t r = 0; r < y.rows; ++r)
        std::copy(bv.data.begin(), bv.data.end(), y.row(r));
    simd::active().gemm_nt(xv.data.data(), wv.data.data(), y.data.data(), xv.rows, xv.cols, wv.rows);
    Node n;
    n.op = Op::Linear;
    n.in0 = x.id;
    n.in1 = w.id;
    n.in2 = b.id;
    n.needs_grad = node(x).needs_grad || node(w).needs_grad || node(b).needs_grad;
    n.value = std::move(y);
    return push(std::move(n));
}

// --- shapes -----------------------------------------------------------------

Var Tape::broadcast_cols(Var column, std::size_t cols) {
    const Matrix &c = node(column).value;
    if (c.cols != 1)
        throw DomainError("broadcast_cols: input must be a column, got " + shape_str(c));
    Matrix y(c.rows, cols);
    for (std::size_t r = 0; r < c.rows; ++r)
        std::fill(y.row(r), y.row(r) + cols, c.data[r]);
    return unary(Op::BroadcastCols, column, std::move(y));
}

Var Tape::slice_cols(Var a, std::size_t begin, std::size_t end) {
    const Matrix &x = node(a).value;
    if (begin >= end || end > x.cols)
        throw DomainError("slice_cols: bad column range");
    Matrix y(x.rows, end - begin);
    for (std::size_t r = 0; r < x.rows; ++r)
        std::copy(x.row(r) + begin, x.row(r) + end, y.row(r));
    Var v = unary(Op::SliceCols, a, std::move(y));
    nodes_[v.id].aux = begin;
    return v;
}

Var Tape::concat_cols(Var a, Var b) {
    const Matrix &x = node(a).value;
    const Matrix &z = node(b).value;
    if (x.rows != z.rows)
        throw DomainError("concat_cols: row count mismatch");
    Matrix y(x.rows, x.cols + z.cols);
    for (std::size_t r = 0; r < x.rows; ++r) {
        std::copy(x.row(r), x.row(r) + x.cols, y.row(r));
        std::copy(z.row(r), z.row(r) + z.cols, y.row(r) + x.cols);
    }
    return binary(Op::ConcatCols, a, b, std::move(y));
}

Var Tape::reshape(Var a, std::size_t rows, std::size_t cols) {
    const Matrix &x = node(a).value;
    if (rows * cols != x.size())
        throw DomainError("reshape: element count mismatch");
    Matrix y = x;
    y.rows = rows;
    y.cols = cols;
    return unary(Op::Reshape, a, std::move(y));
}

// --- reductions -------------------------------------------------------------

Var Tape::row_sum(Var a) {
    const Matrix &x = node(a).value;
    Matrix y(x.rows, 1);
    for (std::size_t r = 0; r < x.rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < x.cols; ++c)
            s += x(r, c);
        y.data[r] = s;
    }
    return unary(Op::RowSum, a, std::move(y));
}

Var Tape::sum(Var a) {
    double s = 0.0;
    for (double x : node(a).value.data)
        s += x;
    return unary(Op::Sum, a, Matrix::scalar(s));
}

Var Tape::mean(Var a) {
    const Matrix &x = node(a).value;
    if (x.size() == 0)
        throw DomainError("mean of an empty matrix");
    double s = 0.0;
    for (double v : x.data)
        s += v;
    return unary(Op::Mean, a, Matrix::scalar(s / static_cast<double>(x.size())));
}

Var Tape::row_norm(Var a) {
    const Matrix &x = node(a).value;
    Matrix y(x.rows, 1);
    for (std::size_t r = 0; r < x.rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < x.cols; ++c)
            s += x(r, c) * x(r, c);
        y.data[r] = std::sqrt(s);
    }
    return unary(Op::RowNorm, a, std::move(y));
}

Var Tape::exclusive_cumsum_rows(Var a) {
    const Matrix &x = node(a).value;
    Matrix y(x.rows, x.cols);
    for (std::size_t r = 0; r < x.rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < x.cols; ++c) {
            y(r, c) = s;
            s += x(r, c);
        }
    }
    return unary(Op::ExclusiveCumsumRows, a, std::move(y));
}

Var Tape::normalize_rows(Var a, double eps_sum) {
    const Matrix &x = node(a).value;
    Matrix y(x.rows, x.cols);
    for (std::size_t r = 0; r < x.rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < x.cols; ++c)
            s += x(r, c);
        if (s < eps_sum) {
            std::fill(y.row(r), y.row(r) + x.cols, 1.0 / static_cast<double>(x.cols));
        } else {
            for (std::size_t c = 0; c < x.cols; ++c)
                y(r, c) = x(r, c) / s;
        }
    }
    Var v = unary(Op::NormalizeRows, a, std::move(y));
    nodes_[v.id].scalar = eps_sum;
    return v;
}

Var Tape::weighted_logsumexp_rows(Var p, Var f) {
    check_same_shape(p, f, "weighted_logsumexp_rows");
    const Matrix &pv = node(p).value;
    const Matrix &fv = node(f).value;
    Matrix y(pv.rows, 1);
    for (std::size_t r = 0; r < pv.rows; ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < pv.cols; ++c)
            if (pv(r, c) > 0.0)
                mx = std::max(mx, fv(r, c));
        if (!std::isfinite(mx)) {
            y.data[r] = mx;
            continue;
        }
        double s = 0.0;
        for (std::size_t c = 0; c < pv.cols; ++c)
            if (pv(r, c) > 0.0)
                s += pv(r, c) * std::exp(fv(r, c) - mx);
        y.data[r] = mx + std::log(s);
    }
    return binary(Op::WeightedLogSumExpRows, p, f, std::move(y));
}

// --- backward ---------------------------------------------------------------

std::vector<double> &Tape::grad_buffer(std::uint32_t id) {
    Node &n = nodes_[id];
    if (n.grad.size() != n.value.size())
        n.grad.assign(n.value.size(), 0.0);
    return n.grad;
}

void Tape::backward(Var loss, std::span<double> param_grads) {
    if (loss.id >= nodes_.size())
        throw DomainError("backward: unknown loss node");
    const Matrix &lv = nodes_[loss.id].value;
    if (lv.rows != 1 || lv.cols != 1)
        throw DomainError("backward: loss must be a 1x1 scalar, got " + shape_str(lv));
    for (auto &n : nodes_)
        n.grad.clear();
    grad_buffer(loss.id)[0] = 1.0;
    for (std::uint32_t id = loss.id + 1; id-- > 0;) {
        Node &n = nodes_[id];
        if (!n.needs_grad || n.grad.empty())
            continue;
        backward_node(id, param_grads);
    }
}

void Tape::backward_node(std::uint32_t id, std::span<double> param_grads) {
    Node &n = nodes_[id];
    const std::vector<double> &gy = n.grad;
    const std::vector<double> &y = n.value.data;
    const std::size_t count = gy.size();

    auto input_grad = [&](std::uint32_t in) -> double * {
        if (!nodes_[in].needs_grad)
            return nullptr;
        return grad_buffer(in).data();
    };

    switch (n.op) {
    case Op::Constant:
    case Op::StopGradient:
        break;
    case Op::Parameter: {
        if (n.aux + count > param_grads.size())
            throw DomainError("backward: parameter gradient buffer too small");
        for (std::size_t i = 0; i < count; ++i)
            param_grads[n.aux + i] += gy[i];
        break;
    }
    case Op::Add:
    case Op::Sub: {
        const double sign = n.op == Op::Add ? 1.0 : -1.0;
        if (double *ga = input_grad(n.in0))
            for (std::size_t i = 0; i < count; ++i)
                ga[i] += gy[i];
        if (double *gb = input_grad(n.in1))
            for (std::size_t i = 0; i < count; ++i)
                gb[i] += sign * gy[i];
        break;
    }
    case Op::Mul: {
        const auto &a = nodes_[n.in0].value.data;
        const auto &b = nodes_[n.in1].value.data;
        if (double *ga = input_grad(n.in0))
            for (std::size_t i = 0; i < count; ++i)
                ga[i] += gy[i] * b[i];
        if (double *gb = input_grad(n.in1))
            for (std::size_t i = 0; i < count; ++i)
                gb[i] += gy[i] * a[i];
        break;
    }
    case Op::Div: {
        const auto &b = nodes_[n.in1].value.data;
        if (double *ga = input_grad(n.in0))
            for (std::size_t i = 0; i < count; ++i)
                ga[i] += gy[i] / b[i];
        if (double *gb = input_grad(n.in1))
            for (std::size_t i = 0; i < count; ++i)
                gb[i] -= gy[i] * y[i] / b[i];
        break;
    }
    case Op::AddScalar:
    case Op::MulScalar: {
        const double k = n.op == Op::MulScalar ? n.scalar : 1.0;
        if (double *ga = input_grad(n.in0))
            for (std::size_t i = 0; i < count; ++i)
                ga[i] += k * gy[i];
        break;
    }
    case Op::Square:
    case Op::Exp:
    case Op::Log:
    case Op::Abs:
    case Op::Relu:
    case Op::Sigmoid:
    case Op::Softplus:
    case Op::OneMinusExpNeg: {
        double *ga = input_grad(n.in0);
        if (!ga)
            break;
        const auto &x = nodes_[n.in0].value.data;
        for (std::size_t i = 0; i < count; ++i) {
            double d = 0.0;
            switch (n.op) {
            case Op::Square:
                d = 2.0 * x[i];
                break;
            case Op::Exp:
                d = y[i];
                break;
            case Op::Log:
                d = 1.0 / x[i];
                break;
            case Op::Abs:
                d = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
                break;
            case Op::Relu:
                d = x[i] > 0.0 ? 1.0 : 0.0;
                break;
            case Op::Sigmoid:
                d = y[i] * (1.0 - y[i]);
                break;
            case Op::Softplus:
                d = logistic(x[i]);
                break;
            case Op::OneMinusExpNeg:
                d = std::exp(-x[i]);
                break;
            default:
                break;
            }
            ga[i] += gy[i] * d;
        }
        break;
    }
    case Op::Linear: {
        const Matrix &x = nodes_[n.in0].value;
        const Matrix &w = nodes_[n.in1].value;
        const auto &k = simd::active();
        if (double *gx = input_grad(n.in0))
            k.gemm_nn(gy.data(), w.data.data(), gx, x.rows, w.rows, w.cols);
        if (double *gw = input_grad(n.in1))
            k.gemm_tn(gy.data(), x.data.data(), gw, x.rows, w.rows, w.cols);
        if (double *gb = input_grad(n.in2))
            for (std::size_t r = 0; r < x.rows; ++r)
                for (std::size_t c = 0; c < w.rows; ++c)
                    gb[c] += gy[r * w.rows + c];
        break;
    }
    case Op::BroadcastCols: {
        if (double *ga = input_grad(n.in0)) {
            const std::size_t cols = n.value.cols;
            for (std::size_t r = 0; r < n.value.rows; ++r)
                for (std::size_t c = 0; c < cols; ++c)
                    ga[r] += gy[r * cols + c];
        }
        break;
    }
    case Op::SliceCols: {
        if (double *ga = input_grad(n.in0)) {
            const std::size_t in_cols = nodes_[n.in0].value.cols;
            const std::size_t cols = n.value.cols;
            for (std::size_t r = 0; r < n.value.rows; ++r)
                for (std::size_t c = 0; c < cols; ++c)
                    ga[r * in_cols + n.aux + c] += gy[r * cols + c];
        }
        break;
    }
    case Op::ConcatCols: {
        const std::size_t ca = nodes_[n.in0].value.cols;
        const std::size_t cb = nodes_[n.in1].value.cols;
        const std::size_t cols = n.value.cols;
        double *ga = input_grad(n.in0);
        double *gb = input_grad(n.in1);
        for (std::size_t r = 0; r < n.value.rows; ++r) {
            if (ga)
                for (std::size_t c = 0; c < ca; ++c)
                    ga[r * ca + c] += gy[r * cols + c];
            if (gb)
                for (std::size_t c = 0; c < cb; ++c)
                    gb[r * cb + c] += gy[r * cols + ca + c];
        }
        break;
    }
    case Op::Reshape: {
        if (double *ga = input_grad(n.in0))
            for (std::size_t i = 0; i < count; ++i)
                ga[i] += gy[i];
        break;
    }
    case Op::RowSum: {
        if (double *ga = input_grad(n.in0)) {
            const std::size_t cols = nodes_[n.in0].value.cols;
            for (std::size_t r = 0; r < n.value.rows; ++r)
                for (std::size_t c = 0; c < cols; ++c)
                    ga[r * cols + c] += gy[r];
        }
        break;
    }
    case Op::Sum:
    case Op::Mean: {
        if (double *ga = input_grad(n.in0)) {
            const std::size_t in = nodes_[n.in0].value.size();
            const double g = n.op == Op::Sum ? gy[0] : gy[0] / static_cast<double>(in);
            for (std::size_t i = 0; i < in; ++i)
                ga[i] += g;
        }
        break;
    }
    case Op::RowNorm: {
        if (double *ga = input_grad(n.in0)) {
            const Matrix &x = nodes_[n.in0].value;
            for (std::size_t r = 0; r < x.rows; ++r) {
                if (y[r] == 0.0)
                    continue;
                const double s = gy[r] / y[r];
                for (std::size_t c = 0; c < x.cols; ++c)
                    ga[r * x.cols + c] += s * x(r, c);
            }
        }
        break;
    }
    case Op::ExclusiveCumsumRows: {
        if (double *ga = input_grad(n.in0)) {
            const std::size_t cols = n.value.cols;
            for (std::size_t r = 0; r < n.value.rows; ++r) {
                double suffix = 0.0;
                for (std::size_t c = cols; c-- > 0;) {
                    ga[r * cols + c] += suffix;
                    suffix += gy[r * cols + c];
                }
            }
        }
        break;
    }
    case Op::NormalizeRows: {
        if (double *ga = input_grad(n.in0)) {
            const Matrix &x = nodes_[n.in0].value;
            for (std::size_t r = 0; r < x.rows; ++r) {
                double s = 0.0;
                for (std::size_t c = 0; c < x.cols; ++c)
                    s += x(r, c);
                if (s < n.scalar)
                    continue;
                double dot = 0.0;
                for (std::size_t c = 0; c < x.cols; ++c)
                    dot += gy[r * x.cols + c] * y[r * x.cols + c];
                for (std::size_t c = 0; c < x.cols; ++c)
                    ga[r * x.cols + c] += (gy[r * x.cols + c] - dot) / s;
            }
        }
        break;
    }
    case Op::WeightedLogSumExpRows: {
        const Matrix &p = nodes_[n.in0].value;
        const Matrix &f = nodes_[n.in1].value;
        double *gp = input_grad(n.in0);
        double *gf = input_grad(n.in1);
        for (std::size_t r = 0; r < p.rows; ++r) {
            if (!std::isfinite(y[r]))
                continue;
            for (std::size_t c = 0; c < p.cols; ++c) {
                const std::size_t i = r * p.cols + c;
                // d/dp_j = exp(f_j - y); capped so an empty component cannot overflow.
                const double e = std::exp(std::min(f.data[i] - y[r], 700.0));
                if (gp)
                    gp[i] += gy[r] * e;
                if (gf && p.data[i] > 0.0)
                    gf[i] += gy[r] * p.data[i] * e;
            }
        }
        break;
    }
    }
}

} // namespace raymix::ad
