// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/simd/kernels.hpp"

#include <cmath>

namespace raymix::simd {
namespace {

double dot(const double *a, const double *b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const double *x, double *y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        y[i] += alpha * x[i];
}

void gemm_nt(const double *a, const double *b, double *c, std::size_t n, std::size_t k, std::size_t o) {
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < o; ++j)
            c[r * o + j] += dot(a + r * k, b + j * k, k);
}

void gemm_nn(const double *a, const double *b, double *c, std::size_t n, std::size_t o, std::size_t k) {
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < o; ++j)
            axpy(a[r * o + j], b + j * k, c + r * k, k);
}

void gemm_tn(const double *a, const double *b, double *c, std::size_t n, std::size_t o, std::size_t k) {
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < o; ++j)
            axpy(a[r * o + j], b + r * k, c + j * k, k);
}

void adam(double *param, const double *grad, double *m, double *v, std::size_t n, const AdamCoefficients &coef) {
    const double one_minus_b1 = 1.0 - coef.beta1;
    const double one_minus_b2 = 1.0 - coef.beta2;
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i];
        m[i] = coef.beta1 * m[i] + one_minus_b1 * g;
        v[i] = coef.beta2 * v[i] + one_minus_b2 * (g * g);
        const double denom = std::sqrt(v[i] / coef.bias_correction2) + coef.eps;
        param[i] -= coef.step_size * (m[i] / denom);
    }
}

} // namespace

const Kernels &scalar_kernels() {
    static const Kernels k{Backend::Scalar, dot, axpy, gemm_nt, gemm_nn, gemm_tn, adam};
    return k;
}

} // namespace raymix::simd
