// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

// Compiled with -mavx2 -mfma; only reached through the runtime dispatch in dispatch.cpp.

#include "raymix/simd/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace raymix::simd {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double *a, const double *b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i)
        s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const double *x, double *y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i)
        y[i] += alpha * x[i];
}

// Register-blocked product C[rows x cols] += A[rows x depth] * B[depth x cols], all
// row-major with the given leading dimensions. A tile of R rows by 4V columns of C
// stays in registers while the reduction runs over one depth block.
template <int R, int V>
inline void tile(const double *a, std::size_t lda, const double *b, std::size_t ldb, double *c, std::size_t ldc,
                 std::size_t p0, std::size_t p1) {
    __m256d acc[R][V];
    for (int q = 0; q < R; ++q)
        for (int v = 0; v < V; ++v)
            acc[q][v] = _mm256_loadu_pd(c + q * ldc + 4 * v);
    for (std::size_t p = p0; p < p1; ++p) {
        __m256d bv[V];
        for (int v = 0; v < V; ++v)
            bv[v] = _mm256_loadu_pd(b + p * ldb + 4 * v);
        for (int q = 0; q < R; ++q) {
            const __m256d av = _mm256_broadcast_sd(a + q * lda + p);
            for (int v = 0; v < V; ++v)
                acc[q][v] = _mm256_fmadd_pd(av, bv[v], acc[q][v]);
        }
    }
    for (int q = 0; q < R; ++q)
        for (int v = 0; v < V; ++v)
            _mm256_storeu_pd(c + q * ldc + 4 * v, acc[q][v]);
}

template <int R>
inline void row_block(const double *a, std::size_t lda, const double *b, std::size_t ldb, double *c,
                      std::size_t ldc, std::size_t cols, std::size_t p0, std::size_t p1) {
    std::size_t i = 0;
    for (; i + 8 <= cols; i += 8)
        tile<R, 2>(a, lda, b + i, ldb, c + i, ldc, p0, p1);
    for (; i + 4 <= cols; i += 4)
        tile<R, 1>(a, lda, b + i, ldb, c + i, ldc, p0, p1);
    for (; i < cols; ++i)
        for (int q = 0; q < R; ++q) {
            double s = c[q * ldc + i];
            for (std::size_t p = p0; p < p1; ++p)
                s += a[q * lda + p] * b[p * ldb + i];
            c[q * ldc + i] = s;
        }
}

void product(const double *a, std::size_t lda, const double *b, std::size_t ldb, double *c, std::size_t ldc,
             std::size_t rows, std::size_t cols, std::size_t depth) {
    constexpr std::size_t kDepthBlock = 256;
    for (std::size_t p0 = 0; p0 < depth; p0 += kDepthBlock) {
        const std::size_t p1 = std::min(depth, p0 + kDepthBlock);
        std::size_t r = 0;
        for (; r + 4 <= rows; r += 4)
            row_block<4>(a + r * lda, lda, b, ldb, c + r * ldc, ldc, cols, p0, p1);
        for (; r < rows; ++r)
            row_block<1>(a + r * lda, lda, b, ldb, c + r * ldc, ldc, cols, p0, p1);
    }
}

// dst[cols x rows] = src[rows x cols]^T
void transpose(const double *src, std::size_t rows, std::size_t cols, std::vector<double> &dst) {
    dst.resize(rows * cols);
    constexpr std::size_t kBlock = 32;
    for (std::size_t r0 = 0; r0 < rows; r0 += kBlock)
        for (std::size_t c0 = 0; c0 < cols; c0 += kBlock)
            for (std::size_t r = r0; r < std::min(rows, r0 + kBlock); ++r)
                for (std::size_t j = c0; j < std::min(cols, c0 + kBlock); ++j)
                    dst[j * rows + r] = src[r * cols + j];
}

thread_local std::vector<double> pack_buffer;

void gemm_nt(const double *a, const double *b, double *c, std::size_t n, std::size_t k, std::size_t o) {
    transpose(b, o, k, pack_buffer);
    product(a, k, pack_buffer.data(), o, c, o, n, o, k);
}

void gemm_nn(const double *a, const double *b, double *c, std::size_t n, std::size_t o, std::size_t k) {
    product(a, o, b, k, c, k, n, k, o);
}

void gemm_tn(const double *a, const double *b, double *c, std::size_t n, std::size_t o, std::size_t k) {
    transpose(a, n, o, pack_buffer);
    product(pack_buffer.data(), n, b, k, c, k, o, k, n);
}

// Same operation order as the scalar kernel and no FMA, so results are bitwise equal.
void adam(double *param, const double *grad, double *m, double *v, std::size_t n, const AdamCoefficients &coef) {
    const double one_minus_b1 = 1.0 - coef.beta1;
    const double one_minus_b2 = 1.0 - coef.beta2;
    const __m256d b1 = _mm256_set1_pd(coef.beta1);
    const __m256d b2 = _mm256_set1_pd(coef.beta2);
    const __m256d omb1 = _mm256_set1_pd(one_minus_b1);
    const __m256d omb2 = _mm256_set1_pd(one_minus_b2);
    const __m256d bc2 = _mm256_set1_pd(coef.bias_correction2);
    const __m256d eps = _mm256_set1_pd(coef.eps);
    const __m256d step = _mm256_set1_pd(coef.step_size);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d g = _mm256_loadu_pd(grad + i);
        const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(omb1, g));
        const __m256d vi =
            _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)), _mm256_mul_pd(omb2, _mm256_mul_pd(g, g)));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_div_pd(vi, bc2)), eps);
        const __m256d upd = _mm256_mul_pd(step, _mm256_div_pd(mi, denom));
        _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), upd));
    }
    for (; i < n; ++i) {
        const double g = grad[i];
        m[i] = coef.beta1 * m[i] + one_minus_b1 * g;
        v[i] = coef.beta2 * v[i] + one_minus_b2 * (g * g);
        const double denom = std::sqrt(v[i] / coef.bias_correction2) + coef.eps;
        param[i] -= coef.step_size * (m[i] / denom);
    }
}

} // namespace

const Kernels &avx2_kernels() {
    static const Kernels k{Backend::Avx2, dot, axpy, gemm_nt, gemm_nn, gemm_tn, adam};
    return k;
}

} // namespace raymix::simd
