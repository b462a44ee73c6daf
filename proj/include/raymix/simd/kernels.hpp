// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace raymix::simd {

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend b);

/// Hyper-parameters of one bias-corrected Adam update.
struct AdamCoefficients {
    double step_size;  ///< lr / (1 - beta1^t)
    double beta1;
    double beta2;
    double bias_correction2;  ///< 1 - beta2^t
    double eps;
};

/// Dense double-precision kernels behind the network layers and the optimizer.
/// All matrices are row-major and densely packed.
struct Kernels {
    Backend backend;

    double (*dot)(const double *a, const double *b, std::size_t n);
    /// y += alpha * x
    void (*axpy)(double alpha, const double *x, double *y, std::size_t n);
    /// C[n x o] += A[n x k] * B[o x k]^T
    void (*gemm_nt)(const double *a, const double *b, double *c, std::size_t n, std::size_t k, std::size_t o);
    /// C[n x k] += A[n x o] * B[o x k]
    void (*gemm_nn)(const double *a, const double *b, double *c, std::size_t n, std::size_t o, std::size_t k);
    /// C[o x k] += A[n x o]^T * B[n x k]
    void (*gemm_tn)(const double *a, const double *b, double *c, std::size_t n, std::size_t o, std::size_t k);
    /// In-place Adam update of `param` from `grad`, updating moments `m` and `v`.
    void (*adam)(double *param, const double *grad, double *m, double *v, std::size_t n,
                 const AdamCoefficients &coef);
};

const Kernels &scalar_kernels();

/// Backends usable on this CPU, scalar first.
std::vector<Backend> available_backends();

/// Kernel table for a given backend; throws DomainError if unavailable here.
const Kernels &kernels_for(Backend b);

/// Kernel table chosen once per process: the widest backend the CPU supports,
/// unless RAYMIX_SIMD=scalar is set in the environment.
const Kernels &active();

} // namespace raymix::simd
