// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/error.hpp"
#include "raymix/simd/kernels.hpp"

#include <cstdlib>
#include <string>

namespace raymix::simd {

#ifdef RAYMIX_HAVE_AVX2
const Kernels &avx2_kernels();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(RAYMIX_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

} // namespace

std::string_view backend_name(Backend b) {
    switch (b) {
    case Backend::Scalar:
        return "scalar";
    case Backend::Avx2:
        return "avx2";
    }
    return "unknown";
}

std::vector<Backend> available_backends() {
    std::vector<Backend> out{Backend::Scalar};
    if (cpu_has_avx2())
        out.push_back(Backend::Avx2);
    return out;
}

const Kernels &kernels_for(Backend b) {
    switch (b) {
    case Backend::Scalar:
        return scalar_kernels();
    case Backend::Avx2:
#ifdef RAYMIX_HAVE_AVX2
        if (cpu_has_avx2())
            return avx2_kernels();
#endif
        break;
    }
    throw DomainError("SIMD backend '" + std::string(backend_name(b)) + "' is not available on this machine");
}

const Kernels &active() {
    static const Kernels &chosen = [] () -> const Kernels & {
        const char *env = std::getenv("RAYMIX_SIMD");
        if (env && std::string(env) == "scalar")
            return scalar_kernels();
        return cpu_has_avx2() ? kernels_for(Backend::Avx2) : scalar_kernels();
    }();
    return chosen;
}

} // namespace raymix::simd
