// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace raymix {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for the stream identified by a tuple of integers, e.g. (seed, step, ray).
inline std::uint64_t stream_seed(std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (auto k : keys)
        h = mix_seed(h ^ mix_seed(k));
    return h;
}

inline Rng make_stream(std::initializer_list<std::uint64_t> keys) { return Rng(stream_seed(keys)); }

/// Uniform double in [0, 1) from the top 53 bits. Unlike std::uniform_real_distribution
/// the mapping is fixed, so streams are reproducible across standard libraries.
inline double uniform01(Rng &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng &rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Uniform integer in [0, n); n must be positive.
inline std::uint64_t uniform_index(Rng &rng, std::uint64_t n) {
    // Lemire's multiply-shift; the bias is below 2^-64 * n and irrelevant here.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

} // namespace raymix
