// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "raymix/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace raymix::image {

using geometry::Vec3;

/// Interleaved row-major floating point image, values nominally in [0, 1].
struct Image {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

    std::size_t index(int x, int y, int c = 0) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    double &at(int x, int y, int c) { return data[index(x, y, c)]; }
    double at(int x, int y, int c) const { return data[index(x, y, c)]; }
    Vec3 rgb(int x, int y) const { return {at(x, y, 0), at(x, y, 1), at(x, y, 2)}; }
    void set_rgb(int x, int y, const Vec3 &c) {
        for (int k = 0; k < 3; ++k)
            at(x, y, k) = c[k];
    }
    std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
};

/// 8-bit PNG, mapped linearly to [0, 1]. Gray inputs are expanded to RGB; an alpha
/// channel is kept as a fourth channel. Throws DataError on unreadable or 16-bit color files.
Image read_png(const std::filesystem::path &path);

/// 8-bit PNG with 1, 3 or 4 channels; values are clamped to [0, 1] and rounded. Atomic.
void write_png(const std::filesystem::path &path, const Image &img);

struct Gray16 {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> data;
};

/// Single-channel 16-bit PNG, values stored verbatim. Atomic.
void write_png16(const std::filesystem::path &path, const Gray16 &img);
Gray16 read_png16(const std::filesystem::path &path);

/// Byte quantization used by write_png.
inline std::uint8_t to_byte(double v) {
    const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return static_cast<std::uint8_t>(c * 255.0 + 0.5);
}

} // namespace raymix::image
