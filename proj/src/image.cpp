// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/image.hpp"

#include "raymix/error.hpp"
#include "raymix/fileio.hpp"

#include <png.h>

#include <cstring>
#include <stdexcept>
#include <string>

namespace raymix::image {
namespace fs = std::filesystem;

namespace {

// The simplified libpng API reports errors through the struct instead of longjmp.
struct PngImage {
    png_image img;
    PngImage() {
        std::memset(&img, 0, sizeof(img));
        img.version = PNG_IMAGE_VERSION;
    }
    ~PngImage() { png_image_free(&img); }
    std::string message() const { return img.message; }
};

void write_raw(const fs::path &path, png_uint_32 format, int width, int height, const void *buffer) {
    io::write_atomic_with(path, [&](const fs::path &tmp) {
        PngImage p;
        p.img.width = static_cast<png_uint_32>(width);
        p.img.height = static_cast<png_uint_32>(height);
        p.img.format = format;
        if (!png_image_write_to_file(&p.img, tmp.c_str(), 0, buffer, 0, nullptr))
            throw std::runtime_error("writing " + path.string() + ": " + p.message());
    });
}

} // namespace

Image read_png(const fs::path &path) {
    PngImage p;
    if (!png_image_begin_read_from_file(&p.img, path.c_str()))
        throw DataError("cannot read PNG " + path.string() + ": " + p.message());
    if (p.img.format & PNG_FORMAT_FLAG_LINEAR)
        throw DataError("expected an 8-bit PNG: " + path.string());
    const bool alpha = (p.img.format & PNG_FORMAT_FLAG_ALPHA) != 0;
    p.img.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
    const int channels = alpha ? 4 : 3;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(p.img));
    if (!png_image_finish_read(&p.img, nullptr, buf.data(), 0, nullptr))
        throw DataError("cannot decode PNG " + path.string() + ": " + p.message());
    Image out(static_cast<int>(p.img.width), static_cast<int>(p.img.height), channels);
    for (std::size_t i = 0; i < buf.size(); ++i)
        out.data[i] = buf[i] / 255.0;
    return out;
}

void write_png(const fs::path &path, const Image &img) {
    png_uint_32 format = 0;
    switch (img.channels) {
    case 1: format = PNG_FORMAT_GRAY; break;
    case 3: format = PNG_FORMAT_RGB; break;
    case 4: format = PNG_FORMAT_RGBA; break;
    default: throw DomainError("write_png: unsupported channel count " + std::to_string(img.channels));
    }
    if (img.width < 1 || img.height < 1 || img.data.size() != img.pixels() * img.channels)
        throw DomainError("write_png: image buffer does not match its dimensions");
    std::vector<std::uint8_t> buf(img.data.size());
    for (std::size_t i = 0; i < buf.size(); ++i)
        buf[i] = to_byte(img.data[i]);
    write_raw(path, format, img.width, img.height, buf.data());
}

void write_png16(const fs::path &path, const Gray16 &img) {
    if (img.width < 1 || img.height < 1 || img.data.size() != static_cast<std::size_t>(img.width) * img.height)
        throw DomainError("write_png16: buffer does not match its dimensions");
    write_raw(path, PNG_FORMAT_LINEAR_Y, img.width, img.height, img.data.data());
}

Gray16 read_png16(const fs::path &path) {
    PngImage p;
    if (!png_image_begin_read_from_file(&p.img, path.c_str()))
        throw DataError("cannot read PNG " + path.string() + ": " + p.message());
    if (!(p.img.format & PNG_FORMAT_FLAG_LINEAR) || (p.img.format & PNG_FORMAT_FLAG_COLOR))
        throw DataError("expected a 16-bit grayscale PNG: " + path.string());
    p.img.format = PNG_FORMAT_LINEAR_Y;
    Gray16 out;
    out.width = static_cast<int>(p.img.width);
    out.height = static_cast<int>(p.img.height);
    out.data.resize(static_cast<std::size_t>(out.width) * out.height);
    if (!png_image_finish_read(&p.img, nullptr, out.data.data(), 0, nullptr))
        throw DataError("cannot decode PNG " + path.string() + ": " + p.message());
    return out;
}

} // namespace raymix::image
