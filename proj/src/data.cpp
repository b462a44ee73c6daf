// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/data.hpp"

#include "raymix/error.hpp"
#include "raymix/fileio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace raymix::data {
namespace fs = std::filesystem;
using nlohmann::json;

Vec3 background_color(Background b) { return b == Background::White ? Vec3::Ones() : Vec3::Zero(); }

void Manifest::validate() const {
    if (frames.empty())
        throw DataError("manifest has no frames");
    if (!(std::isfinite(camera_angle_x) && camera_angle_x > 0.0 && camera_angle_x < std::numbers::pi))
        throw DataError("manifest camera_angle_x must lie in (0, pi)");
    if (!(std::isfinite(near) && std::isfinite(far) && near >= 0.0 && near < far))
        throw DataError("manifest needs 0 <= near < far");
    if (width < 0 || height < 0)
        throw DataError("manifest image size must be positive");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (!frames[i].pose.allFinite())
            throw DataError("non-finite pose", static_cast<long>(i));
        if (frames[i].file_path.empty())
            throw DataError("frame without file_path", static_cast<long>(i));
    }
}

Manifest load_manifest(const fs::path &path) {
    json j;
    try {
        j = json::parse(io::read_file(path));
    } catch (const std::exception &e) {
        throw DataError("cannot parse manifest " + path.string() + ": " + e.what());
    }
    Manifest m;
    try {
        m.camera_angle_x = j.at("camera_angle_x").get<double>();
        m.near = j.value("near", m.near);
        m.far = j.value("far", m.far);
        const std::string bg = j.value("background", std::string("black"));
        if (bg == "white")
            m.background = Background::White;
        else if (bg == "black")
            m.background = Background::Black;
        else
            throw DataError("unknown background '" + bg + "'");
        m.width = j.value("width", j.value("w", 0));
        m.height = j.value("height", j.value("h", 0));
        const json &frames = j.at("frames");
        for (std::size_t i = 0; i < frames.size(); ++i) {
            const json &f = frames[i];
            Frame fr;
            try {
                fr.file_path = f.at("file_path").get<std::string>();
                fr.depth_path = f.value("depth_path", std::string());
                fr.opacity_path = f.value("opacity_path", std::string());
                const json &t = f.at("transform_matrix");
                if (t.size() != 3 && t.size() != 4)
                    throw DataError("transform_matrix must have 3 or 4 rows", static_cast<long>(i));
                for (int r = 0; r < 3; ++r) {
                    if (t[r].size() != 4)
                        throw DataError("transform_matrix rows must have 4 entries", static_cast<long>(i));
                    for (int c = 0; c < 4; ++c)
                        fr.pose(r, c) = t[r][c].is_null() ? std::nan("") : t[r][c].get<double>();
                }
            } catch (const json::exception &e) {
                throw DataError(std::string("malformed frame: ") + e.what(), static_cast<long>(i));
            }
            m.frames.push_back(std::move(fr));
        }
    } catch (const json::exception &e) {
        throw DataError("malformed manifest " + path.string() + ": " + e.what());
    }
    m.validate();
    return m;
}

void save_manifest(const fs::path &path, const Manifest &m) {
    json j;
    j["camera_angle_x"] = m.camera_angle_x;
    j["near"] = m.near;
    j["far"] = m.far;
    j["background"] = m.background == Background::White ? "white" : "black";
    if (m.width > 0)
        j["width"] = m.width;
    if (m.height > 0)
        j["height"] = m.height;
    j["frames"] = json::array();
    for (const Frame &f : m.frames) {
        json t = json::array();
        for (int r = 0; r < 4; ++r) {
            json row = json::array();
            for (int c = 0; c < 4; ++c)
                row.push_back(r < 3 ? f.pose(r, c) : (c == 3 ? 1.0 : 0.0));
            t.push_back(row);
        }
        json jf{{"file_path", f.file_path}, {"transform_matrix", t}};
        if (!f.depth_path.empty())
            jf["depth_path"] = f.depth_path;
        if (!f.opacity_path.empty())
            jf["opacity_path"] = f.opacity_path;
        j["frames"].push_back(jf);
    }
    // nlohmann prints doubles with round-trip precision, so poses survive exactly.
    io::write_atomic(path, j.dump(2) + "\n");
}

double focal_from_fov(int width, double camera_angle_x) { return width / (2.0 * std::tan(0.5 * camera_angle_x)); }

namespace {

fs::path resolve_image(const fs::path &root, const std::string &file_path) {
    fs::path p = root / file_path;
    if (!p.has_extension() && !fs::exists(p))
        p += ".png";
    return p;
}

} // namespace

Scene load_scene(const fs::path &manifest_path) {
    Scene s;
    s.manifest = load_manifest(manifest_path);
    s.root = manifest_path.parent_path();
    const Vec3 bg = s.background();
    int width = s.manifest.width;
    int height = s.manifest.height;
    for (std::size_t i = 0; i < s.manifest.frames.size(); ++i) {
        const Frame &f = s.manifest.frames[i];
        const fs::path p = resolve_image(s.root, f.file_path);
        if (!fs::exists(p))
            throw DataError("missing image " + p.string(), static_cast<long>(i));
        image::Image raw;
        try {
            raw = image::read_png(p);
        } catch (const DataError &e) {
            throw DataError(e.what(), static_cast<long>(i));
        }
        if (width == 0) {
            width = raw.width;
            height = raw.height;
        }
        if (raw.width != width || raw.height != height)
            throw DataError("image is " + std::to_string(raw.width) + "x" + std::to_string(raw.height) +
                                ", expected " + std::to_string(width) + "x" + std::to_string(height),
                            static_cast<long>(i));
        View v;
        v.image = image::Image(width, height, 3);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const double a = raw.channels == 4 ? raw.at(x, y, 3) : 1.0;
                for (int c = 0; c < 3; ++c)
                    v.image.at(x, y, c) = raw.at(x, y, c) * a + bg[c] * (1.0 - a);
            }
        try {
            v.camera =
                geometry::Camera::centered(width, height, focal_from_fov(width, s.manifest.camera_angle_x), f.pose);
            v.camera.validate();
        } catch (const DomainError &e) {
            throw DataError(e.what(), static_cast<long>(i));
        }
        s.views.push_back(std::move(v));
    }
    return s;
}

ViewSplit select_views(std::size_t frame_count, std::size_t k, Protocol protocol) {
    if (k == 0)
        throw DomainError("select_views: k must be positive");
    ViewSplit split;
    if (protocol == Protocol::Synthetic) {
        if (k > frame_count)
            throw DomainError("select_views: k = " + std::to_string(k) + " exceeds " + std::to_string(frame_count) +
                              " frames");
        for (std::size_t i = 0; i < frame_count; ++i)
            (i < k ? split.train : split.test).push_back(i);
        return split;
    }
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < frame_count; ++i)
        (i % 8 == 0 ? split.test : pool).push_back(i);
    if (k > pool.size())
        throw DomainError("select_views: k = " + std::to_string(k) + " exceeds the training pool of " +
                          std::to_string(pool.size()));
    for (std::size_t i = 0; i < k; ++i) {
        const double pos = k == 1 ? 0.0
                                  : static_cast<double>(i) * static_cast<double>(pool.size() - 1) /
                                        static_cast<double>(k - 1);
        split.train.push_back(pool[static_cast<std::size_t>(std::llround(pos))]);
    }
    return split;
}

namespace {

fs::path sidecar(const fs::path &png_path) {
    fs::path p = png_path;
    p.replace_extension(".json");
    return p;
}

} // namespace

void write_depth(const fs::path &png_path, const DepthMap &d, double max_depth) {
    if (!(max_depth > 0.0) || !std::isfinite(max_depth))
        throw DomainError("write_depth: max_depth must be positive");
    const double scale = max_depth / 65535.0;
    image::Gray16 g;
    g.width = d.width;
    g.height = d.height;
    g.data.resize(d.depth.size());
    for (std::size_t i = 0; i < d.depth.size(); ++i) {
        const double q = std::round(std::clamp(d.depth[i], 0.0, max_depth) / scale);
        g.data[i] = static_cast<std::uint16_t>(q);
    }
    image::write_png16(png_path, g);
    const json meta{{"scale", scale}, {"description", "depth = value * scale, distance along the ray"}};
    io::write_atomic(sidecar(png_path), meta.dump(2) + "\n");
}

DepthMap read_depth(const fs::path &png_path) {
    const image::Gray16 g = image::read_png16(png_path);
    double scale = 0.0;
    try {
        scale = json::parse(io::read_file(sidecar(png_path))).at("scale").get<double>();
    } catch (const std::exception &e) {
        throw DataError("depth sidecar for " + png_path.string() + ": " + e.what());
    }
    DepthMap d;
    d.width = g.width;
    d.height = g.height;
    d.depth.resize(g.data.size());
    for (std::size_t i = 0; i < g.data.size(); ++i)
        d.depth[i] = g.data[i] * scale;
    return d;
}

void write_opacity(const fs::path &png_path, int width, int height, const std::vector<double> &acc) {
    image::Gray16 g;
    g.width = width;
    g.height = height;
    g.data.resize(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i)
        g.data[i] = static_cast<std::uint16_t>(std::round(std::clamp(acc[i], 0.0, 1.0) * 65535.0));
    image::write_png16(png_path, g);
}

std::vector<double> read_opacity(const fs::path &png_path) {
    const image::Gray16 g = image::read_png16(png_path);
    std::vector<double> acc(g.data.size());
    for (std::size_t i = 0; i < acc.size(); ++i)
        acc[i] = g.data[i] / 65535.0;
    return acc;
}

} // namespace raymix::data
