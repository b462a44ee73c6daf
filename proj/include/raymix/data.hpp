// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "raymix/geometry.hpp"
#include "raymix/image.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace raymix::data {

using geometry::Pose;
using geometry::Vec3;

enum class Background { Black, White };

Vec3 background_color(Background b);

struct Frame {
    /// Image path relative to the manifest directory. A missing extension means ".png".
    std::string file_path;
    Pose pose;  ///< camera-to-world
    /// Optional 16-bit depth map; its scale sits in a sidecar JSON next to it.
    std::string depth_path;
    /// Optional 16-bit opacity map (value / 65535).
    std::string opacity_path;
};

/// Scene description:
///   camera_angle_x  horizontal field of view, radians, shared by all frames
///   near, far       ray bounds in units of the camera z axis
///   background      "black" | "white"
///   width, height   optional declared image size; checked against every image
///   frames          [{file_path, transform_matrix (3x4 or 4x4 rows), depth_path?, opacity_path?}]
struct Manifest {
    double camera_angle_x = 0.0;
    double near = 2.0;
    double far = 6.0;
    Background background = Background::Black;
    int width = 0;
    int height = 0;
    std::vector<Frame> frames;

    /// Throws DataError.
    void validate() const;
};

/// Throws DataError (with frame index where relevant).
Manifest load_manifest(const std::filesystem::path &path);
void save_manifest(const std::filesystem::path &path, const Manifest &m);

/// Pinhole focal length from the horizontal field of view.
double focal_from_fov(int width, double camera_angle_x);

struct View {
    geometry::Camera camera;
    image::Image image;  ///< RGB, alpha already composited over the background
};

struct Scene {
    Manifest manifest;
    std::filesystem::path root;
    std::vector<View> views;

    Vec3 background() const { return background_color(manifest.background); }
};

/// Loads every frame. Throws DataError naming the frame for a missing image, a
/// dimension mismatch or a non-finite pose.
Scene load_scene(const std::filesystem::path &manifest_path);

enum class Protocol {
    /// First k frames train; the remaining frames are held out.
    Synthetic,
    /// Every 8th frame is held out; k frames evenly spaced over the rest train.
    ForwardFacing,
};

struct ViewSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Throws DomainError if k is zero or exceeds the available frames.
ViewSplit select_views(std::size_t frame_count, std::size_t k, Protocol protocol);

/// Depth sidecar: depth = value * scale.
struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<double> depth;
};

void write_depth(const std::filesystem::path &png_path, const DepthMap &d, double max_depth);
DepthMap read_depth(const std::filesystem::path &png_path);

void write_opacity(const std::filesystem::path &png_path, int width, int height, const std::vector<double> &acc);
std::vector<double> read_opacity(const std::filesystem::path &png_path);

} // namespace raymix::data
