// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "raymix/data.hpp"
#include "raymix/geometry.hpp"
#include "raymix/image.hpp"
#include "raymix/rng.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace raymix::synth {

using geometry::Vec3;

enum class Shape { Sphere, Box };

/// Homogeneous emissive, absorbing primitive.
struct Primitive {
    Shape shape = Shape::Sphere;
    Vec3 center = Vec3::Zero();
    double radius = 0.5;                 ///< spheres
    Vec3 half_extent = Vec3::Constant(0.5);  ///< axis-aligned boxes
    double density = 1.0;                ///< per unit distance
    Vec3 color = Vec3::Constant(0.5);

    bool contains(const Vec3 &p) const;
    /// Parameter interval of `ray` inside the primitive, if any (unclipped).
    std::optional<std::pair<double, double>> intersect(const geometry::Ray &ray) const;
};

/// One ring of cameras looking at the origin, z up.
struct CameraRing {
    int count = 8;
    double radius = 4.0;
    double elevation_deg = 20.0;
    double azimuth_offset_deg = 0.0;
};

struct CameraSpec {
    int width = 64;
    int height = 64;
    double fov_deg = 40.0;
    std::vector<CameraRing> rings{CameraRing{}};
};

struct SyntheticScene {
    std::vector<Primitive> primitives;
    data::Background background = data::Background::Black;
    double near = 2.0;
    double far = 6.0;
    CameraSpec cameras;

    /// Throws DataError for negative density, colors outside [0, 1] or degenerate shapes.
    void validate() const;
    double density_at(const Vec3 &p) const;
    /// Density-weighted color of the primitives covering p (zero outside all of them).
    Vec3 color_at(const Vec3 &p) const;
};

/// Camera-to-world pose at `eye` looking at `target`; the camera looks down its -z axis.
geometry::Pose look_at(const Vec3 &eye, const Vec3 &target, const Vec3 &up = Vec3::UnitZ());

std::vector<geometry::Camera> cameras(const CameraSpec &spec);

struct GtPixel {
    Vec3 rgb = Vec3::Zero();
    double depth = 0.0;   ///< expected termination distance, normalized by opacity
    double acc = 0.0;     ///< opacity
};

/// Exact emission-absorption integral along the ray over [t_near, t_far]: the density
/// is piecewise constant between primitive boundaries, so every slab is closed form.
GtPixel render_ray_exact(const SyntheticScene &scene, const geometry::Ray &ray);

/// Quadrature of the same integral with the numeric renderer at the given samples.
GtPixel render_ray_sampled(const SyntheticScene &scene, const geometry::Ray &ray,
                           const geometry::RaySamples &samples);

/// Boundaries of the piecewise-constant density along the ray inside [t_near, t_far],
/// including both bounds.
std::vector<double> slab_boundaries(const SyntheticScene &scene, const geometry::Ray &ray);

/// Samples whose bins tile every slab with `per_slab` equal bins, so that no bin
/// straddles a density discontinuity.
geometry::RaySamples slab_aligned_samples(const SyntheticScene &scene, const geometry::Ray &ray, int per_slab);

struct GtImage {
    image::Image rgb;
    data::DepthMap depth;
    std::vector<double> acc;
};

GtImage render_synthetic_gt(const SyntheticScene &scene, const geometry::Camera &camera);

/// Random spheres and boxes around the origin, with ray bounds [2.5, 5.5] fitted to
/// cameras at distance 4. The density range keeps the per-bin optical depth small.
struct RandomSceneConfig {
    int min_primitives = 1;
    int max_primitives = 3;
    double min_density = 0.1;
    double max_density = 0.5;
};
SyntheticScene random_scene(Rng &rng, const RandomSceneConfig &cfg = {});

/// Three colored, nearly opaque spheres on a desk-sized stage, viewed by 3 spread
/// training cameras followed by 5 held-out cameras in between them.
SyntheticScene desk_scene(int resolution = 64);

SyntheticScene load_descriptor(const std::filesystem::path &path);
void save_descriptor(const std::filesystem::path &path, const SyntheticScene &scene);
std::string descriptor_json(const SyntheticScene &scene);
SyntheticScene parse_descriptor(const std::string &text);

/// Renders every camera and writes manifest.json, r_XXX.png and depth_XXX.png (+ sidecar).
data::Manifest write_scene(const SyntheticScene &scene, const std::filesystem::path &out_dir);

} // namespace raymix::synth
