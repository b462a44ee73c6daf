// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "raymix/rng.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace raymix::geometry {

using Vec3 = Eigen::Vector3d;
/// Camera-to-world rigid transform; the left 3x3 block is the rotation, the last column the camera center.
using Pose = Eigen::Matrix<double, 3, 4>;

/// Pinhole camera looking down -z with +y up and +x right in its own frame.
struct Camera {
    int width = 1;
    int height = 1;
    double focal = 1.0;
    double cx = 0.5;
    double cy = 0.5;
    Pose pose = Pose::Identity();

    /// Principal point at the image center.
    static Camera centered(int width, int height, double focal, const Pose &pose);

    Vec3 origin() const { return pose.col(3); }
    Eigen::Matrix3d rotation() const { return pose.leftCols<3>(); }

    /// Throws DomainError when focal <= 0, a dimension is < 1, the pose is non-finite
    /// or the rotation is not orthonormal within 1e-6.
    void validate() const;
};

/// r(t) = origin + t * dir. `dir` is deliberately unnormalized: its norm is the
/// ray depth at t = 1, the target of the depth mixture.
struct Ray {
    Vec3 origin = Vec3::Zero();
    Vec3 dir = Vec3(0, 0, -1);
    double t_near = 0.0;
    double t_far = 1.0;

    double dir_norm() const { return dir.norm(); }
    Vec3 at(double t) const { return origin + t * dir; }
};

/// Samples along a ray. Bin j spans [t_edges[j], t_edges[j+1]] and contains t_mid[j];
/// delta[j] = |dir| * (t_edges[j+1] - t_edges[j]).
struct RaySamples {
    std::vector<double> t_mid;
    std::vector<double> t_edges;
    std::vector<double> delta;

    std::size_t size() const { return t_mid.size(); }
};

/// Ray through continuous pixel coordinates (u, v), pixel centers at +0.5.
/// Bounds are attached as given. Throws DomainError if the pixel is outside the image.
Ray generate_ray(const Camera &camera, double u, double v, double t_near = 0.0, double t_far = 1.0);

/// m equal bins over [t_near, t_far]. With `rng` null the sample sits at the bin
/// center, otherwise it is uniform within its bin.
RaySamples stratified_sample(const Ray &ray, std::size_t m, Rng *rng);

/// Floor added to every bin weight before building the sampling pdf.
inline constexpr double kWeightFloor = 1e-5;

/// Draws n samples by inverting the CDF of the piecewise-constant pdf proportional
/// to (weights + kWeightFloor) over the bins delimited by `edges`. With `rng` null the
/// quantiles (k + 0.5) / n are used. The output is sorted.
std::vector<double> sample_pdf(std::span<const double> edges, std::span<const double> weights, std::size_t n,
                               Rng *rng);

/// Builds RaySamples from sorted sample positions: interior edges are the midpoints
/// between neighbours, the outer edges are t_near and t_far. Ties are separated by
/// one ulp so that the edges stay strictly increasing.
RaySamples samples_from_points(std::vector<double> points, double t_near, double t_far, double dir_norm);

/// Fine-stage samples: m_fine draws from the coarse weights merged with the coarse
/// sample positions, sorted, over the coarse bounds.
RaySamples hierarchical_sample(const RaySamples &coarse, std::span<const double> weights, std::size_t m_fine,
                               double dir_norm, Rng *rng);

struct AnnealConfig {
    long anneal_steps = 256;
    /// Fraction of the full [t_near, t_far] width used at step 0.
    double start_fraction = 0.5;
};

/// Scene-space annealing: a window around the interval midpoint that widens linearly
/// to the full bounds at `anneal_steps`; identity afterwards.
std::pair<double, double> anneal_bounds(const Ray &ray, long step, const AnnealConfig &cfg);

} // namespace raymix::geometry
