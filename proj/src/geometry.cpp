// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/geometry.hpp"

#include "raymix/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace raymix::geometry {

Camera Camera::centered(int width, int height, double focal, const Pose &pose) {
    Camera cam;
    cam.width = width;
    cam.height = height;
    cam.focal = focal;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.pose = pose;
    cam.validate();
    return cam;
}

void Camera::validate() const {
    if (width < 1 || height < 1)
        throw DomainError("camera dimensions must be at least 1x1");
    if (!(focal > 0.0) || !std::isfinite(focal))
        throw DomainError("camera focal length must be positive and finite");
    if (!pose.allFinite())
        throw DomainError("camera pose has non-finite entries");
    const Eigen::Matrix3d r = rotation();
    const double err = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (err > 1e-6)
        throw DomainError("camera rotation is not orthonormal (deviation " + std::to_string(err) + ")");
}

Ray generate_ray(const Camera &camera, double u, double v, double t_near, double t_far) {
    if (!(u >= 0.0 && u < camera.width && v >= 0.0 && v < camera.height))
        throw DomainError("pixel (" + std::to_string(u) + ", " + std::to_string(v) + ") outside the image");
    if (!(t_near >= 0.0 && t_far > t_near))
        throw DomainError("ray bounds must satisfy 0 <= t_near < t_far");
    const Vec3 d_cam((u + 0.5 - camera.cx) / camera.focal, -(v + 0.5 - camera.cy) / camera.focal, -1.0);
    Ray ray;
    ray.origin = camera.origin();
    ray.dir = camera.rotation() * d_cam;
    ray.t_near = t_near;
    ray.t_far = t_far;
    return ray;
}

RaySamples stratified_sample(const Ray &ray, std::size_t m, Rng *rng) {
    if (m == 0)
        throw DomainError("stratified_sample needs at least one sample");
    const double norm = ray.dir_norm();
    const double width = (ray.t_far - ray.t_near) / static_cast<double>(m);
    RaySamples s;
    s.t_edges.resize(m + 1);
    s.t_mid.resize(m);
    s.delta.resize(m);
    for (std::size_t j = 0; j <= m; ++j)
        s.t_edges[j] = ray.t_near + width * static_cast<double>(j);
    s.t_edges[m] = ray.t_far;
    for (std::size_t j = 0; j < m; ++j) {
        const double lo = s.t_edges[j];
        const double hi = s.t_edges[j + 1];
        s.t_mid[j] = rng ? lo + (hi - lo) * uniform01(*rng) : 0.5 * (lo + hi);
        s.delta[j] = norm * (hi - lo);
    }
    return s;
}

std::vector<double> sample_pdf(std::span<const double> edges, std::span<const double> weights, std::size_t n,
                               Rng *rng) {
    const std::size_t bins = weights.size();
    if (bins == 0 || edges.size() != bins + 1)
        throw DomainError("sample_pdf: need one weight per bin");
    std::vector<double> cdf(bins + 1, 0.0);
    for (std::size_t j = 0; j < bins; ++j) {
        if (!(weights[j] >= 0.0) || !std::isfinite(weights[j]))
            throw DomainError("sample_pdf: weights must be finite and non-negative");
        cdf[j + 1] = cdf[j] + weights[j] + kWeightFloor;
    }
    const double total = cdf[bins];
    for (auto &c : cdf)
        c /= total;
    cdf[bins] = 1.0;

    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double u = rng ? uniform01(*rng) : (static_cast<double>(k) + 0.5) / static_cast<double>(n);
        // First bin whose upper cdf exceeds u.
        auto it = std::upper_bound(cdf.begin() + 1, cdf.end(), u);
        std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()) - 1, bins - 1);
        const double mass = cdf[j + 1] - cdf[j];
        const double frac = mass > 0.0 ? std::clamp((u - cdf[j]) / mass, 0.0, 1.0) : 0.5;
        out[k] = edges[j] + frac * (edges[j + 1] - edges[j]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

RaySamples samples_from_points(std::vector<double> points, double t_near, double t_far, double dir_norm) {
    if (points.empty())
        throw DomainError("samples_from_points: no points");
    std::sort(points.begin(), points.end());
    const double inf = std::numeric_limits<double>::infinity();
    for (auto &p : points)
        p = std::clamp(p, t_near, t_far);
    for (std::size_t j = 1; j < points.size(); ++j)
        if (!(points[j] > points[j - 1]))
            points[j] = std::nextafter(points[j - 1], inf);
    for (std::size_t j = points.size(); j-- > 0;) {
        const double upper = j + 1 < points.size() ? std::nextafter(points[j + 1], -inf) : t_far;
        points[j] = std::min(points[j], upper);
    }

    const std::size_t m = points.size();
    RaySamples s;
    s.t_mid = std::move(points);
    s.t_edges.resize(m + 1);
    s.t_edges[0] = t_near;
    s.t_edges[m] = t_far;
    for (std::size_t j = 1; j < m; ++j)
        s.t_edges[j] = 0.5 * (s.t_mid[j - 1] + s.t_mid[j]);
    s.delta.resize(m);
    for (std::size_t j = 0; j < m; ++j)
        s.delta[j] = dir_norm * (s.t_edges[j + 1] - s.t_edges[j]);
    return s;
}

RaySamples hierarchical_sample(const RaySamples &coarse, std::span<const double> weights, std::size_t m_fine,
                               double dir_norm, Rng *rng) {
    std::vector<double> points = sample_pdf(coarse.t_edges, weights, m_fine, rng);
    points.insert(points.end(), coarse.t_mid.begin(), coarse.t_mid.end());
    return samples_from_points(std::move(points), coarse.t_edges.front(), coarse.t_edges.back(), dir_norm);
}

std::pair<double, double> anneal_bounds(const Ray &ray, long step, const AnnealConfig &cfg) {
    if (cfg.anneal_steps <= 0 || step >= cfg.anneal_steps)
        return {ray.t_near, ray.t_far};
    const double progress = static_cast<double>(std::max(step, 0L)) / static_cast<double>(cfg.anneal_steps);
    const double fraction = cfg.start_fraction + (1.0 - cfg.start_fraction) * progress;
    const double mid = 0.5 * (ray.t_near + ray.t_far);
    const double half = 0.5 * fraction * (ray.t_far - ray.t_near);
    return {mid - half, mid + half};
}

} // namespace raymix::geometry
