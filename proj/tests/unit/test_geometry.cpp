// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/error.hpp"
#include "raymix/geometry.hpp"

#include <gtest/gtest.h>

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

using namespace raymix;
using namespace raymix::geometry;

namespace {

Pose rotated_pose(double angle, const Vec3 &center) {
    Pose p;
    p.leftCols<3>() = Eigen::AngleAxisd(angle, Vec3(1, 2, 3).normalized()).toRotationMatrix();
    p.col(3) = center;
    return p;
}

} // namespace

TEST(Camera, CenterPixelLooksDownNegativeZ) {
    const Camera cam = Camera::centered(4, 4, 2.0, Pose::Identity());
    // Pixel (1.5, 1.5) + 0.5 is the principal point.
    const Ray r = generate_ray(cam, 1.5, 1.5);
    EXPECT_NEAR(r.dir.x(), 0.0, 1e-15);
    EXPECT_NEAR(r.dir.y(), 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(r.dir.z(), -1.0);
}

TEST(Camera, DirectionAtUnitDepthIsOnImagePlane) {
    const Camera cam = Camera::centered(8, 6, 5.0, rotated_pose(0.7, Vec3(1, -2, 3)));
    for (int v = 0; v < 6; ++v) {
        for (int u = 0; u < 8; ++u) {
            const Ray r = generate_ray(cam, u, v, 1.0, 2.0);
            // The camera-frame z of the direction is always -1.
            const Vec3 local = cam.rotation().transpose() * r.dir;
            EXPECT_NEAR(local.z(), -1.0, 1e-12);
            EXPECT_NEAR(local.x(), (u + 0.5 - 4.0) / 5.0, 1e-12);
            EXPECT_NEAR(local.y(), -(v + 0.5 - 3.0) / 5.0, 1e-12);
            EXPECT_TRUE(r.origin.isApprox(Vec3(1, -2, 3)));
        }
    }
}

TEST(Camera, RejectsBadInputs) {
    Camera cam = Camera::centered(4, 4, 2.0, Pose::Identity());
    EXPECT_THROW(generate_ray(cam, -0.1, 0), DomainError);
    EXPECT_THROW(generate_ray(cam, 0, 4.0), DomainError);
    EXPECT_THROW(generate_ray(cam, 0, 0, 2.0, 1.0), DomainError);
    cam.focal = 0.0;
    EXPECT_THROW(cam.validate(), DomainError);
    cam.focal = 1.0;
    cam.pose(0, 0) = 2.0;
    EXPECT_THROW(cam.validate(), DomainError);
    cam.pose(0, 0) = std::nan("");
    EXPECT_THROW(cam.validate(), DomainError);
}

TEST(Stratified, BinsTileTheInterval) {
    Ray ray;
    ray.dir = Vec3(0, 3, 4);
    ray.t_near = 2.0;
    ray.t_far = 6.0;
    Rng rng(7);
    for (Rng *r : {static_cast<Rng *>(nullptr), &rng}) {
        const RaySamples s = stratified_sample(ray, 16, r);
        ASSERT_EQ(s.size(), 16u);
        EXPECT_EQ(s.t_edges.front(), 2.0);
        EXPECT_EQ(s.t_edges.back(), 6.0);
        for (std::size_t j = 0; j < 16; ++j) {
            EXPECT_GE(s.t_mid[j], s.t_edges[j]);
            EXPECT_LE(s.t_mid[j], s.t_edges[j + 1]);
            EXPECT_NEAR(s.delta[j], 5.0 * 0.25, 1e-12);
        }
        const double total = std::accumulate(s.delta.begin(), s.delta.end(), 0.0);
        EXPECT_NEAR(total, 5.0 * 4.0, 1e-12);
    }
    const RaySamples mid = stratified_sample(ray, 4, nullptr);
    EXPECT_DOUBLE_EQ(mid.t_mid[0], 2.5);
    EXPECT_THROW(stratified_sample(ray, 0, nullptr), DomainError);
}

TEST(SamplePdf, DeterministicQuantilesFollowTheWeights) {
    // All mass (besides the floor) in the third of four unit bins.
    const std::vector<double> edges{0, 1, 2, 3, 4};
    const std::vector<double> w{0, 0, 1, 0};
    const auto pts = sample_pdf(edges, w, 64, nullptr);
    ASSERT_EQ(pts.size(), 64u);
    EXPECT_TRUE(std::is_sorted(pts.begin(), pts.end()));
    const auto inside = std::count_if(pts.begin(), pts.end(), [](double t) { return t >= 2.0 && t <= 3.0; });
    EXPECT_GE(inside, 63);
}

TEST(SamplePdf, EmpiricalDistributionMatchesThePdf) {
    const std::vector<double> edges{0, 1, 3, 4};
    const std::vector<double> w{1, 2, 1};
    Rng rng(11);
    const auto pts = sample_pdf(edges, w, 40000, &rng);
    std::array<int, 3> counts{};
    for (double t : pts)
        counts[t < 1 ? 0 : (t < 3 ? 1 : 2)]++;
    const double total = 4 + 3 * kWeightFloor;
    EXPECT_NEAR(counts[0] / 40000.0, (1 + kWeightFloor) / total, 0.01);
    EXPECT_NEAR(counts[1] / 40000.0, (2 + kWeightFloor) / total, 0.01);
    EXPECT_THROW(sample_pdf(edges, std::vector<double>{1, -1, 1}, 4, nullptr), DomainError);
    EXPECT_THROW(sample_pdf(edges, std::vector<double>{1, 1}, 4, nullptr), DomainError);
}

TEST(SamplesFromPoints, EdgesAreStrictlyIncreasingEvenWithTies) {
    const RaySamples s = samples_from_points({3.0, 3.0, 3.0, 2.0, 6.0}, 2.0, 6.0, 2.0);
    ASSERT_EQ(s.size(), 5u);
    for (std::size_t j = 0; j < s.size(); ++j) {
        EXPECT_LT(s.t_edges[j], s.t_edges[j + 1]) << j;
        EXPECT_GE(s.t_mid[j], s.t_edges[j]);
        EXPECT_LE(s.t_mid[j], s.t_edges[j + 1]);
        EXPECT_GT(s.delta[j], 0.0);
    }
    EXPECT_NEAR(std::accumulate(s.delta.begin(), s.delta.end(), 0.0), 8.0, 1e-12);
}

TEST(Hierarchical, MergesCoarseAndFineSamples) {
    Ray ray;
    ray.t_near = 2.0;
    ray.t_far = 6.0;
    const RaySamples coarse = stratified_sample(ray, 8, nullptr);
    std::vector<double> w(8, 0.0);
    w[5] = 1.0;
    Rng rng(3);
    const RaySamples fine = hierarchical_sample(coarse, w, 16, 1.0, &rng);
    EXPECT_EQ(fine.size(), 24u);
    EXPECT_EQ(fine.t_edges.front(), 2.0);
    EXPECT_EQ(fine.t_edges.back(), 6.0);
    for (double t : coarse.t_mid)
        EXPECT_NE(std::find(fine.t_mid.begin(), fine.t_mid.end(), t), fine.t_mid.end());
}

TEST(Anneal, WidensLinearlyToFullBounds) {
    Ray ray;
    ray.t_near = 2.0;
    ray.t_far = 6.0;
    const AnnealConfig cfg{100, 0.5};
    auto [a0, b0] = anneal_bounds(ray, 0, cfg);
    EXPECT_DOUBLE_EQ(a0, 3.0);
    EXPECT_DOUBLE_EQ(b0, 5.0);
    auto [a1, b1] = anneal_bounds(ray, 50, cfg);
    EXPECT_DOUBLE_EQ(a1, 2.5);
    EXPECT_DOUBLE_EQ(b1, 5.5);
    auto [a2, b2] = anneal_bounds(ray, 100, cfg);
    EXPECT_EQ(a2, 2.0);
    EXPECT_EQ(b2, 6.0);
}
