// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/data.hpp"
#include "raymix/error.hpp"
#include "raymix/synthetic.hpp"

#include <gtest/gtest.h>

#include <Eigen/LU>

#include <cmath>
#include <filesystem>

using namespace raymix;
using namespace raymix::synth;
namespace fs = std::filesystem;

namespace {

geometry::Ray axis_ray(double t_near, double t_far) {
    geometry::Ray r;
    r.origin = Vec3(0, 0, 4);
    r.dir = Vec3(0, 0, -1);
    r.t_near = t_near;
    r.t_far = t_far;
    return r;
}

} // namespace

TEST(Primitives, SphereAndBoxIntersections) {
    Primitive s;
    s.radius = 1.0;
    const auto hit = s.intersect(axis_ray(0, 10));
    ASSERT_TRUE(hit.has_value());
    EXPECT_NEAR(hit->first, 3.0, 1e-15);
    EXPECT_NEAR(hit->second, 5.0, 1e-15);
    EXPECT_TRUE(s.contains(Vec3(0.5, 0.5, 0.5)));
    EXPECT_FALSE(s.contains(Vec3(0.8, 0.8, 0)));

    Primitive b;
    b.shape = Shape::Box;
    b.half_extent = Vec3(0.5, 0.5, 0.25);
    const auto bh = b.intersect(axis_ray(0, 10));
    ASSERT_TRUE(bh.has_value());
    EXPECT_NEAR(bh->first, 3.75, 1e-15);
    EXPECT_NEAR(bh->second, 4.25, 1e-15);
    geometry::Ray miss = axis_ray(0, 10);
    miss.origin.x() = 2.0;
    EXPECT_FALSE(b.intersect(miss).has_value());
    EXPECT_FALSE(s.intersect(miss).has_value());
}

TEST(Exact, HomogeneousSphereClosedForm) {
    SyntheticScene sc;
    Primitive s;
    s.radius = 1.0;
    s.density = 0.8;
    s.color = Vec3(0.9, 0.2, 0.1);
    sc.primitives = {s};
    const GtPixel px = render_ray_exact(sc, axis_ray(2, 6));
    const double alpha = 1 - std::exp(-0.8 * 2.0);
    EXPECT_NEAR(px.acc, alpha, 1e-15);
    EXPECT_NEAR(px.rgb.x(), 0.9 * alpha, 1e-15);
    // Mean of an exponential truncated to [3, 5], in distance units.
    const double L = 2.0, sig = 0.8;
    const double mean = 3.0 + (1.0 / sig - L * std::exp(-sig * L) / alpha);
    EXPECT_NEAR(px.depth, mean, 1e-13);
}

TEST(Exact, QuadratureConvergesToExact) {
    Rng rng(4);
    for (int i = 0; i < 5; ++i) {
        const SyntheticScene sc = random_scene(rng);
        const auto cams = cameras(sc.cameras);
        const auto ray = geometry::generate_ray(cams[0], 31, 29, sc.near, sc.far);
        const GtPixel exact = render_ray_exact(sc, ray);
        double prev = 1e9;
        for (std::size_t m : {32u, 256u, 2048u}) {
            const GtPixel approx = render_ray_sampled(sc, ray, geometry::stratified_sample(ray, m, nullptr));
            const double err = (approx.rgb - exact.rgb).cwiseAbs().maxCoeff();
            EXPECT_LE(err, prev + 1e-15);
            prev = err;
        }
        EXPECT_LT(prev, 1e-3);
        // Slab-aligned bins are exact for piecewise constant media.
        const GtPixel aligned = render_ray_sampled(sc, ray, slab_aligned_samples(sc, ray, 3));
        EXPECT_NEAR((aligned.rgb - exact.rgb).cwiseAbs().maxCoeff(), 0.0, 1e-12);
        EXPECT_NEAR(aligned.acc, exact.acc, 1e-12);
    }
}

TEST(Scene, ValidationAndFields) {
    SyntheticScene sc = desk_scene(32);
    EXPECT_NO_THROW(sc.validate());
    EXPECT_EQ(cameras(sc.cameras).size(), 8u);
    EXPECT_GT(sc.density_at(sc.primitives[0].center), 0.0);
    EXPECT_EQ(sc.density_at(Vec3(0, 0, 3)), 0.0);
    EXPECT_TRUE(sc.color_at(sc.primitives[0].center).isApprox(sc.primitives[0].color));
    sc.primitives[0].density = -1;
    EXPECT_THROW(sc.validate(), DataError);
    sc.primitives[0].density = 1;
    sc.primitives[0].color.x() = 1.5;
    EXPECT_THROW(sc.validate(), DataError);
}

TEST(Scene, LookAtFacesTheTarget) {
    const geometry::Pose p = look_at(Vec3(3, 1, 2), Vec3::Zero());
    const Vec3 forward = -p.col(2);
    EXPECT_TRUE(forward.isApprox(-Vec3(3, 1, 2).normalized()));
    const Eigen::Matrix3d r = p.leftCols<3>();
    EXPECT_TRUE((r.transpose() * r).isApprox(Eigen::Matrix3d::Identity(), 1e-12));
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
}

TEST(Scene, DescriptorRoundTripAndDatasetWrite) {
    const fs::path dir = fs::temp_directory_path() / "raymix_synth_test";
    fs::remove_all(dir);
    Rng rng(8);
    SyntheticScene sc = random_scene(rng);
    sc.cameras.width = sc.cameras.height = 12;
    sc.cameras.rings = {CameraRing{3, 4.0, 20.0, 0.0}};
    const SyntheticScene back = parse_descriptor(descriptor_json(sc));
    EXPECT_EQ(descriptor_json(back), descriptor_json(sc));
    EXPECT_THROW(parse_descriptor("{\"primitives\": 3}"), DataError);

    const data::Manifest m = write_scene(sc, dir);
    EXPECT_EQ(m.frames.size(), 3u);
    const data::Scene loaded = data::load_scene(dir / "manifest.json");
    const auto gt = render_synthetic_gt(sc, loaded.views[1].camera);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 12; ++x)
            for (int c = 0; c < 3; ++c)
                EXPECT_NEAR(loaded.views[1].image.at(x, y, c), gt.rgb.at(x, y, c), 0.5 / 255 + 1e-12);
    const data::DepthMap d = data::read_depth(dir / m.frames[1].depth_path);
    for (std::size_t i = 0; i < d.depth.size(); ++i)
        EXPECT_NEAR(d.depth[i], gt.depth.depth[i], 1e-3);
    EXPECT_EQ(load_descriptor(dir / "scene.json").primitives.size(), sc.primitives.size());
    fs::remove_all(dir);
}
