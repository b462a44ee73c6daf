// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/error.hpp"
#include "raymix/metrics.hpp"
#include "raymix/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace raymix;
using namespace raymix::metrics;

namespace {

image::Image random_image(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    image::Image img(w, h, 3);
    for (auto &v : img.data)
        v = uniform01(rng);
    return img;
}

} // namespace

TEST(Psnr, KnownValues) {
    image::Image a(8, 8, 3, 0.5), b(8, 8, 3, 0.6);
    const Psnr p = psnr(a, b);
    EXPECT_NEAR(p.mse, 0.01, 1e-15);
    EXPECT_NEAR(p.db, 20.0, 1e-12);
    EXPECT_FALSE(p.identical);
    const Psnr same = psnr(a, a);
    EXPECT_TRUE(same.identical);
    EXPECT_EQ(same.mse, 0.0);
    EXPECT_THROW(psnr(a, image::Image(8, 7, 3)), DomainError);
}

TEST(Ssim, ConstantImagesFollowTheLuminanceTerm) {
    const image::Image a(16, 16, 3, 0.3), b(16, 16, 3, 0.7);
    const double c1 = 0.01 * 0.01;
    EXPECT_NEAR(ssim(a, b), (2 * 0.3 * 0.7 + c1) / (0.09 + 0.49 + c1), 1e-12);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-15);
}

TEST(Ssim, BoundsSymmetryAndErrors) {
    const image::Image a = random_image(20, 17, 1), b = random_image(20, 17, 2);
    const double s = ssim(a, b);
    EXPECT_NEAR(s, ssim(b, a), 1e-14);
    EXPECT_GT(s, -1.0);
    EXPECT_LT(s, 1.0);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
    EXPECT_THROW(ssim(image::Image(10, 10, 3), image::Image(10, 10, 3)), DomainError);
    // Inverting the image anti-correlates its structure.
    image::Image inv = a;
    for (auto &v : inv.data)
        v = 1.0 - v;
    EXPECT_LT(ssim(a, inv), 0.0);
}

TEST(AverageError, Formula) {
    EXPECT_NEAR(geometric_average(20.0, 0.84), std::sqrt(0.01 * 0.4), 1e-15);
    Psnr p;
    p.mse = 0.01;
    p.db = 20.0;
    EXPECT_NEAR(geometric_average(p, 0.84), std::sqrt(0.01 * 0.4), 1e-15);
    p.identical = true;
    p.mse = 0.0;
    EXPECT_EQ(geometric_average(p, 1.0), 0.0);
    EXPECT_THROW(geometric_average(20.0, 1.1), DomainError);
}

TEST(DepthMae, MasksByOpacity) {
    const std::vector<double> d{1, 2, 3, 4}, g{1.5, 2, 0, 5}, o{1.0, 0.6, 0.5, 0.9};
    std::size_t n = 0;
    EXPECT_NEAR(depth_mae(d, g, o, 0.5, &n), (0.5 + 0 + 1) / 3.0, 1e-15);
    EXPECT_EQ(n, 3u);
    EXPECT_EQ(depth_mae(d, g, std::vector<double>(4, 0.0), 0.5, &n), 0.0);
    EXPECT_EQ(n, 0u);
    EXPECT_THROW(depth_mae(d, g, std::vector<double>(3, 1.0)), DomainError);
}

TEST(Report, CsvLayout) {
    const image::Image a = random_image(16, 16, 3), b = random_image(16, 16, 4);
    const std::vector<MetricRow> rows{evaluate("desk", "003", a, b), evaluate("desk", "004", a, a)};
    const std::string text = format_report(rows);
    EXPECT_EQ(text.rfind("# ", 0), 0u);
    EXPECT_NE(text.find("\nscene,view,psnr,ssim,avg_err\n"), std::string::npos);
    EXPECT_NE(text.find("desk,004,identical,1.00000000,0.00000000"), std::string::npos);
}
