// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "raymix/image.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace raymix::metrics {

/// PSNR of two images on unit dynamic range. Identical images carry the `identical`
/// flag instead of an infinite value; `db` is then 0 and must not be used.
struct Psnr {
    double db = 0.0;
    double mse = 0.0;
    bool identical = false;
};

/// Throws DomainError on a dimension mismatch.
Psnr psnr(const image::Image &img, const image::Image &gt);

struct SsimConfig {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
};

/// Windowed SSIM on the channel-mean grayscale images with a normalized Gaussian
/// window, averaged over all fully contained window positions. Throws DomainError
/// when the images differ in size or are smaller than the window.
double ssim(const image::Image &img, const image::Image &gt, const SsimConfig &cfg = {});

/// Geometric mean of 10^(-psnr/10) and sqrt(1 - ssim). Throws DomainError for ssim > 1.
double geometric_average(const Psnr &p, double ssim);
double geometric_average(double psnr_db, double ssim);

/// Mean absolute depth error over pixels whose reference opacity exceeds `min_opacity`.
/// `count` receives the number of such pixels; with none the result is 0.
double depth_mae(const std::vector<double> &depth, const std::vector<double> &gt_depth,
                 const std::vector<double> &gt_opacity, double min_opacity = 0.5, std::size_t *count = nullptr);

struct MetricRow {
    std::string scene;
    std::string view;
    Psnr psnr;
    double ssim = 0.0;
    double avg_err = 0.0;
};

MetricRow evaluate(const std::string &scene, const std::string &view, const image::Image &img,
                   const image::Image &gt);

/// CSV with columns scene,view,psnr,ssim,avg_err preceded by a comment line noting
/// that avg_err omits the learned perceptual term. Atomic.
void write_report(const std::filesystem::path &path, const std::vector<MetricRow> &rows);
std::string format_report(const std::vector<MetricRow> &rows);

} // namespace raymix::metrics
