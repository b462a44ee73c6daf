// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/metrics.hpp"

#include "raymix/error.hpp"
#include "raymix/fileio.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace raymix::metrics {
namespace {

void check_same(const image::Image &a, const image::Image &b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels || a.data.size() != b.data.size())
        throw DomainError("images differ in dimensions");
    if (a.data.empty())
        throw DomainError("empty image");
}

std::vector<double> gray(const image::Image &img) {
    std::vector<double> g(img.pixels());
    for (std::size_t i = 0; i < g.size(); ++i) {
        double s = 0.0;
        for (int c = 0; c < img.channels; ++c)
            s += img.data[i * img.channels + c];
        g[i] = s / img.channels;
    }
    return g;
}

// Valid-mode separable filter: output is (h - n + 1) x (w - n + 1).
std::vector<double> filter_valid(const std::vector<double> &src, int w, int h, const std::vector<double> &k) {
    const int n = static_cast<int>(k.size());
    const int ow = w - n + 1;
    const int oh = h - n + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                s += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
            rows[static_cast<std::size_t>(y) * ow + x] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                s += k[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    return out;
}

} // namespace

Psnr psnr(const image::Image &img, const image::Image &gt) {
    check_same(img, gt);
    double s = 0.0;
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const double d = img.data[i] - gt.data[i];
        s += d * d;
    }
    Psnr p;
    p.mse = s / static_cast<double>(img.data.size());
    if (p.mse == 0.0)
        p.identical = true;
    else
        p.db = -10.0 * std::log10(p.mse);
    return p;
}

double ssim(const image::Image &img, const image::Image &gt, const SsimConfig &cfg) {
    check_same(img, gt);
    if (img.width < cfg.window || img.height < cfg.window)
        throw DomainError("ssim: image is smaller than the " + std::to_string(cfg.window) + "-pixel window");
    std::vector<double> k(static_cast<std::size_t>(cfg.window));
    const double half = 0.5 * (cfg.window - 1);
    double ks = 0.0;
    for (int i = 0; i < cfg.window; ++i) {
        k[i] = std::exp(-0.5 * (i - half) * (i - half) / (cfg.sigma * cfg.sigma));
        ks += k[i];
    }
    for (double &v : k)
        v /= ks;

    const std::vector<double> a = gray(img);
    const std::vector<double> b = gray(gt);
    std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const int w = img.width;
    const int h = img.height;
    const auto mu_a = filter_valid(a, w, h, k);
    const auto mu_b = filter_valid(b, w, h, k);
    const auto e_aa = filter_valid(aa, w, h, k);
    const auto e_bb = filter_valid(bb, w, h, k);
    const auto e_ab = filter_valid(ab, w, h, k);
    const double c1 = cfg.k1 * cfg.k1;
    const double c2 = cfg.k2 * cfg.k2;
    double total = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double va = e_aa[i] - mu_a[i] * mu_a[i];
        const double vb = e_bb[i] - mu_b[i] * mu_b[i];
        const double cov = e_ab[i] - mu_a[i] * mu_b[i];
        const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
        const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2);
        total += num / den;
    }
    return total / static_cast<double>(mu_a.size());
}

double geometric_average(double psnr_db, double ssim_value) {
    if (ssim_value > 1.0)
        throw DomainError("geometric_average: ssim exceeds 1");
    return std::sqrt(std::pow(10.0, -psnr_db / 10.0) * std::sqrt(1.0 - ssim_value));
}

double geometric_average(const Psnr &p, double ssim_value) {
    if (ssim_value > 1.0)
        throw DomainError("geometric_average: ssim exceeds 1");
    return std::sqrt(p.mse * std::sqrt(1.0 - ssim_value));
}

double depth_mae(const std::vector<double> &depth, const std::vector<double> &gt_depth,
                 const std::vector<double> &gt_opacity, double min_opacity, std::size_t *count) {
    if (depth.size() != gt_depth.size() || depth.size() != gt_opacity.size())
        throw DomainError("depth_mae: maps differ in size");
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < depth.size(); ++i)
        if (gt_opacity[i] > min_opacity) {
            s += std::fabs(depth[i] - gt_depth[i]);
            ++n;
        }
    if (count)
        *count = n;
    return n > 0 ? s / static_cast<double>(n) : 0.0;
}

MetricRow evaluate(const std::string &scene, const std::string &view, const image::Image &img,
                   const image::Image &gt) {
    MetricRow r;
    r.scene = scene;
    r.view = view;
    r.psnr = psnr(img, gt);
    r.ssim = ssim(img, gt);
    r.avg_err = geometric_average(r.psnr, r.ssim);
    return r;
}

std::string format_report(const std::vector<MetricRow> &rows) {
    std::ostringstream os;
    os << "# avg_err is the geometric mean of MSE and sqrt(1 - SSIM); LPIPS is not computed\n";
    os << "scene,view,psnr,ssim,avg_err\n";
    char buf[128];
    for (const MetricRow &r : rows) {
        os << r.scene << ',' << r.view << ',';
        if (r.psnr.identical) {
            os << "identical";
        } else {
            std::snprintf(buf, sizeof(buf), "%.6f", r.psnr.db);
            os << buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.8f,%.8f\n", r.ssim, r.avg_err);
        os << buf;
    }
    return os.str();
}

void write_report(const std::filesystem::path &path, const std::vector<MetricRow> &rows) {
    io::write_atomic(path, format_report(rows));
}

} // namespace raymix::metrics
