// Copyright Contributors to the raymix project
// SPDX-License-Identifier: Apache-2.0

#include "raymix/synthetic.hpp"

#include "raymix/error.hpp"
#include "raymix/fileio.hpp"
#include "raymix/render.hpp"

#include <Eigen/Geometry>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace raymix::synth {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDegree = std::numbers::pi / 180.0;

// Expected termination distance contributed by a slab starting at distance a with
// length len and density sigma, before multiplying by the incoming transmittance:
// int_0^len sigma e^{-sigma x} (a + x) dx.
double slab_depth_moment(double a, double len, double sigma) {
    const double tau = sigma * len;
    const double alpha = -std::expm1(-tau);
    if (tau < 1e-6) {
        // Series in tau keeps the 1/sigma term well conditioned.
        return a * alpha + len * tau * (0.5 - tau / 3.0);
    }
    return a * alpha + alpha / sigma - len * std::exp(-tau);
}

} // namespace

bool Primitive::contains(const Vec3 &p) const {
    if (shape == Shape::Sphere)
        return (p - center).squaredNorm() <= radius * radius;
    const Vec3 d = (p - center).cwiseAbs();
    return d.x() <= half_extent.x() && d.y() <= half_extent.y() && d.z() <= half_extent.z();
}

std::optional<std::pair<double, double>> Primitive::intersect(const geometry::Ray &ray) const {
    if (shape == Shape::Sphere) {
        const Vec3 oc = ray.origin - center;
        const double a = ray.dir.squaredNorm();
        const double b = oc.dot(ray.dir);
        const double c = oc.squaredNorm() - radius * radius;
        const double disc = b * b - a * c;
        if (disc <= 0.0)
            return std::nullopt;
        const double s = std::sqrt(disc);
        // Numerically stable root pair.
        const double q = b >= 0.0 ? -(b + s) : -(b - s);
        double t0 = q / a;
        double t1 = c / q;
        if (t0 > t1)
            std::swap(t0, t1);
        return std::make_pair(t0, t1);
    }
    double t0 = -std::numeric_limits<double>::infinity();
    double t1 = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
        const double lo = center[k] - half_extent[k];
        const double hi = center[k] + half_extent[k];
        if (ray.dir[k] == 0.0) {
            if (ray.origin[k] < lo || ray.origin[k] > hi)
                return std::nullopt;
            continue;
        }
        double a = (lo - ray.origin[k]) / ray.dir[k];
        double b = (hi - ray.origin[k]) / ray.dir[k];
        if (a > b)
            std::swap(a, b);
        t0 = std::max(t0, a);
        t1 = std::min(t1, b);
    }
    if (!(t0 < t1))
        return std::nullopt;
    return std::make_pair(t0, t1);
}

void SyntheticScene::validate() const {
    if (!(std::isfinite(near) && std::isfinite(far) && near >= 0.0 && near < far))
        throw DataError("synthetic scene needs 0 <= near < far");
    for (std::size_t i = 0; i < primitives.size(); ++i) {
        const Primitive &p = primitives[i];
        if (!(p.density >= 0.0) || !std::isfinite(p.density))
            throw DataError("primitive density must be finite and non-negative", static_cast<long>(i));
        if (!p.color.allFinite() || p.color.minCoeff() < 0.0 || p.color.maxCoeff() > 1.0)
            throw DataError("primitive color must lie in [0, 1]", static_cast<long>(i));
        if (!p.center.allFinite())
            throw DataError("primitive center must be finite", static_cast<long>(i));
        const bool degenerate = p.shape == Shape::Sphere ? !(p.radius > 0.0 && std::isfinite(p.radius))
                                                         : !(p.half_extent.minCoeff() > 0.0 && p.half_extent.allFinite());
        if (degenerate)
            throw DataError("degenerate primitive", static_cast<long>(i));
    }
    if (cameras.width < 1 || cameras.height < 1 || !(cameras.fov_deg > 0.0 && cameras.fov_deg < 180.0))
        throw DataError("camera spec needs a positive size and a field of view in (0, 180) degrees");
}

double SyntheticScene::density_at(const Vec3 &p) const {
    double s = 0.0;
    for (const Primitive &q : primitives)
        if (q.contains(p))
            s += q.density;
    return s;
}

Vec3 SyntheticScene::color_at(const Vec3 &p) const {
    double s = 0.0;
    Vec3 c = Vec3::Zero();
    for (const Primitive &q : primitives)
        if (q.contains(p)) {
            s += q.density;
            c += q.density * q.color;
        }
    return s > 0.0 ? Vec3(c / s) : Vec3::Zero();
}

geometry::Pose look_at(const Vec3 &eye, const Vec3 &target, const Vec3 &up) {
    const Vec3 forward = (target - eye).normalized();
    const Vec3 right = forward.cross(up).normalized();
    const Vec3 true_up = right.cross(forward);
    geometry::Pose pose;
    pose.col(0) = right;
    pose.col(1) = true_up;
    pose.col(2) = -forward;
    pose.col(3) = eye;
    return pose;
}

std::vector<geometry::Camera> cameras(const CameraSpec &spec) {
    const double focal = data::focal_from_fov(spec.width, spec.fov_deg * kDegree);
    std::vector<geometry::Camera> out;
    for (const CameraRing &ring : spec.rings) {
        const double el = ring.elevation_deg * kDegree;
        for (int i = 0; i < ring.count; ++i) {
            const double az = ring.azimuth_offset_deg * kDegree + 2.0 * std::numbers::pi * i / ring.count;
            const Vec3 eye = ring.radius * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
            out.push_back(geometry::Camera::centered(spec.width, spec.height, focal, look_at(eye, Vec3::Zero())));
        }
    }
    return out;
}

std::vector<double> slab_boundaries(const SyntheticScene &scene, const geometry::Ray &ray) {
    std::vector<double> b{ray.t_near, ray.t_far};
    for (const Primitive &p : scene.primitives) {
        const auto hit = p.intersect(ray);
        if (!hit)
            continue;
        for (double t : {hit->first, hit->second})
            if (t > ray.t_near && t < ray.t_far)
                b.push_back(t);
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
}

GtPixel render_ray_exact(const SyntheticScene &scene, const geometry::Ray &ray) {
    const double dn = ray.dir_norm();
    const std::vector<double> b = slab_boundaries(scene, ray);
    GtPixel px;
    double trans = 1.0;
    double depth_sum = 0.0;
    for (std::size_t k = 0; k + 1 < b.size(); ++k) {
        const double t0 = b[k];
        const double t1 = b[k + 1];
        // Membership is decided at the slab midpoint, where no boundary can sit.
        const Vec3 mid = ray.at(0.5 * (t0 + t1));
        double sigma = 0.0;
        Vec3 color = Vec3::Zero();
        for (const Primitive &p : scene.primitives) {
            if (p.density > 0.0 && p.contains(mid)) {
                sigma += p.density;
                color += p.density * p.color;
            }
        }
        if (sigma == 0.0)
            continue;
        color /= sigma;
        const double len = (t1 - t0) * dn;
        const double alpha = -std::expm1(-sigma * len);
        px.rgb += trans * alpha * color;
        px.acc += trans * alpha;
        depth_sum += trans * slab_depth_moment(t0 * dn, len, sigma);
        trans *= std::exp(-sigma * len);
    }
    px.rgb += trans * data::background_color(scene.background);
    px.depth = depth_sum / std::max(px.acc, render::kAccEpsilon);
    return px;
}

GtPixel render_ray_sampled(const SyntheticScene &scene, const geometry::Ray &ray,
                           const geometry::RaySamples &samples) {
    const std::size_t m = samples.size();
    std::vector<double> sigma(m);
    std::vector<Vec3> color(m);
    for (std::size_t j = 0; j < m; ++j) {
        const Vec3 p = ray.at(samples.t_mid[j]);
        sigma[j] = scene.density_at(p);
        color[j] = scene.color_at(p);
    }
    const render::BlendWeights bw = render::compute_blend_weights(sigma, samples.delta);
    GtPixel px;
    px.rgb = render::composite_color(bw, color, data::background_color(scene.background));
    px.depth = render::composite_depth(bw, samples.t_mid, ray.dir_norm());
    px.acc = bw.acc;
    return px;
}

geometry::RaySamples slab_aligned_samples(const SyntheticScene &scene, const geometry::Ray &ray, int per_slab) {
    if (per_slab < 1)
        throw DomainError("slab_aligned_samples: per_slab must be positive");
    const std::vector<double> b = slab_boundaries(scene, ray);
    const double dn = ray.dir_norm();
    geometry::RaySamples s;
    s.t_edges.push_back(b.front());
    for (std::size_t k = 0; k + 1 < b.size(); ++k)
        for (int i = 1; i <= per_slab; ++i)
            s.t_edges.push_back(i == per_slab ? b[k + 1] : b[k] + (b[k + 1] - b[k]) * i / per_slab);
    for (std::size_t j = 0; j + 1 < s.t_edges.size(); ++j) {
        s.t_mid.push_back(0.5 * (s.t_edges[j] + s.t_edges[j + 1]));
        s.delta.push_back((s.t_edges[j + 1] - s.t_edges[j]) * dn);
    }
    return s;
}

GtImage render_synthetic_gt(const SyntheticScene &scene, const geometry::Camera &camera) {
    camera.validate();
    GtImage out;
    out.rgb = image::Image(camera.width, camera.height, 3);
    out.depth.width = camera.width;
    out.depth.height = camera.height;
    out.depth.depth.assign(out.rgb.pixels(), 0.0);
    out.acc.assign(out.rgb.pixels(), 0.0);
    for (int y = 0; y < camera.height; ++y)
        for (int x = 0; x < camera.width; ++x) {
            const GtPixel px = render_ray_exact(scene, geometry::generate_ray(camera, x, y, scene.near, scene.far));
            out.rgb.set_rgb(x, y, px.rgb);
            const std::size_t i = static_cast<std::size_t>(y) * camera.width + x;
            out.depth.depth[i] = px.depth;
            out.acc[i] = px.acc;
        }
    return out;
}

SyntheticScene random_scene(Rng &rng, const RandomSceneConfig &cfg) {
    SyntheticScene s;
    const int n = cfg.min_primitives +
                  static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cfg.max_primitives - cfg.min_primitives + 1)));
    for (int i = 0; i < n; ++i) {
        Primitive p;
        p.shape = uniform01(rng) < 0.5 ? Shape::Sphere : Shape::Box;
        p.center = Vec3(uniform(rng, -0.8, 0.8), uniform(rng, -0.8, 0.8), uniform(rng, -0.5, 0.5));
        p.radius = uniform(rng, 0.3, 0.8);
        p.half_extent = Vec3(uniform(rng, 0.2, 0.6), uniform(rng, 0.2, 0.6), uniform(rng, 0.2, 0.6));
        p.density = uniform(rng, cfg.min_density, cfg.max_density);
        p.color = Vec3(uniform01(rng), uniform01(rng), uniform01(rng));
        s.primitives.push_back(p);
    }
    s.background = uniform01(rng) < 0.5 ? data::Background::Black : data::Background::White;
    s.near = 2.5;
    s.far = 5.5;
    return s;
}

SyntheticScene desk_scene(int resolution) {
    SyntheticScene s;
    auto sphere = [](Vec3 c, double r, Vec3 color) {
        Primitive p;
        p.shape = Shape::Sphere;
        p.center = c;
        p.radius = r;
        p.density = 12.0;
        p.color = color;
        return p;
    };
    s.primitives = {
        sphere({0.55, 0.0, 0.0}, 0.45, {0.9, 0.2, 0.15}),
        sphere({-0.35, 0.5, 0.1}, 0.4, {0.15, 0.75, 0.25}),
        sphere({-0.3, -0.55, -0.1}, 0.5, {0.2, 0.3, 0.9}),
    };
    s.background = data::Background::Black;
    s.near = 2.0;
    s.far = 6.0;
    s.cameras.width = resolution;
    s.cameras.height = resolution;
    s.cameras.fov_deg = 40.0;
    s.cameras.rings = {CameraRing{3, 4.0, 25.0, 0.0}, CameraRing{5, 4.0, 15.0, 36.0}};
    return s;
}

namespace {

json vec_json(const Vec3 &v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 json_vec(const json &j) {
    if (!j.is_array() || j.size() != 3)
        throw DataError("expected a 3-vector in scene descriptor");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

} // namespace

std::string descriptor_json(const SyntheticScene &scene) {
    json j;
    j["background"] = scene.background == data::Background::White ? "white" : "black";
    j["near"] = scene.near;
    j["far"] = scene.far;
    j["primitives"] = json::array();
    for (const Primitive &p : scene.primitives) {
        json jp{{"shape", p.shape == Shape::Sphere ? "sphere" : "box"},
                {"center", vec_json(p.center)},
                {"density", p.density},
                {"color", vec_json(p.color)}};
        if (p.shape == Shape::Sphere)
            jp["radius"] = p.radius;
        else
            jp["half_extent"] = vec_json(p.half_extent);
        j["primitives"].push_back(jp);
    }
    json cams{{"width", scene.cameras.width}, {"height", scene.cameras.height}, {"fov_deg", scene.cameras.fov_deg}};
    cams["rings"] = json::array();
    for (const CameraRing &r : scene.cameras.rings)
        cams["rings"].push_back({{"count", r.count},
                                 {"radius", r.radius},
                                 {"elevation_deg", r.elevation_deg},
                                 {"azimuth_offset_deg", r.azimuth_offset_deg}});
    j["cameras"] = cams;
    return j.dump(2) + "\n";
}

SyntheticScene parse_descriptor(const std::string &text) {
    SyntheticScene s;
    try {
        const json j = json::parse(text);
        const std::string bg = j.value("background", std::string("black"));
        if (bg != "black" && bg != "white")
            throw DataError("unknown background '" + bg + "'");
        s.background = bg == "white" ? data::Background::White : data::Background::Black;
        s.near = j.value("near", s.near);
        s.far = j.value("far", s.far);
        for (const json &jp : j.value("primitives", json::array())) {
            Primitive p;
            const std::string shape = jp.at("shape").get<std::string>();
            if (shape == "sphere") {
                p.shape = Shape::Sphere;
                p.radius = jp.at("radius").get<double>();
            } else if (shape == "box") {
                p.shape = Shape::Box;
                p.half_extent = json_vec(jp.at("half_extent"));
            } else {
                throw DataError("unknown primitive shape '" + shape + "'");
            }
            p.center = json_vec(jp.at("center"));
            p.density = jp.at("density").get<double>();
            p.color = json_vec(jp.at("color"));
            s.primitives.push_back(p);
        }
        if (j.contains("cameras")) {
            const json &c = j["cameras"];
            s.cameras.width = c.value("width", s.cameras.width);
            s.cameras.height = c.value("height", s.cameras.height);
            s.cameras.fov_deg = c.value("fov_deg", s.cameras.fov_deg);
            if (c.contains("rings")) {
                s.cameras.rings.clear();
                for (const json &r : c["rings"])
                    s.cameras.rings.push_back(CameraRing{r.value("count", 8), r.value("radius", 4.0),
                                                         r.value("elevation_deg", 20.0),
                                                         r.value("azimuth_offset_deg", 0.0)});
            }
        }
    } catch (const json::exception &e) {
        throw DataError(std::string("malformed scene descriptor: ") + e.what());
    }
    s.validate();
    return s;
}

SyntheticScene load_descriptor(const fs::path &path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const std::exception &e) {
        throw DataError(e.what());
    }
    return parse_descriptor(text);
}

void save_descriptor(const fs::path &path, const SyntheticScene &scene) { io::write_atomic(path, descriptor_json(scene)); }

data::Manifest write_scene(const SyntheticScene &scene, const fs::path &out_dir) {
    scene.validate();
    const std::vector<geometry::Camera> cams = cameras(scene.cameras);
    data::Manifest m;
    m.camera_angle_x = scene.cameras.fov_deg * kDegree;
    m.near = scene.near;
    m.far = scene.far;
    m.background = scene.background;
    m.width = scene.cameras.width;
    m.height = scene.cameras.height;
    for (std::size_t i = 0; i < cams.size(); ++i) {
        const geometry::Camera &cam = cams[i];
        const GtImage gt = render_synthetic_gt(scene, cam);
        char name[32];
        std::snprintf(name, sizeof(name), "r_%03zu.png", i);
        char dname[32];
        std::snprintf(dname, sizeof(dname), "depth_%03zu.png", i);
        image::write_png(out_dir / name, gt.rgb);
        // Longest ray of this camera reaches far * |d| at the image corner.
        const double corner = std::hypot(0.5 * cam.width / cam.focal, 0.5 * cam.height / cam.focal, 1.0);
        data::write_depth(out_dir / dname, gt.depth, scene.far * corner);
        char oname[32];
        std::snprintf(oname, sizeof(oname), "opacity_%03zu.png", i);
        data::write_opacity(out_dir / oname, cam.width, cam.height, gt.acc);
        m.frames.push_back({name, cam.pose, dname, oname});
    }
    data::save_manifest(out_dir / "manifest.json", m);
    save_descriptor(out_dir / "scene.json", scene);
    return m;
}

} // namespace raymix::synth
