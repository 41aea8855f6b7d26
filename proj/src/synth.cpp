#include "gstrim/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include "gstrim/config.hpp"
#include "gstrim/core.hpp"
#include "gstrim/ply.hpp"
#include "gstrim/render.hpp"

namespace gstrim {

SceneKind scene_kind_from_string(const std::string& s) {
    if (s == "plane") return SceneKind::plane;
    if (s == "box") return SceneKind::box;
    if (s == "checkerboard") return SceneKind::checkerboard;
    throw std::invalid_argument("unknown scene kind: " + s +
                                " (expected plane, box or checkerboard)");
}

namespace {

Camera look_at(const Vec3& pos, const Vec3& target, const Vec3& up_hint, double focal, int size) {
    Vec3 fwd = normalized(target - pos);
    Vec3 right = cross(fwd, up_hint);
    if (norm(right) < 1e-6) right = cross(fwd, Vec3{0.0, 1.0, 0.0});
    right = normalized(right);
    Vec3 down = cross(fwd, right);

    Camera c;
    c.fx = c.fy = focal;
    c.cx = size / 2.0;
    c.cy = size / 2.0;
    c.width = c.height = size;
    c.rotation.m = {{{right.x, right.y, right.z},
                     {down.x, down.y, down.z},
                     {fwd.x, fwd.y, fwd.z}}};
    c.translation = c.rotation * (-pos);
    return c;
}

Vec3 color_to_dc(const Vec3& c) { return (c - Vec3{0.5, 0.5, 0.5}) * (1.0 / kSH0); }

double checker_value(double u, double v, double extent, int freq) {
    double half = extent / freq;  // half-period tile size
    long long iu = static_cast<long long>(std::floor((u + extent) / half));
    long long iv = static_cast<long long>(std::floor((v + extent) / half));
    return ((iu + iv) % 2 + 2) % 2 == 0 ? 0.9 : 0.1;
}

Vec3 plane_color(double u, double v, double extent) {
    double s = (u + extent) / (2.0 * extent);
    double t = (v + extent) / (2.0 * extent);
    return {0.25 + 0.5 * s, 0.35 + 0.3 * t, 0.6 - 0.3 * s};
}

Quat random_tilt(std::mt19937_64& rng, double deg) {
    if (deg <= 0.0) return Quat{1.0, 0.0, 0.0, 0.0};
    std::normal_distribution<double> n(0.0, deg * std::numbers::pi / 180.0);
    Vec3 axis_angle{n(rng), n(rng), n(rng)};
    double angle = norm(axis_angle);
    if (angle < 1e-12) return Quat{1.0, 0.0, 0.0, 0.0};
    Vec3 axis = axis_angle * (1.0 / angle);
    double s = std::sin(angle / 2.0);
    return {std::cos(angle / 2.0), axis.x * s, axis.y * s, axis.z * s};
}

Quat quat_multiply(const Quat& a, const Quat& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

// Quaternion rotating +z to the given unit axis.
Quat quat_from_z_to(const Vec3& axis) {
    Vec3 z{0.0, 0.0, 1.0};
    double c = dot(z, axis);
    if (c > 1.0 - 1e-12) return {1.0, 0.0, 0.0, 0.0};
    if (c < -1.0 + 1e-12) return {0.0, 1.0, 0.0, 0.0};  // 180 deg about x
    Vec3 a = cross(z, axis);
    Quat q{1.0 + c, a.x, a.y, a.z};
    return normalized(q);
}

struct SurfacePoint {
    Vec3 position;
    Vec3 normal;
    Vec3 color;
};

}  // namespace

SyntheticScene make_scene(SceneKind kind, const SynthParams& p, std::uint64_t seed) {
    if (p.grid_n < 2) throw std::invalid_argument("make_scene: grid_n must be >= 2");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    // Surface sample points with normals and colors.
    std::vector<SurfacePoint> surface;
    const double ext = p.extent;
    const double spacing = 2.0 * ext / p.grid_n;
    auto grid_coord = [&](int i) { return -ext + (i + 0.5) * spacing; };

    if (kind == SceneKind::plane || kind == SceneKind::checkerboard) {
        for (int j = 0; j < p.grid_n; ++j) {
            for (int i = 0; i < p.grid_n; ++i) {
                double u = grid_coord(i), v = grid_coord(j);
                Vec3 c = kind == SceneKind::checkerboard
                             ? Vec3{1.0, 1.0, 1.0} * checker_value(u, v, ext, p.checker_freq)
                             : plane_color(u, v, ext);
                surface.push_back({{u, v, 0.0}, {0.0, 0.0, 1.0}, c});
            }
        }
    } else {  // box: five faces visible from an elevated ring (all but the bottom)
        const double half = 0.6 * ext;
        struct Face {
            Vec3 normal, tangent_u, tangent_v;
            Vec3 base_color;
        };
        const Face faces[5] = {
            {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}, {0.8, 0.3, 0.3}},
            {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.3, 0.8, 0.3}},
            {{-1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.3, 0.3, 0.8}},
            {{0, 1, 0}, {1, 0, 0}, {0, 0, 1}, {0.8, 0.8, 0.3}},
            {{0, -1, 0}, {1, 0, 0}, {0, 0, 1}, {0.3, 0.8, 0.8}},
        };
        const double face_spacing = 2.0 * half / p.grid_n;
        for (const Face& f : faces) {
            for (int j = 0; j < p.grid_n; ++j) {
                for (int i = 0; i < p.grid_n; ++i) {
                    double u = -half + (i + 0.5) * face_spacing;
                    double v = -half + (j + 0.5) * face_spacing;
                    Vec3 pos = f.normal * half + f.tangent_u * u + f.tangent_v * v;
                    double shade = 0.8 + 0.2 * (u + v) / (2.0 * half);
                    surface.push_back({pos, f.normal, f.base_color * shade});
                }
            }
        }
    }

    const double sigma_xy = 0.75 * spacing;
    const double sigma_n = std::fmax(p.aspect_flat * sigma_xy, 1e-4);

    SyntheticScene out;
    out.surface_sigma_normal = sigma_n;
    out.gt_scene.has_dir_color = false;
    for (const SurfacePoint& sp : surface) {
        Gaussian g;
        g.position = sp.position;
        g.log_scale = {std::log(sigma_xy), std::log(sigma_xy), std::log(sigma_n)};
        g.rotation = quat_from_z_to(sp.normal);
        g.opacity_logit = logit(p.opacity_lo + (p.opacity_hi - p.opacity_lo) * uni(rng));
        g.color_dc = color_to_dc(sp.color);
        out.gt_scene.gaussians.push_back(g);
        out.gt_points.push_back(sp.position);
    }
    out.gt_scene.scene_extent = compute_scene_extent(out.gt_scene.gaussians);

    // Cameras: a ring above the surface looking at the origin; the
    // checkerboard additionally gets an overhead view as camera 0.
    const double focal = p.focal_scale * p.image_size;
    int ring_views = p.num_views;
    if (kind == SceneKind::checkerboard && ring_views > 1) {
        out.cameras.push_back(look_at({0.0, 0.0, std::sqrt(p.ring_radius * p.ring_radius +
                                                           p.ring_height * p.ring_height)},
                                      {0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, focal, p.image_size));
        --ring_views;
    }
    for (int v = 0; v < ring_views; ++v) {
        double theta = 2.0 * std::numbers::pi * v / ring_views;
        Vec3 pos{p.ring_radius * std::cos(theta), p.ring_radius * std::sin(theta), p.ring_height};
        out.cameras.push_back(look_at(pos, {0.0, 0.0, 0.0}, {0.0, 0.0, 1.0}, focal, p.image_size));
    }

    for (const Camera& cam : out.cameras)
        out.targets.push_back(render_reference(out.gt_scene, cam));

    // Initial scene: perturbed ground truth plus planted floaters.
    out.initial = out.gt_scene;
    if (p.position_noise > 0.0) {
        std::normal_distribution<double> n(0.0, p.position_noise);
        for (Gaussian& g : out.initial.gaussians) g.position += Vec3{n(rng), n(rng), n(rng)};
    }
    if (p.scale_inflate != 1.0) {
        double d = std::log(p.scale_inflate);
        for (Gaussian& g : out.initial.gaussians)
            if (uni(rng) < p.inflate_fraction) g.log_scale += Vec3{d, d, d};
    }
    if (p.rotation_noise_deg > 0.0)
        for (Gaussian& g : out.initial.gaussians)
            g.rotation = normalized(quat_multiply(random_tilt(rng, p.rotation_noise_deg),
                                                  g.rotation));

    const int floaters = static_cast<int>(std::llround(p.floater_rate * surface.size()));
    double off_lo = p.floater_min_offset > 0.0 ? p.floater_min_offset
                                               : std::fmax(5.0 * sigma_n, 0.2 * ext);
    double off_hi = p.floater_max_offset > 0.0 ? p.floater_max_offset : off_lo + 0.25 * ext;
    for (int i = 0; i < floaters; ++i) {
        Gaussian g;
        double u = (2.0 * uni(rng) - 1.0) * 0.55 * ext;
        double v = (2.0 * uni(rng) - 1.0) * 0.55 * ext;
        double off = off_lo + (off_hi - off_lo) * uni(rng);
        if (kind == SceneKind::box) {
            g.position = {u * 0.5, v * 0.5, (uni(rng) - 0.5) * 0.4 * ext};  // inside the box
        } else {
            g.position = {u, v, -off};  // behind the plane, away from the cameras
        }
        g.log_scale = {std::log(sigma_xy), std::log(sigma_xy), std::log(sigma_xy)};
        g.rotation = {1.0, 0.0, 0.0, 0.0};
        g.opacity_logit = logit(p.floater_opacity);
        g.color_dc = color_to_dc({0.4 + 0.2 * uni(rng), 0.4, 0.5});
        out.floater_ids.push_back(static_cast<int>(out.initial.gaussians.size()));
        out.initial.gaussians.push_back(g);
    }
    out.initial.scene_extent = compute_scene_extent(out.initial.gaussians);
    return out;
}

void save_scene_bundle(const std::string& dir, const SyntheticScene& scene) {
    std::filesystem::create_directories(dir);
    save_cameras(dir + "/cameras.json", scene.cameras);
    char name[64];
    for (std::size_t v = 0; v < scene.targets.size(); ++v) {
        std::snprintf(name, sizeof(name), "/target_%03zu.ppm", v);
        write_ppm(dir + name, scene.targets[v]);
    }
    write_scene_ply(dir + "/init_scene.ply", scene.initial, true);
    write_scene_ply(dir + "/gt_scene.ply", scene.gt_scene, true);
    write_point_ply(dir + "/gt_points.ply", scene.gt_points);
    std::ofstream f(dir + "/floater_ids.txt");
    for (int id : scene.floater_ids) f << id << "\n";
}

SceneBundle load_scene_bundle(const std::string& dir) {
    SceneBundle b;
    b.cameras = load_cameras(dir + "/cameras.json");
    char name[64];
    for (std::size_t v = 0; v < b.cameras.size(); ++v) {
        std::snprintf(name, sizeof(name), "/target_%03zu.ppm", v);
        std::string path = dir + name;
        if (!std::filesystem::exists(path))
            throw std::runtime_error(path + ": target image missing");
        b.targets.push_back(read_ppm(path));
    }
    b.initial = read_scene_ply(dir + "/init_scene.ply").scene;
    if (std::filesystem::exists(dir + "/gt_points.ply"))
        b.gt_points = read_point_ply(dir + "/gt_points.ply");
    std::ifstream f(dir + "/floater_ids.txt");
    int id;
    while (f >> id) b.floater_ids.push_back(id);
    return b;
}

}  // namespace gstrim
