#pragma once

#include <random>
#include <vector>

#include "gstrim/core.hpp"
#include "gstrim/image.hpp"
#include "gstrim/types.hpp"

namespace gstrim::testutil {

inline double rel_err(double a, double b) {
    double denom = std::fmax(std::fabs(a), std::fabs(b));
    return denom > 0.0 ? std::fabs(a - b) / denom : 0.0;
}

inline Quat random_unit_quat(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return normalized(Quat{n(rng), n(rng), n(rng), n(rng)});
}

inline Quat quat_mul(const Quat& a, const Quat& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

// Camera at `pos` looking at `target`, y-down convention.
inline Camera make_camera(const Vec3& pos, const Vec3& target, double focal, int size,
                          const Vec3& up_hint = {0.0, 0.0, 1.0}) {
    Vec3 fwd = normalized(target - pos);
    Vec3 right = cross(fwd, up_hint);
    if (norm(right) < 1e-6) right = cross(fwd, Vec3{0.0, 1.0, 0.0});
    right = normalized(right);
    Vec3 down = cross(fwd, right);
    Camera c;
    c.fx = c.fy = focal;
    c.cx = c.cy = size / 2.0;
    c.width = c.height = size;
    c.rotation.m = {{{right.x, right.y, right.z},
                     {down.x, down.y, down.z},
                     {fwd.x, fwd.y, fwd.z}}};
    c.translation = c.rotation * (-pos);
    return c;
}

inline Camera identity_camera(double focal, double center, int size) {
    Camera c;
    c.fx = c.fy = focal;
    c.cx = c.cy = center;
    c.width = c.height = size;
    return c;
}

// Random scene in front of an identity camera at the origin looking along +z.
// Gaussians sit in a frustum-ish slab of distinct depths; opacities stay below
// the clamp region.
inline GaussianScene random_scene(std::mt19937_64& rng, int count, double spread = 1.0,
                                  bool dir_color = false) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GaussianScene scene;
    scene.has_dir_color = dir_color;
    for (int i = 0; i < count; ++i) {
        Gaussian g;
        g.position = {(2.0 * u(rng) - 1.0) * spread, (2.0 * u(rng) - 1.0) * spread,
                      3.0 + 4.0 * u(rng) + i * 1e-3};
        double s = 0.1 + 0.5 * u(rng);
        g.log_scale = {std::log(s * (0.6 + 0.8 * u(rng))), std::log(s * (0.6 + 0.8 * u(rng))),
                       std::log(s * (0.15 + 0.3 * u(rng)))};
        g.rotation = random_unit_quat(rng);
        g.opacity_logit = logit(0.15 + 0.7 * u(rng));
        g.color_dc = {(u(rng) - 0.5) / kSH0 * 0.4, (u(rng) - 0.5) / kSH0 * 0.4,
                      (u(rng) - 0.5) / kSH0 * 0.4};
        if (dir_color)
            for (int j = 0; j < 3; ++j)
                g.color_rest[j] = {(u(rng) - 0.5) * 0.2, (u(rng) - 0.5) * 0.2,
                                   (u(rng) - 0.5) * 0.2};
        scene.gaussians.push_back(g);
    }
    scene.scene_extent = compute_scene_extent(scene.gaussians);
    return scene;
}

inline double max_abs_diff(const Image& a, const Image& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::fmax(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

}  // namespace gstrim::testutil
