#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gstrim/vec.hpp"

namespace gstrim {

// One splat primitive. Scales live in log space and opacity as a logit so that
// plain gradient steps cannot leave the valid domain; activations are applied
// on read.
struct Gaussian {
    Vec3 position;
    Vec3 log_scale;
    Quat rotation{1.0, 0.0, 0.0, 0.0};  // unit (w, x, y, z)
    double opacity_logit = 0.0;
    Vec3 color_dc;                        // base color coefficients (f_dc)
    std::array<Vec3, 3> color_rest{};     // degree-1 directional coefficients (f_rest), per basis

    Vec3 scales() const { return cwise_exp(log_scale); }
    double opacity() const { return sigmoid(opacity_logit); }
};

struct Camera {
    double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
    int width = 1, height = 1;
    Mat3 rotation;   // world-to-camera rotation
    Vec3 translation;  // x_cam = rotation * x_world + translation

    Vec3 to_camera(const Vec3& p_world) const { return rotation * p_world + translation; }
    Vec3 center_world() const { return rotation.transposed() * (-translation); }

    std::array<double, 16> world_to_camera_matrix() const {
        return {rotation(0, 0), rotation(0, 1), rotation(0, 2), translation.x,
                rotation(1, 0), rotation(1, 1), rotation(1, 2), translation.y,
                rotation(2, 0), rotation(2, 1), rotation(2, 2), translation.z,
                0.0, 0.0, 0.0, 1.0};
    }
    static Camera from_world_to_camera(const std::array<double, 16>& m, double fx, double fy,
                                       double cx, double cy, int width, int height) {
        Camera c;
        c.fx = fx; c.fy = fy; c.cx = cx; c.cy = cy;
        c.width = width; c.height = height;
        c.rotation.m = {{{m[0], m[1], m[2]}, {m[4], m[5], m[6]}, {m[8], m[9], m[10]}}};
        c.translation = {m[3], m[7], m[11]};
        return c;
    }
};

// Perspective projection of one Gaussian into a view.
struct Projected2D {
    Vec2 mean2d;      // pixels
    Mat2 cov2d;       // pixels^2, includes the low-pass diagonal floor
    double depth = 0.0;  // camera-space z, world units
    Vec3 normal_cam;  // shortest-axis direction in camera space, facing the camera
};

struct GaussianScene {
    std::vector<Gaussian> gaussians;
    double scene_extent = 1.0;  // bounding-sphere radius of the initial positions
    bool has_dir_color = false;  // degree-1 color coefficients in use

    std::size_t size() const { return gaussians.size(); }
};

// Bounding-sphere radius around the centroid; the scale reference for the
// near plane, split threshold and position learning rate.
double compute_scene_extent(const std::vector<Gaussian>& gaussians);

}  // namespace gstrim
