#pragma once

#include <string>
#include <vector>

#include "gstrim/render.hpp"

namespace gstrim {

// Per-pixel derivatives of the scalar loss with respect to render outputs.
// `color` is required; `normal` may be empty (no normal-map loss). The
// background must match the one used by the corresponding render.
struct LossGradients {
    Image color;   // H x W x 3, dL/d(color image)
    Image normal;  // H x W x 3, dL/d(normal map), optional
    Vec3 background;
};

// Structure-of-arrays gradients per Gaussian. Rotation gradients are projected
// onto the unit-quaternion tangent space.
struct ParamGradients {
    std::vector<Vec3> position;
    std::vector<Vec3> log_scale;
    std::vector<Vec4> rotation;
    std::vector<double> opacity_logit;
    std::vector<Vec3> color_dc;
    std::vector<std::array<Vec3, 3>> color_rest;

    ParamGradients() = default;
    explicit ParamGradients(std::size_t n)
        : position(n), log_scale(n), rotation(n, Vec4{0.0, 0.0, 0.0, 0.0}),
          opacity_logit(n, 0.0), color_dc(n), color_rest(n) {}

    std::size_t size() const { return position.size(); }
    void accumulate(const ParamGradients& o);
    bool all_finite() const;
};

// Reverse-mode differentiation of the compositing in render(): exact analytic
// gradients of the loss whose per-pixel derivative is `loss`. Clamped and
// cutoff-zeroed alphas contribute zero gradient. The per-Gaussian reduction
// runs over tiles in a fixed order, so results are independent of thread
// count and schedule.
ParamGradients backward_render(const GaussianScene& scene, const Camera& cam,
                               const LossGradients& loss);

// Size-bucketed mean of accumulated position-gradient norms, normalized by the
// covariance determinant. Buckets below 1e-6 are out of range; empty buckets
// are absent from the result.
struct GradientStats {
    struct Bucket {
        double det_lo, det_hi;
        int count;
        double mean_normalized_norm;
    };
    std::vector<Bucket> buckets;

    std::string format_table() const;
};

GradientStats accumulate_gradient_stats(const GaussianScene& scene,
                                        const std::vector<double>& accumulated_position_norm,
                                        int window);

}  // namespace gstrim
