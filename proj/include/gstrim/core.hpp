#pragma once

#include <optional>

#include "gstrim/types.hpp"

namespace gstrim {

// Splatting constants. The 3-sigma cutoff and the 0.99 opacity clamp follow the
// usual splatting kernel conventions; the 1/255 floor is the renderer's
// visibility threshold and also defines pixel membership for contribution
// counting.
inline constexpr double kAlphaMax = 0.99;
inline constexpr double kCutoffPower = -4.5;      // exponent below which alpha is zeroed
inline constexpr double kCov2dFloor = 0.3;        // px^2 added to the cov2d diagonal
inline constexpr double kAlphaFloor = 1.0 / 255.0;
inline constexpr double kNearPlaneFraction = 0.01;  // of scene extent
inline constexpr double kEarlyTerminationT = 1e-4;
inline constexpr int kTileSize = 16;

// Sigma = R * diag(exp(log_scale)^2) * R^T.
Mat3 covariance_from_params(const Vec3& log_scale, const Quat& rotation);

// Unnormalized 2D query: alpha = min(opacity * exp(-0.5 * d^T cov2d^-1 d), 0.99),
// zeroed outside the 3-sigma ellipse. Returns 0 for degenerate cov2d.
double eval_gaussian_alpha(const Vec2& p, const Projected2D& proj, double opacity);

// Same evaluation against a precomputed conic (cov2d inverse); hot-loop form.
inline double eval_alpha_conic(const Vec2& d, const Mat2& conic, double opacity) {
    double power = -0.5 * (conic.a * d.x * d.x + 2.0 * conic.b * d.x * d.y + conic.c * d.y * d.y);
    if (power < kCutoffPower || power > 0.0) return 0.0;
    double alpha = opacity * std::exp(power);
    return alpha > kAlphaMax ? kAlphaMax : alpha;
}

// Normalized 3D density (reference for the normalized/unnormalized distinction).
// Throws std::invalid_argument if sigma is not positive definite.
double eval_gaussian_pdf_3d(const Vec3& x, const Vec3& mu, const Mat3& sigma);

// EWA-style perspective projection. Returns nullopt when the Gaussian is behind
// the near plane or its projected footprint degenerates.
std::optional<Projected2D> project_gaussian(const Gaussian& g, const Camera& cam,
                                            double near_plane);

// View-dependent color: 0.5 + C0*f_dc plus the degree-1 band evaluated along
// the unit direction from the camera center to the Gaussian.
Vec3 eval_color(const Gaussian& g, const Vec3& camera_center_world, bool dir_color);

inline constexpr double kSH0 = 0.28209479177387814;
inline constexpr double kSH1 = 0.4886025119029199;

}  // namespace gstrim
