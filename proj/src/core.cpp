#include "gstrim/core.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gstrim {

double compute_scene_extent(const std::vector<Gaussian>& gaussians) {
    if (gaussians.empty()) return 1.0;
    Vec3 centroid;
    for (const auto& g : gaussians) centroid += g.position;
    centroid *= 1.0 / static_cast<double>(gaussians.size());
    double r2 = 0.0;
    for (const auto& g : gaussians) r2 = std::fmax(r2, norm2(g.position - centroid));
    double r = std::sqrt(r2);
    return r > 1e-12 ? r : 1.0;
}

Mat3 covariance_from_params(const Vec3& log_scale, const Quat& rotation) {
    Mat3 r = rotation_from_quat(rotation);
    Vec3 s = cwise_exp(log_scale);
    Mat3 m = r * Mat3::diagonal(s);
    return m * m.transposed();
}

double eval_gaussian_alpha(const Vec2& p, const Projected2D& proj, double opacity) {
    if (proj.cov2d.det() <= 0.0) return 0.0;
    Mat2 conic = proj.cov2d.inverse();
    return eval_alpha_conic(p - proj.mean2d, conic, opacity);
}

double eval_gaussian_pdf_3d(const Vec3& x, const Vec3& mu, const Mat3& sigma) {
    // Positive definiteness via the leading principal minors.
    double m1 = sigma(0, 0);
    double m2 = sigma(0, 0) * sigma(1, 1) - sigma(0, 1) * sigma(1, 0);
    double m3 = sigma.det();
    if (m1 <= 0.0 || m2 <= 0.0 || m3 <= 0.0)
        throw std::invalid_argument("eval_gaussian_pdf_3d: covariance not positive definite");
    Vec3 d = x - mu;
    double maha = dot(d, sigma.inverse() * d);
    double norm_c = std::pow(2.0 * std::numbers::pi, -1.5) / std::sqrt(m3);
    return norm_c * std::exp(-0.5 * maha);
}

std::optional<Projected2D> project_gaussian(const Gaussian& g, const Camera& cam,
                                            double near_plane) {
    Vec3 xc = cam.to_camera(g.position);
    if (xc.z <= near_plane) return std::nullopt;

    Projected2D out;
    out.depth = xc.z;
    double inv_z = 1.0 / xc.z;
    out.mean2d = {cam.fx * xc.x * inv_z + cam.cx, cam.fy * xc.y * inv_z + cam.cy};

    // cov2d = J W Sigma W^T J^T with J the perspective Jacobian at xc.
    Quat qn = normalized(g.rotation);
    Mat3 sigma = covariance_from_params(g.log_scale, qn);
    double j00 = cam.fx * inv_z;
    double j02 = -cam.fx * xc.x * inv_z * inv_z;
    double j11 = cam.fy * inv_z;
    double j12 = -cam.fy * xc.y * inv_z * inv_z;
    // A = J*W, rows of the 2x3 projection of world directions to pixels.
    Vec3 a0 = cam.rotation.row(0) * j00 + cam.rotation.row(2) * j02;
    Vec3 a1 = cam.rotation.row(1) * j11 + cam.rotation.row(2) * j12;
    Vec3 sa0 = sigma * a0;
    Vec3 sa1 = sigma * a1;
    out.cov2d = {dot(a0, sa0) + kCov2dFloor, dot(a0, sa1), dot(a1, sa1) + kCov2dFloor};
    if (out.cov2d.det() <= 0.0) return std::nullopt;

    // Shortest-axis direction, rotated into camera space and flipped to face
    // the camera.
    Vec3 s = g.scales();
    int k = 0;
    if (s.y < s[k]) k = 1;
    if (s.z < s[k]) k = 2;
    Vec3 axis_world = rotation_from_quat(qn).col(k);
    Vec3 n = cam.rotation * axis_world;
    if (dot(n, xc) > 0.0) n = -n;
    out.normal_cam = n;
    return out;
}

Vec3 eval_color(const Gaussian& g, const Vec3& camera_center_world, bool dir_color) {
    Vec3 c = Vec3{0.5, 0.5, 0.5} + g.color_dc * kSH0;
    if (dir_color) {
        Vec3 d = normalized(g.position - camera_center_world);
        c += g.color_rest[0] * (-kSH1 * d.y) + g.color_rest[1] * (kSH1 * d.z) +
             g.color_rest[2] * (-kSH1 * d.x);
    }
    return c;
}

}  // namespace gstrim
