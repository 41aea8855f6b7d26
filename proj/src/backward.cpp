#include "gstrim/backward.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace gstrim {

void ParamGradients::accumulate(const ParamGradients& o) {
    for (std::size_t i = 0; i < size(); ++i) {
        position[i] += o.position[i];
        log_scale[i] += o.log_scale[i];
        rotation[i] += o.rotation[i];
        opacity_logit[i] += o.opacity_logit[i];
        color_dc[i] += o.color_dc[i];
        for (int j = 0; j < 3; ++j) color_rest[i][j] += o.color_rest[i][j];
    }
}

bool ParamGradients::all_finite() const {
    auto ok3 = [](const Vec3& v) {
        return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
    };
    for (std::size_t i = 0; i < size(); ++i) {
        if (!ok3(position[i]) || !ok3(log_scale[i]) || !ok3(color_dc[i])) return false;
        if (!std::isfinite(opacity_logit[i])) return false;
        if (!std::isfinite(norm(rotation[i]))) return false;
        for (int j = 0; j < 3; ++j)
            if (!ok3(color_rest[i][j])) return false;
    }
    return true;
}

namespace {

// Splat-space gradients accumulated by the rasterization backward, before the
// projection chain. dconic_* follow full-matrix calculus with the off-diagonal
// value shared by both slots.
struct SplatGrad {
    Vec2 dmean2d;
    double dconic_xx = 0.0, dconic_xy = 0.0, dconic_yy = 0.0;
    double dopacity = 0.0;
    Vec3 dcolor;
    Vec3 dnormal;

    void operator+=(const SplatGrad& o) {
        dmean2d += o.dmean2d;
        dconic_xx += o.dconic_xx;
        dconic_xy += o.dconic_xy;
        dconic_yy += o.dconic_yy;
        dopacity += o.dopacity;
        dcolor += o.dcolor;
        dnormal += o.dnormal;
    }
};

struct Blended {
    int local;     // index into the tile list
    double alpha;  // post clamp
    double t_before;
    bool clamped;
};

// d(quaternion->rotation) contracted against a rotation-matrix gradient.
Vec4 quat_grad_from_rotation_grad(const Quat& q, const Mat3& gr) {
    double w = q.w, x = q.x, y = q.y, z = q.z;
    Vec4 g;
    g.w = 2.0 * (-z * gr(0, 1) + y * gr(0, 2) + z * gr(1, 0) - x * gr(1, 2) - y * gr(2, 0) +
                 x * gr(2, 1));
    g.x = 2.0 * (y * gr(0, 1) + z * gr(0, 2) + y * gr(1, 0) - 2.0 * x * gr(1, 1) - w * gr(1, 2) +
                 z * gr(2, 0) + w * gr(2, 1) - 2.0 * x * gr(2, 2));
    g.y = 2.0 * (-2.0 * y * gr(0, 0) + x * gr(0, 1) + w * gr(0, 2) + x * gr(1, 0) + z * gr(1, 2) -
                 w * gr(2, 0) + z * gr(2, 1) - 2.0 * y * gr(2, 2));
    g.z = 2.0 * (-2.0 * z * gr(0, 0) - w * gr(0, 1) + x * gr(0, 2) + w * gr(1, 0) -
                 2.0 * z * gr(1, 1) + y * gr(1, 2) + x * gr(2, 0) + y * gr(2, 1));
    return g;
}

}  // namespace

ParamGradients backward_render(const GaussianScene& scene, const Camera& cam,
                               const LossGradients& loss) {
    const TileIndex ti = build_tile_index(scene, cam);
    const bool has_normal_loss = !loss.normal.empty();
    const int num_tiles = ti.tile_count();

    std::vector<std::vector<SplatGrad>> tile_grads(num_tiles);

#pragma omp parallel
    {
        std::vector<Blended> replay;
        replay.reserve(256);

#pragma omp for schedule(dynamic)
        for (int t = 0; t < num_tiles; ++t) {
            const auto& list = ti.tiles[t];
            auto& grads = tile_grads[t];
            grads.assign(list.size(), {});
            if (list.empty()) continue;
            int tx = t % ti.tiles_x, ty = t / ti.tiles_x;
            int x_end = std::min((tx + 1) * kTileSize, cam.width);
            int y_end = std::min((ty + 1) * kTileSize, cam.height);
            for (int y = ty * kTileSize; y < y_end; ++y) {
                for (int x = tx * kTileSize; x < x_end; ++x) {
                    Vec2 pix{x + 0.5, y + 0.5};
                    // Forward replay, identical control flow to render().
                    replay.clear();
                    double T = 1.0;
                    Vec3 v_accum;  // pre-normalization blended normal
                    for (int li = 0; li < static_cast<int>(list.size()); ++li) {
                        if (T < kEarlyTerminationT) break;
                        int k = list[li];
                        const auto& b = ti.bounds[k];
                        if (x < b[0] || x > b[1] || y < b[2] || y > b[3]) continue;
                        Vec2 d = pix - ti.projections[k].mean2d;
                        const Mat2& conic = ti.conics[k];
                        double power = -0.5 * (conic.a * d.x * d.x + 2.0 * conic.b * d.x * d.y +
                                               conic.c * d.y * d.y);
                        if (power < kCutoffPower || power > 0.0) continue;
                        double raw = ti.opacities[k] * std::exp(power);
                        double alpha = raw > kAlphaMax ? kAlphaMax : raw;
                        if (alpha <= kAlphaFloor) continue;
                        replay.push_back({li, alpha, T, raw > kAlphaMax});
                        v_accum += ti.projections[k].normal_cam * (alpha * T);
                        T *= 1.0 - alpha;
                    }
                    if (replay.empty()) continue;

                    Vec3 g_c{loss.color.at(x, y, 0), loss.color.at(x, y, 1),
                             loss.color.at(x, y, 2)};
                    Vec3 g_v;
                    if (has_normal_loss) {
                        double len = norm(v_accum);
                        if (len > 1e-6) {
                            Vec3 g_n{loss.normal.at(x, y, 0), loss.normal.at(x, y, 1),
                                     loss.normal.at(x, y, 2)};
                            Vec3 nrm = v_accum * (1.0 / len);
                            g_v = (g_n - nrm * dot(nrm, g_n)) * (1.0 / len);
                        }
                    }

                    // Suffix of downstream weighted loss terms, seeded by the
                    // background reaching the pixel through T_final.
                    double rest = T * dot(loss.background, g_c);
                    for (int r = static_cast<int>(replay.size()) - 1; r >= 0; --r) {
                        const Blended& bl = replay[r];
                        int k = list[bl.local];
                        double u = dot(ti.colors[k], g_c) +
                                   dot(ti.projections[k].normal_cam, g_v);
                        double w = bl.alpha * bl.t_before;
                        double dalpha = bl.t_before * u - rest / (1.0 - bl.alpha);
                        rest += w * u;

                        SplatGrad& sg = grads[bl.local];
                        sg.dcolor += g_c * w;
                        sg.dnormal += g_v * w;
                        if (bl.clamped) continue;  // zero subgradient at the clamp
                        double gauss = bl.alpha / ti.opacities[k];
                        sg.dopacity += dalpha * gauss;
                        double dpower = dalpha * bl.alpha;
                        Vec2 d = pix - ti.projections[k].mean2d;
                        const Mat2& conic = ti.conics[k];
                        sg.dmean2d += (conic * d) * dpower;
                        sg.dconic_xx += dpower * (-0.5 * d.x * d.x);
                        sg.dconic_xy += dpower * (-0.5 * d.x * d.y);
                        sg.dconic_yy += dpower * (-0.5 * d.y * d.y);
                    }
                }
            }
        }
    }

    // Deterministic reduction: tiles in ascending order, list order within.
    const int num_proj = static_cast<int>(ti.gaussian_ids.size());
    std::vector<SplatGrad> acc(num_proj);
    for (int t = 0; t < num_tiles; ++t) {
        const auto& list = ti.tiles[t];
        for (std::size_t j = 0; j < list.size(); ++j) acc[list[j]] += tile_grads[t][j];
    }

    // Projection chain: splat-space gradients back to Gaussian parameters.
    ParamGradients out(scene.size());
    const Vec3 cam_center = cam.center_world();
    const Mat3 w_rot = cam.rotation;

#pragma omp parallel for schedule(static)
    for (int k = 0; k < num_proj; ++k) {
        const SplatGrad& sg = acc[k];
        const int id = ti.gaussian_ids[k];
        const Gaussian& g = scene.gaussians[id];

        // Opacity activation.
        double sig = ti.opacities[k];
        out.opacity_logit[id] = sg.dopacity * sig * (1.0 - sig);

        // Color: constant per view, affine in the coefficients.
        out.color_dc[id] = sg.dcolor * kSH0;
        Vec3 dmu;
        if (scene.has_dir_color) {
            Vec3 v = g.position - cam_center;
            double len = norm(v);
            Vec3 dir = v * (1.0 / len);
            out.color_rest[id][0] = sg.dcolor * (-kSH1 * dir.y);
            out.color_rest[id][1] = sg.dcolor * (kSH1 * dir.z);
            out.color_rest[id][2] = sg.dcolor * (-kSH1 * dir.x);
            Vec3 ddir{-kSH1 * dot(g.color_rest[2], sg.dcolor),
                      -kSH1 * dot(g.color_rest[0], sg.dcolor),
                      kSH1 * dot(g.color_rest[1], sg.dcolor)};
            dmu += (ddir - dir * dot(dir, ddir)) * (1.0 / len);
        }

        // Conic -> cov2d (full-matrix calculus, dCov = -M * dConic * M).
        Mat2 g_conic{sg.dconic_xx, sg.dconic_xy, sg.dconic_yy};
        Mat2 d_cov = sandwich(ti.conics[k], g_conic) * -1.0;

        // cov2d = A Sigma A^T + floor, with A = J W.
        Vec3 xc = cam.to_camera(g.position);
        double inv_z = 1.0 / xc.z;
        double j00 = cam.fx * inv_z;
        double j02 = -cam.fx * xc.x * inv_z * inv_z;
        double j11 = cam.fy * inv_z;
        double j12 = -cam.fy * xc.y * inv_z * inv_z;
        Vec3 a0 = w_rot.row(0) * j00 + w_rot.row(2) * j02;
        Vec3 a1 = w_rot.row(1) * j11 + w_rot.row(2) * j12;

        Mat3 sigma = covariance_from_params(g.log_scale, g.rotation);
        Mat3 d_sigma = outer(a0, a0) * d_cov.a +
                       (outer(a0, a1) + outer(a1, a0)) * d_cov.b +
                       outer(a1, a1) * d_cov.c;

        Vec3 sig_a0 = sigma * a0;
        Vec3 sig_a1 = sigma * a1;
        Vec3 d_a0 = (sig_a0 * d_cov.a + sig_a1 * d_cov.b) * 2.0;
        Vec3 d_a1 = (sig_a0 * d_cov.b + sig_a1 * d_cov.c) * 2.0;

        double d_j00 = dot(d_a0, w_rot.row(0));
        double d_j02 = dot(d_a0, w_rot.row(2));
        double d_j11 = dot(d_a1, w_rot.row(1));
        double d_j12 = dot(d_a1, w_rot.row(2));

        Vec3 d_xc;
        double inv_z2 = inv_z * inv_z;
        d_xc.x = d_j02 * (-cam.fx * inv_z2);
        d_xc.y = d_j12 * (-cam.fy * inv_z2);
        d_xc.z = d_j00 * (-cam.fx * inv_z2) + d_j11 * (-cam.fy * inv_z2) +
                 d_j02 * (2.0 * cam.fx * xc.x * inv_z2 * inv_z) +
                 d_j12 * (2.0 * cam.fy * xc.y * inv_z2 * inv_z);

        // mean2d = (fx x/z + cx, fy y/z + cy).
        d_xc.x += sg.dmean2d.x * cam.fx * inv_z;
        d_xc.y += sg.dmean2d.y * cam.fy * inv_z;
        d_xc.z += -sg.dmean2d.x * cam.fx * xc.x * inv_z2 - sg.dmean2d.y * cam.fy * xc.y * inv_z2;

        dmu += w_rot.transposed() * d_xc;
        out.position[id] = dmu;

        // Sigma = M3 M3^T with M3 = R diag(s).
        Mat3 rot = rotation_from_quat(g.rotation);
        Vec3 s = g.scales();
        Mat3 m3 = rot * Mat3::diagonal(s);
        Mat3 d_m3 = d_sigma * m3 * 2.0;

        Vec3 d_log_scale;
        d_log_scale.x = dot(d_m3.col(0), rot.col(0)) * s.x;
        d_log_scale.y = dot(d_m3.col(1), rot.col(1)) * s.y;
        d_log_scale.z = dot(d_m3.col(2), rot.col(2)) * s.z;
        out.log_scale[id] = d_log_scale;

        // dR from the covariance factor and from the rendered normal.
        Mat3 d_rot = Mat3::zero();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) d_rot(r, c) = d_m3(r, c) * s[c];

        int axis = 0;
        if (s.y < s[axis]) axis = 1;
        if (s.z < s[axis]) axis = 2;
        double flip = dot(w_rot * rot.col(axis), xc) > 0.0 ? -1.0 : 1.0;
        Vec3 d_npre = sg.dnormal * flip;
        Vec3 wt_dn = w_rot.transposed() * d_npre;
        d_rot(0, axis) += wt_dn.x;
        d_rot(1, axis) += wt_dn.y;
        d_rot(2, axis) += wt_dn.z;

        Quat qn = normalized(g.rotation);
        Vec4 dq_hat = quat_grad_from_rotation_grad(qn, d_rot);
        double qlen = norm(g.rotation);
        Vec4 tangent = dq_hat - qn * dot(qn, dq_hat);
        out.rotation[id] = tangent * (1.0 / qlen);
    }
    return out;
}

GradientStats accumulate_gradient_stats(const GaussianScene& scene,
                                        const std::vector<double>& accumulated_position_norm,
                                        int window) {
    static constexpr double kEdges[] = {1e-6, 1e-5, 1e-4, 1e-3};
    double sums[4] = {0, 0, 0, 0};
    int counts[4] = {0, 0, 0, 0};

    for (std::size_t i = 0; i < scene.size(); ++i) {
        if (accumulated_position_norm[i] <= 0.0) continue;
        const Vec3& ls = scene.gaussians[i].log_scale;
        double det = std::exp(2.0 * (ls.x + ls.y + ls.z));
        if (det < kEdges[0]) continue;
        int b = 3;
        for (int j = 0; j < 3; ++j) {
            if (det < kEdges[j + 1]) {
                b = j;
                break;
            }
        }
        sums[b] += (accumulated_position_norm[i] / window) / det;
        ++counts[b];
    }

    GradientStats stats;
    for (int b = 0; b < 4; ++b) {
        if (counts[b] == 0) continue;
        double hi = b < 3 ? kEdges[b + 1] : std::numeric_limits<double>::infinity();
        stats.buckets.push_back({kEdges[b], hi, counts[b], sums[b] / counts[b]});
    }
    return stats;
}

std::string GradientStats::format_table() const {
    std::string s = "size_bucket            count  normalized_grad_norm\n";
    char line[128];
    for (const auto& b : buckets) {
        if (std::isinf(b.det_hi))
            std::snprintf(line, sizeof(line), "[%.0e, inf)      %8d  %.6g\n", b.det_lo, b.count,
                          b.mean_normalized_norm);
        else
            std::snprintf(line, sizeof(line), "[%.0e, %.0e)  %8d  %.6g\n", b.det_lo, b.det_hi,
                          b.count, b.mean_normalized_norm);
        s += line;
    }
    if (buckets.empty()) s += "(no Gaussians with nonzero accumulated gradient)\n";
    return s;
}

}  // namespace gstrim
