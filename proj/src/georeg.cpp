#include "gstrim/georeg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "gstrim/eval.hpp"
#include "gstrim/ply.hpp"

namespace gstrim {

Image depth_to_normal(const Image& median_depth, const Camera& cam, const NormalConfig& config) {
    if (config.window < 3 || config.window % 2 == 0)
        throw std::invalid_argument("depth_to_normal: window must be odd and >= 3");
    const int W = median_depth.width, H = median_depth.height;
    const int h = config.window / 2;
    Image normals(W, H, 3);

    auto back_project = [&](int x, int y) {
        double z = median_depth.at(x, y);
        return Vec3{(x + 0.5 - cam.cx) / cam.fx * z, (y + 0.5 - cam.cy) / cam.fy * z, z};
    };

#pragma omp parallel for schedule(static)
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            if (x - h < 0 || x + h >= W || y - h < 0 || y + h >= H) continue;
            bool valid = true;
            for (int dy = -h; dy <= h && valid; ++dy)
                for (int dx = -h; dx <= h; ++dx)
                    if (median_depth.at(x + dx, y + dy) <= 0.0) {
                        valid = false;
                        break;
                    }
            if (!valid) continue;

            Vec3 tl = back_project(x - h, y - h), tr = back_project(x + h, y - h);
            Vec3 bl = back_project(x - h, y + h), br = back_project(x + h, y + h);
            Vec3 t_top = tr - tl, t_bottom = br - bl;    // horizontal border tangents
            Vec3 t_left = bl - tl, t_right = br - tr;    // vertical border tangents

            const Vec3 crosses[4] = {cross(t_top, t_left), cross(t_top, t_right),
                                     cross(t_bottom, t_left), cross(t_bottom, t_right)};
            int pairs = std::clamp(config.tangent_pairs, 1, 4);
            Vec3 n;
            for (int i = 0; i < pairs; ++i) n += crosses[i];
            n *= 1.0 / pairs;
            double len = norm(n);
            if (len <= 1e-12) continue;
            n *= 1.0 / len;
            if (dot(n, back_project(x, y)) > 0.0) n = -n;
            normals.at(x, y, 0) = n.x;
            normals.at(x, y, 1) = n.y;
            normals.at(x, y, 2) = n.z;
        }
    }
    return normals;
}

namespace {

bool nonzero_pixel(const Image& img, int x, int y) {
    return img.at(x, y, 0) != 0.0 || img.at(x, y, 1) != 0.0 || img.at(x, y, 2) != 0.0;
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

double normal_consistency_loss(const Image& depth_normals, const Image& rendered_normals) {
    if (depth_normals.width != rendered_normals.width ||
        depth_normals.height != rendered_normals.height)
        throw std::invalid_argument("normal_consistency_loss: shape mismatch");
    double sum = 0.0;
    int valid = 0;
    for (int y = 0; y < depth_normals.height; ++y) {
        for (int x = 0; x < depth_normals.width; ++x) {
            if (!nonzero_pixel(depth_normals, x, y) || !nonzero_pixel(rendered_normals, x, y))
                continue;
            ++valid;
            for (int c = 0; c < 3; ++c)
                sum += std::fabs(depth_normals.at(x, y, c) - rendered_normals.at(x, y, c));
        }
    }
    return valid > 0 ? sum / valid : 0.0;
}

LossResult total_loss(const RenderOutput& out, const Image& target, const Camera& cam,
                      const NormalConfig& config) {
    if (out.color.width != target.width || out.color.height != target.height)
        throw std::invalid_argument("total_loss: target shape mismatch");
    const int W = target.width, H = target.height;
    const double inv_n = 1.0 / (static_cast<double>(W) * H * 3.0);

    LossResult res;
    res.grads.color = Image(W, H, 3);
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < out.color.data.size(); ++i) {
        double d = out.color.data[i] - target.data[i];
        abs_sum += std::fabs(d);
        res.grads.color.data[i] = config.alpha1 * sign_of(d) * inv_n;
    }
    res.photometric = abs_sum * inv_n;

    if (config.alpha2 > 0.0) {
        Image nd = depth_to_normal(out.median_depth, cam, config);
        int valid = 0;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                if (nonzero_pixel(nd, x, y) && nonzero_pixel(out.normal, x, y)) ++valid;
        res.valid_normal_pixels = valid;
        res.grads.normal = Image(W, H, 3);
        if (valid > 0) {
            double sum = 0.0;
            for (int y = 0; y < H; ++y) {
                for (int x = 0; x < W; ++x) {
                    if (!nonzero_pixel(nd, x, y) || !nonzero_pixel(out.normal, x, y)) continue;
                    for (int c = 0; c < 3; ++c) {
                        double d = out.normal.at(x, y, c) - nd.at(x, y, c);
                        sum += std::fabs(d);
                        res.grads.normal.at(x, y, c) = config.alpha2 * sign_of(d) / valid;
                    }
                }
            }
            res.normal = sum / valid;
        }
    }

    res.total = config.alpha1 * res.photometric + config.alpha2 * res.normal;
    return res;
}

namespace {

// Flat adaptive-moment state over all parameter scalars of one class.
struct MomentBuffer {
    std::vector<double> m, v;

    void init(std::size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
    }
    void remap(const std::vector<int>& source, const std::vector<char>& fresh, int stride) {
        std::vector<double> nm(source.size() * stride, 0.0), nv(source.size() * stride, 0.0);
        for (std::size_t i = 0; i < source.size(); ++i) {
            if (fresh[i]) continue;
            for (int c = 0; c < stride; ++c) {
                nm[i * stride + c] = m[static_cast<std::size_t>(source[i]) * stride + c];
                nv[i * stride + c] = v[static_cast<std::size_t>(source[i]) * stride + c];
            }
        }
        m.swap(nm);
        v.swap(nv);
    }
    void step(std::vector<double>& params, const std::vector<double>& grad, double lr,
              double bias1, double bias2) {
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
            v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
            params[i] -= lr * (m[i] / bias1) / (std::sqrt(v[i] / bias2) + eps);
        }
    }
};

struct Optimizer {
    MomentBuffer position, log_scale, rotation, opacity, color_dc, color_rest;
    long long t = 0;

    explicit Optimizer(std::size_t n) { init(n); }
    void init(std::size_t n) {
        position.init(n * 3);
        log_scale.init(n * 3);
        rotation.init(n * 4);
        opacity.init(n);
        color_dc.init(n * 3);
        color_rest.init(n * 9);
    }
    void remap(const std::vector<int>& source, const std::vector<char>& fresh) {
        position.remap(source, fresh, 3);
        log_scale.remap(source, fresh, 3);
        rotation.remap(source, fresh, 4);
        opacity.remap(source, fresh, 1);
        color_dc.remap(source, fresh, 3);
        color_rest.remap(source, fresh, 9);
    }
};

// Scene parameters flattened per class for the moment updates.
struct FlatParams {
    std::vector<double> position, log_scale, rotation, opacity, color_dc, color_rest;

    static FlatParams from_scene(const GaussianScene& s) {
        FlatParams f;
        const std::size_t n = s.size();
        f.position.resize(n * 3);
        f.log_scale.resize(n * 3);
        f.rotation.resize(n * 4);
        f.opacity.resize(n);
        f.color_dc.resize(n * 3);
        f.color_rest.resize(n * 9);
        for (std::size_t i = 0; i < n; ++i) {
            const Gaussian& g = s.gaussians[i];
            f.position[i * 3] = g.position.x;
            f.position[i * 3 + 1] = g.position.y;
            f.position[i * 3 + 2] = g.position.z;
            f.log_scale[i * 3] = g.log_scale.x;
            f.log_scale[i * 3 + 1] = g.log_scale.y;
            f.log_scale[i * 3 + 2] = g.log_scale.z;
            f.rotation[i * 4] = g.rotation.w;
            f.rotation[i * 4 + 1] = g.rotation.x;
            f.rotation[i * 4 + 2] = g.rotation.y;
            f.rotation[i * 4 + 3] = g.rotation.z;
            f.opacity[i] = g.opacity_logit;
            f.color_dc[i * 3] = g.color_dc.x;
            f.color_dc[i * 3 + 1] = g.color_dc.y;
            f.color_dc[i * 3 + 2] = g.color_dc.z;
            for (int j = 0; j < 3; ++j) {
                f.color_rest[i * 9 + j * 3] = g.color_rest[j].x;
                f.color_rest[i * 9 + j * 3 + 1] = g.color_rest[j].y;
                f.color_rest[i * 9 + j * 3 + 2] = g.color_rest[j].z;
            }
        }
        return f;
    }

    void to_scene(GaussianScene& s) const {
        for (std::size_t i = 0; i < s.size(); ++i) {
            Gaussian& g = s.gaussians[i];
            g.position = {position[i * 3], position[i * 3 + 1], position[i * 3 + 2]};
            g.log_scale = {log_scale[i * 3], log_scale[i * 3 + 1], log_scale[i * 3 + 2]};
            g.rotation = normalized(
                Quat{rotation[i * 4], rotation[i * 4 + 1], rotation[i * 4 + 2], rotation[i * 4 + 3]});
            g.opacity_logit = opacity[i];
            g.color_dc = {color_dc[i * 3], color_dc[i * 3 + 1], color_dc[i * 3 + 2]};
            for (int j = 0; j < 3; ++j)
                g.color_rest[j] = {color_rest[i * 9 + j * 3], color_rest[i * 9 + j * 3 + 1],
                                   color_rest[i * 9 + j * 3 + 2]};
        }
    }
};

std::vector<double> flatten3(const std::vector<Vec3>& v) {
    std::vector<double> f(v.size() * 3);
    for (std::size_t i = 0; i < v.size(); ++i) {
        f[i * 3] = v[i].x;
        f[i * 3 + 1] = v[i].y;
        f[i * 3 + 2] = v[i].z;
    }
    return f;
}

double mean_psnr_all_views(const GaussianScene& scene, const std::vector<Camera>& cams,
                           const std::vector<Image>& targets) {
    double sum = 0.0;
    int finite = 0;
    for (std::size_t v = 0; v < cams.size(); ++v) {
        RenderOutput out = render(scene, cams[v]);
        double p = psnr(out.color, targets[v]);
        if (std::isfinite(p)) {
            sum += p;
            ++finite;
        }
    }
    return finite > 0 ? sum / finite : std::numeric_limits<double>::infinity();
}

}  // namespace

TrainResult train(GaussianScene scene, const std::vector<Camera>& cameras,
                  const std::vector<Image>& targets, const TrainConfig& config,
                  const NormalConfig& normal_config, const DensifyConfig& densify_config,
                  const TrimConfig& trim_config) {
    if (cameras.empty() || cameras.size() != targets.size())
        throw std::invalid_argument("train: need matching cameras and targets");
    if (scene.gaussians.empty()) throw std::invalid_argument("train: empty scene");

    TrainResult result;
    Optimizer opt(scene.size());
    const double extent = scene.scene_extent;
    const double lr_decay =
        std::log(config.lr_position_final / config.lr_position) / config.iterations;

    result.eval_psnr.push_back({0, mean_psnr_all_views(scene, cameras, targets)});

    for (int it = 1; it <= config.iterations; ++it) {
        const int view = (it - 1) % static_cast<int>(cameras.size());
        RenderOutput out = render(scene, cameras[view]);
        LossResult loss = total_loss(out, targets[view], cameras[view], normal_config);

        if (!std::isfinite(loss.total)) {
            result.aborted_nan = true;
            if (!config.diagnostic_dir.empty())
                write_scene_ply(config.diagnostic_dir + "/nan_abort.ply", scene, true);
            result.log.push_back({it, loss.total, loss.photometric, loss.normal, 0.0,
                                  static_cast<int>(scene.size()), "nan_abort"});
            break;
        }

        ParamGradients grads = backward_render(scene, cameras[view], loss.grads);

        ++opt.t;
        double bias1 = 1.0 - std::pow(0.9, static_cast<double>(opt.t));
        double bias2 = 1.0 - std::pow(0.999, static_cast<double>(opt.t));
        double lr_pos = config.lr_position * std::exp(lr_decay * it) * extent;

        FlatParams params = FlatParams::from_scene(scene);
        opt.position.step(params.position, flatten3(grads.position), lr_pos, bias1, bias2);
        opt.log_scale.step(params.log_scale, flatten3(grads.log_scale), config.lr_log_scale,
                           bias1, bias2);
        {
            std::vector<double> rg(scene.size() * 4);
            for (std::size_t i = 0; i < scene.size(); ++i) {
                rg[i * 4] = grads.rotation[i].w;
                rg[i * 4 + 1] = grads.rotation[i].x;
                rg[i * 4 + 2] = grads.rotation[i].y;
                rg[i * 4 + 3] = grads.rotation[i].z;
            }
            opt.rotation.step(params.rotation, rg, config.lr_rotation, bias1, bias2);
        }
        opt.opacity.step(params.opacity, grads.opacity_logit, config.lr_opacity, bias1, bias2);
        opt.color_dc.step(params.color_dc, flatten3(grads.color_dc), config.lr_color, bias1,
                          bias2);
        if (scene.has_dir_color) {
            std::vector<double> cg(scene.size() * 9);
            for (std::size_t i = 0; i < scene.size(); ++i)
                for (int j = 0; j < 3; ++j) {
                    cg[i * 9 + j * 3] = grads.color_rest[i][j].x;
                    cg[i * 9 + j * 3 + 1] = grads.color_rest[i][j].y;
                    cg[i * 9 + j * 3 + 2] = grads.color_rest[i][j].z;
                }
            opt.color_rest.step(params.color_rest, cg, config.lr_color / 20.0, bias1, bias2);
        }
        params.to_scene(scene);

        std::string event;
        if (config.enable_densify && it % config.densify_interval == 0) {
            SplitResult sr =
                split_oversized(scene, densify_config, config.seed * 1000003ULL + it);
            if (sr.split_count > 0) {
                opt.remap(sr.source_index, sr.is_child);
                scene = std::move(sr.scene);
                ++result.densify_events;
                event = "densify";
            }
        }
        if (config.enable_trim && it % trim_config.interval == 0) {
            TrimResult tr = trim_step(scene, cameras, trim_config);
            if (!tr.was_noop) {
                std::vector<int> source;
                std::vector<char> fresh(tr.scene.size(), 0);
                source.reserve(tr.scene.size());
                std::vector<char> removed(scene.size(), 0);
                for (int id : tr.removed_ids) removed[id] = 1;
                for (std::size_t i = 0; i < scene.size(); ++i)
                    if (!removed[i]) source.push_back(static_cast<int>(i));
                opt.remap(source, fresh);
                scene = std::move(tr.scene);
                ++result.trim_events;
                event = event.empty() ? "trim" : event + "+trim";
            }
        }

        if (it % config.log_interval == 0 || it == config.iterations || !event.empty()) {
            double p = psnr(out.color, targets[view]);
            result.log.push_back({it, loss.total, loss.photometric, loss.normal, p,
                                  static_cast<int>(scene.size()), event});
        }
        if (it % config.eval_interval == 0 || it == config.iterations) {
            if (result.eval_psnr.back().first != it)
                result.eval_psnr.push_back({it, mean_psnr_all_views(scene, cameras, targets)});
        }
    }

    result.scene = std::move(scene);
    return result;
}

void write_metrics_csv(const std::string& path, const std::vector<TrainLogRecord>& log) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f << "iteration,loss,l_c,normal_loss,psnr,gaussian_count,event\n";
    char line[192];
    for (const auto& r : log) {
        std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g,%.9g,%d,%s\n", r.iteration, r.loss,
                      r.photometric, r.normal_loss, r.psnr, r.gaussian_count, r.event.c_str());
        f << line;
    }
}

}  // namespace gstrim
