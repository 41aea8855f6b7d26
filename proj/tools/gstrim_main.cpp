#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "gstrim/backward.hpp"
#include "gstrim/config.hpp"
#include "gstrim/eval.hpp"
#include "gstrim/georeg.hpp"
#include "gstrim/gradlab.hpp"
#include "gstrim/ply.hpp"
#include "gstrim/synth.hpp"

namespace fs = std::filesystem;
using namespace gstrim;

namespace {

void apply_threads(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

GaussianScene load_scene_checked(const std::string& path) {
    SceneLoadResult res = read_scene_ply(path);
    for (const std::string& w : res.warnings) std::cerr << "warning: " << path << ": " << w << "\n";
    return std::move(res.scene);
}

ConfigFile load_config(const std::string& path) {
    if (path.empty()) return ConfigFile{};
    ConfigFile cfg = ConfigFile::parse_file(path);
    return cfg;
}

void report_unused(const ConfigFile& cfg) {
    for (const std::string& k : cfg.unused_keys())
        std::cerr << "warning: config key not recognized: " << k << "\n";
}

int cmd_render(const std::string& scene_path, const std::string& cameras_path,
               const std::string& out_dir) {
    GaussianScene scene = load_scene_checked(scene_path);
    std::vector<Camera> cams = load_cameras(cameras_path);
    fs::create_directories(out_dir);
    char name[64];
    for (std::size_t v = 0; v < cams.size(); ++v) {
        RenderOutput out = render(scene, cams[v]);
        std::snprintf(name, sizeof(name), "/color_%03zu.ppm", v);
        write_ppm(out_dir + name, out.color);
        std::snprintf(name, sizeof(name), "/depth_%03zu.tgsf", v);
        write_tgsf(out_dir + name, out.median_depth);
        std::snprintf(name, sizeof(name), "/normal_%03zu.tgsf", v);
        write_tgsf(out_dir + name, out.normal);
    }
    std::printf("rendered %zu views to %s\n", cams.size(), out_dir.c_str());
    return 0;
}

int cmd_train(const std::string& scene_dir, const std::string& config_path,
              const std::string& out_path, const std::string& log_path) {
    SceneBundle bundle = load_scene_bundle(scene_dir);
    ConfigFile cfg = load_config(config_path);
    TrainConfig tc = train_config_from(cfg);
    NormalConfig nc = normal_config_from(cfg);
    DensifyConfig dc = densify_config_from(cfg, bundle.initial.scene_extent);
    TrimConfig trc = trim_config_from(cfg);
    report_unused(cfg);
    tc.diagnostic_dir = fs::path(out_path).parent_path().string();
    if (tc.diagnostic_dir.empty()) tc.diagnostic_dir = ".";

    TrainResult result = train(bundle.initial, bundle.cameras, bundle.targets, tc, nc, dc, trc);
    if (!log_path.empty()) write_metrics_csv(log_path, result.log);
    if (result.aborted_nan) {
        std::cerr << "error: training aborted on non-finite loss; diagnostic scene dumped to "
                  << tc.diagnostic_dir << "/nan_abort.ply\n";
        return 2;
    }
    write_scene_ply(out_path, result.scene, true);
    std::printf("trained %d iterations, %d trim events, %d densify events, %zu Gaussians\n",
                tc.iterations, result.trim_events, result.densify_events, result.scene.size());
    if (!result.eval_psnr.empty())
        std::printf("mean PSNR over views: %.3f dB (start %.3f dB)\n",
                    result.eval_psnr.back().second, result.eval_psnr.front().second);
    return 0;
}

int cmd_trim(const std::string& scene_path, const std::string& cameras_path,
             const std::string& config_path, const std::string& out_path,
             const std::string& dump_path) {
    GaussianScene scene = load_scene_checked(scene_path);
    std::vector<Camera> cams = load_cameras(cameras_path);
    ConfigFile cfg = load_config(config_path);
    TrimConfig tc = trim_config_from(cfg);
    report_unused(cfg);

    TrimResult result = trim_step(scene, cams, tc);
    if (result.was_noop)
        std::cerr << "warning: fraction * N < 1, nothing removed\n";
    write_scene_ply(out_path, result.scene, true);
    if (!dump_path.empty()) {
        write_contribution_csv(dump_path, result.table);
        fs::path agg = fs::path(dump_path);
        agg.replace_extension();
        write_aggregate_csv(agg.string() + "_aggregate.csv", result.table);
    }
    std::printf("removed %zu of %zu Gaussians\n", result.removed_ids.size(), scene.size());
    return 0;
}

int cmd_eval_points(const std::string& a_path, const std::string& b_path, double voxel) {
    PointCloud a = read_point_ply(a_path);
    PointCloud b = read_point_ply(b_path);
    double raw = chamfer_distance(a, b);
    PointCloud da = voxel_downsample(a, voxel);
    PointCloud db = voxel_downsample(b, voxel);
    double down = chamfer_distance(da, db);
    std::printf("chamfer raw: %.9g\n", raw);
    std::printf("chamfer downsampled (voxel %g): %.9g  (%zu vs %zu points kept)\n", voxel, down,
                da.size(), db.size());
    return 0;
}

int cmd_eval_images(const std::string& dir_a, const std::string& dir_b) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir_a))
        if (e.path().extension() == ".ppm") names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw std::runtime_error(dir_a + ": no .ppm images");
    double sum = 0.0;
    int finite = 0;
    for (const std::string& n : names) {
        Image a = read_ppm(dir_a + "/" + n);
        std::string pb = dir_b + "/" + n;
        if (!fs::exists(pb)) throw std::runtime_error(pb + ": missing counterpart image");
        Image b = read_ppm(pb);
        double p = psnr(a, b);
        std::printf("%s: %.4f dB\n", n.c_str(), p);
        if (std::isfinite(p)) {
            sum += p;
            ++finite;
        }
    }
    if (finite > 0)
        std::printf("mean: %.4f dB over %d finite of %zu images\n", sum / finite, finite,
                    names.size());
    else
        std::printf("mean: inf (all images identical)\n");
    return 0;
}

int cmd_stats(const std::string& scene_dir, const std::string& config_path) {
    SceneBundle bundle = load_scene_bundle(scene_dir);
    ConfigFile cfg = load_config(config_path);
    NormalConfig nc = normal_config_from(cfg);
    int window = cfg.get_int("stats.window", 300);
    report_unused(cfg);

    std::vector<double> accum(bundle.initial.size(), 0.0);
    for (int it = 0; it < window; ++it) {
        const Camera& cam = bundle.cameras[it % bundle.cameras.size()];
        const Image& target = bundle.targets[it % bundle.cameras.size()];
        RenderOutput out = render(bundle.initial, cam);
        LossResult loss = total_loss(out, target, cam, nc);
        ParamGradients grads = backward_render(bundle.initial, cam, loss.grads);
        for (std::size_t i = 0; i < accum.size(); ++i) accum[i] += norm(grads.position[i]);
    }
    GradientStats stats = accumulate_gradient_stats(bundle.initial, accum, window);
    std::fputs(stats.format_table().c_str(), stdout);
    return 0;
}

int cmd_grad_demo(const std::vector<double>& t_values, const std::string& sweep_path) {
    bool all_closed_hold = true;
    for (double T : t_values) {
        GradientScaleReport report = verify_inequality(T);
        std::fputs(report.format().c_str(), stdout);
        all_closed_hold = all_closed_hold && report.inequality_closed;
    }
    if (!sweep_path.empty()) {
        double T = t_values.front();
        std::ofstream f(sweep_path);
        if (!f) throw std::runtime_error(sweep_path + ": cannot open for writing");
        f << "mu,l1_quarter,l1_half\n";
        auto narrow = sweep_l1(T / 4.0, T);
        auto wide = sweep_l1(T / 2.0, T);
        char line[96];
        for (std::size_t i = 0; i < narrow.size(); ++i) {
            std::snprintf(line, sizeof(line), "%.9g,%.9g,%.9g\n", narrow[i].mu, narrow[i].l1,
                          wide[i].l1);
            f << line;
        }
        std::printf("wrote L(mu) sweep to %s\n", sweep_path.c_str());
    }
    std::printf("%s\n", all_closed_hold ? "INEQUALITY HOLDS" : "INEQUALITY FAILS");
    return 0;
}

int cmd_synth(const std::string& kind_str, const std::string& out_dir, std::uint64_t seed,
              const SynthParams& params) {
    SceneKind kind = scene_kind_from_string(kind_str);
    SyntheticScene scene = make_scene(kind, params, seed);
    save_scene_bundle(out_dir, scene);
    std::printf("wrote %s scene: %zu views, %zu Gaussians (%zu floaters) to %s\n",
                kind_str.c_str(), scene.cameras.size(), scene.initial.size(),
                scene.floater_ids.size(), out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian-splatting geometry toolkit: rendering, contribution-based trimming, "
                 "scale-driven splitting, normal regularization and geometry evaluation"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (0 = hardware default)");

    std::string scene_path, cameras_path, out_path, config_path, log_path, dump_path;

    auto* render_cmd = app.add_subcommand("render", "render color/depth/normal maps");
    render_cmd->add_option("scene", scene_path)->required();
    render_cmd->add_option("cameras", cameras_path)->required();
    render_cmd->add_option("-o,--output", out_path, "output directory")->required();

    auto* train_cmd = app.add_subcommand("train", "optimize a scene against its targets");
    train_cmd->add_option("scenedir", scene_path)->required();
    train_cmd->add_option("-c,--config", config_path);
    train_cmd->add_option("-o,--output", out_path, "output scene .ply")->required();
    train_cmd->add_option("--log", log_path, "metrics CSV path");

    auto* trim_cmd = app.add_subcommand("trim", "one contribution-based trim step");
    trim_cmd->add_option("scene", scene_path)->required();
    trim_cmd->add_option("cameras", cameras_path)->required();
    trim_cmd->add_option("-c,--config", config_path);
    trim_cmd->add_option("-o,--output", out_path)->required();
    trim_cmd->add_option("--dump", dump_path, "contribution CSV path");

    auto* eval_cmd = app.add_subcommand("eval", "geometry and image metrics");
    eval_cmd->require_subcommand(1);
    std::string eval_a, eval_b;
    double voxel = 0.0;
    auto* eval_points_cmd = eval_cmd->add_subcommand("points", "chamfer distance between clouds");
    eval_points_cmd->add_option("a", eval_a)->required();
    eval_points_cmd->add_option("b", eval_b)->required();
    eval_points_cmd->add_option("--voxel", voxel, "voxel size (0 = 0.5% of bbox diagonal)");
    auto* eval_images_cmd = eval_cmd->add_subcommand("images", "PSNR between image directories");
    eval_images_cmd->add_option("dirA", eval_a)->required();
    eval_images_cmd->add_option("dirB", eval_b)->required();

    auto* stats_cmd = app.add_subcommand("stats", "size-bucketed normalized gradient norms");
    stats_cmd->add_option("scenedir", scene_path)->required();
    stats_cmd->add_option("-c,--config", config_path);

    auto* grad_cmd = app.add_subcommand("grad-demo", "1D gradient-vs-width study");
    std::vector<double> t_values{1.0};
    std::string sweep_path;
    grad_cmd->add_option("--T", t_values, "square-wave half-periods");
    grad_cmd->add_option("--sweep", sweep_path, "write L(mu) sweep CSV");

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic scene bundle");
    std::string kind;
    std::uint64_t seed = 0;
    SynthParams params;
    synth_cmd->add_option("kind", kind, "plane | box | checkerboard")->required();
    synth_cmd->add_option("-o,--output", out_path)->required();
    synth_cmd->add_option("--seed", seed);
    synth_cmd->add_option("--floaters", params.floater_rate, "floater rate");
    synth_cmd->add_option("--views", params.num_views);
    synth_cmd->add_option("--size", params.image_size, "target image size in pixels");
    synth_cmd->add_option("--grid", params.grid_n, "surface Gaussians per axis");
    synth_cmd->add_option("--noise", params.position_noise, "initial position noise");
    synth_cmd->add_option("--inflate", params.scale_inflate, "initial scale inflation");
    synth_cmd->add_option("--rot-noise", params.rotation_noise_deg, "initial tilt, degrees");
    synth_cmd->add_option("--checker-freq", params.checker_freq);

    CLI11_PARSE(app, argc, argv);
    apply_threads(threads);

    try {
        if (*render_cmd) return cmd_render(scene_path, cameras_path, out_path);
        if (*train_cmd) return cmd_train(scene_path, config_path, out_path, log_path);
        if (*trim_cmd) return cmd_trim(scene_path, cameras_path, config_path, out_path, dump_path);
        if (*eval_points_cmd) {
            if (voxel <= 0.0) {
                PointCloud a = read_point_ply(eval_a);
                Vec3 mn = a[0], mx = a[0];
                for (const Vec3& p : a) {
                    mn = {std::fmin(mn.x, p.x), std::fmin(mn.y, p.y), std::fmin(mn.z, p.z)};
                    mx = {std::fmax(mx.x, p.x), std::fmax(mx.y, p.y), std::fmax(mx.z, p.z)};
                }
                voxel = std::fmax(0.005 * norm(mx - mn), 1e-9);
            }
            return cmd_eval_points(eval_a, eval_b, voxel);
        }
        if (*eval_images_cmd) return cmd_eval_images(eval_a, eval_b);
        if (*stats_cmd) return cmd_stats(scene_path, config_path);
        if (*grad_cmd) return cmd_grad_demo(t_values, sweep_path);
        if (*synth_cmd) return cmd_synth(kind, out_path, seed, params);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
