#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gstrim/backward.hpp"
#include "gstrim/densify.hpp"
#include "gstrim/trim.hpp"

namespace gstrim {

struct NormalConfig {
    int window = 3;         // odd, >= 3
    int tangent_pairs = 4;  // corner crosses sampled per window, 1..4
    double alpha1 = 1.0;    // photometric weight
    double alpha2 = 0.05;   // normal-consistency weight
};

// Normals from a median-depth map: back-project the k x k window, cross the
// sampled horizontal/vertical border tangents, average, renormalize, face the
// camera. Windows touching a zero-depth sentinel (or the image border) emit
// the zero normal. Output is in camera space, like the rendered normal map.
Image depth_to_normal(const Image& median_depth, const Camera& cam, const NormalConfig& config);

// Mean over pixels where both normals are nonzero of the channel-summed
// absolute difference; 0 when no pixel is valid.
double normal_consistency_loss(const Image& depth_normals, const Image& rendered_normals);

struct LossResult {
    double total = 0.0;
    double photometric = 0.0;  // mean absolute color error
    double normal = 0.0;       // consistency term, unweighted
    int valid_normal_pixels = 0;
    LossGradients grads;  // fed to backward_render; depth normals are a constant target
};

LossResult total_loss(const RenderOutput& out, const Image& target, const Camera& cam,
                      const NormalConfig& config);

struct TrainConfig {
    int iterations = 7000;
    int densify_interval = 500;
    int log_interval = 100;
    int eval_interval = 500;  // full PSNR sweep over all views
    std::uint64_t seed = 0;
    bool enable_trim = true;
    bool enable_densify = true;
    double lr_position = 1.6e-4;  // x scene extent, decays exponentially to lr_position_final
    double lr_position_final = 1.6e-6;
    double lr_log_scale = 5e-3;
    double lr_rotation = 1e-3;
    double lr_opacity = 5e-2;
    double lr_color = 2.5e-3;
    std::string diagnostic_dir;  // scene dump target on numerical abort, empty disables
};

struct TrainLogRecord {
    int iteration;
    double loss, photometric, normal_loss, psnr;
    int gaussian_count;
    std::string event;  // "", "trim", "densify" or "densify+trim"
};

struct TrainResult {
    GaussianScene scene;
    std::vector<TrainLogRecord> log;
    std::vector<std::pair<int, double>> eval_psnr;  // (iteration, mean over all views)
    int trim_events = 0;
    int densify_events = 0;
    bool aborted_nan = false;
};

// One view per iteration, round-robin; adaptive moment updates per parameter
// class; splits every densify interval, trims every trim interval over all
// views. Deterministic for a fixed seed.
TrainResult train(GaussianScene scene, const std::vector<Camera>& cameras,
                  const std::vector<Image>& targets, const TrainConfig& config,
                  const NormalConfig& normal_config, const DensifyConfig& densify_config,
                  const TrimConfig& trim_config);

void write_metrics_csv(const std::string& path, const std::vector<TrainLogRecord>& log);

}  // namespace gstrim
