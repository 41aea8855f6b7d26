#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gstrim/eval.hpp"
#include "gstrim/image.hpp"
#include "gstrim/types.hpp"

namespace gstrim {

enum class SceneKind { plane, box, checkerboard };

SceneKind scene_kind_from_string(const std::string& s);

struct SynthParams {
    int image_size = 64;
    int num_views = 6;
    double focal_scale = 1.0;   // focal = focal_scale * image_size
    double ring_radius = 2.5;
    double ring_height = 2.2;
    double extent = 1.0;        // surface half-size
    int grid_n = 14;            // surface Gaussians per axis (per face for the box)
    double aspect_flat = 0.12;  // normal-axis scale relative to tangent scale
    double opacity_lo = 0.85, opacity_hi = 0.95;
    int checker_freq = 8;       // full periods per axis

    // Initial-scene perturbations (all zero/identity keeps it equal to the
    // ground truth).
    double position_noise = 0.0;      // world units
    double scale_inflate = 1.0;       // multiplies activated scales
    double inflate_fraction = 1.0;    // share of Gaussians the inflation hits
    double rotation_noise_deg = 0.0;  // per-axis tilt, degrees
    double floater_rate = 0.0;        // round(rate * surface count) floaters appended
    double floater_opacity = 0.97;
    double floater_min_offset = 0.0;  // 0 derives max(5 * surface normal sigma, 0.2 * extent)
    double floater_max_offset = 0.0;  // 0 derives min_offset + 0.25 * extent
};

struct SyntheticScene {
    std::vector<Camera> cameras;
    std::vector<Image> targets;   // rendered from the ground-truth layout
    PointCloud gt_points;         // exactly on the surface
    GaussianScene gt_scene;
    GaussianScene initial;        // perturbed layout plus planted floaters
    std::vector<int> floater_ids;  // indices into initial.gaussians
    double surface_sigma_normal = 0.0;
};

// Deterministic given the seed. Floaters sit on the far side of the surface
// from the cameras, high-opacity, occluded in every view.
SyntheticScene make_scene(SceneKind kind, const SynthParams& params, std::uint64_t seed);

// Scene bundle directory: cameras.json, target_%03d.ppm, init_scene.ply,
// gt_scene.ply, gt_points.ply, floater_ids.txt.
void save_scene_bundle(const std::string& dir, const SyntheticScene& scene);

struct SceneBundle {
    std::vector<Camera> cameras;
    std::vector<Image> targets;
    GaussianScene initial;
    PointCloud gt_points;
    std::vector<int> floater_ids;
};

SceneBundle load_scene_bundle(const std::string& dir);

}  // namespace gstrim
