#pragma once

#include <string>
#include <vector>

#include "gstrim/eval.hpp"
#include "gstrim/types.hpp"

namespace gstrim {

// Scene files are PLY with per-vertex float properties in the common splat
// checkpoint layout: x y z, scale_0..2 (log), rot_0..3 (quaternion wxyz),
// opacity (logit), f_dc_0..2, optional f_rest_0..8. Extra properties are
// ignored; f_rest fields beyond the first 9 produce a warning. scene_extent
// is recomputed from the positions on load.
struct SceneLoadResult {
    GaussianScene scene;
    std::vector<std::string> warnings;
};

void write_scene_ply(const std::string& path, const GaussianScene& scene, bool binary);
SceneLoadResult read_scene_ply(const std::string& path);

// Plain point clouds: element vertex with float x y z. Written as ASCII.
void write_point_ply(const std::string& path, const PointCloud& points);
PointCloud read_point_ply(const std::string& path);

}  // namespace gstrim
