#pragma once

#include <vector>

#include "gstrim/image.hpp"
#include "gstrim/vec.hpp"

namespace gstrim {

using PointCloud = std::vector<Vec3>;

// Per occupied voxel, keeps the point nearest the voxel's geometric center
// (ties: lowest input index). The grid anchors at the componentwise floor of
// the cloud's minimum; output is ordered by voxel lexicographic order.
PointCloud voxel_downsample(const PointCloud& points, double voxel_size);

// Symmetric mean nearest-neighbor distance, 0.5 * (mean_a min_b |a-b| +
// mean_b min_a |a-b|). Exact; grid-accelerated with a brute-force-verified
// search. Throws on empty input.
double chamfer_distance(const PointCloud& a, const PointCloud& b);

// 10*log10(1/MSE) over all channels; +inf when the images are identical.
// Throws on shape mismatch.
double psnr(const Image& a, const Image& b);

}  // namespace gstrim
