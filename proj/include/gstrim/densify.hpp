#pragma once

#include <cstdint>

#include "gstrim/types.hpp"

namespace gstrim {

struct DensifyConfig {
    double tau_s = 0.0;         // scale threshold, world units; callers default to 0.02 * extent
    int split_k = 2;            // children per split
    double shrink_factor = 1.6; // child scales = parent scales / shrink_factor

    static DensifyConfig for_extent(double scene_extent) {
        DensifyConfig c;
        c.tau_s = 0.02 * scene_extent;
        return c;
    }
};

struct SplitResult {
    GaussianScene scene;
    int split_count = 0;
    std::vector<int> source_index;  // per output Gaussian, the input it came from
    std::vector<char> is_child;     // per output Gaussian, 1 when freshly sampled
};

// Replaces every Gaussian whose maximum activated scale exceeds tau_s with
// split_k children. Child positions are drawn from the parent distribution
// (seeded), scales shrink by the factor, everything else is copied. Gaussians
// at or under the threshold pass through unchanged.
SplitResult split_oversized(const GaussianScene& scene, const DensifyConfig& config,
                            std::uint64_t seed);

}  // namespace gstrim
