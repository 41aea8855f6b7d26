#include "gstrim/densify.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace gstrim {

SplitResult split_oversized(const GaussianScene& scene, const DensifyConfig& config,
                            std::uint64_t seed) {
    if (config.tau_s <= 0.0) throw std::invalid_argument("split_oversized: tau_s must be > 0");
    if (config.split_k < 2) throw std::invalid_argument("split_oversized: split_k must be >= 2");
    if (config.shrink_factor <= 1.0)
        throw std::invalid_argument("split_oversized: shrink_factor must be > 1");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    const double log_shrink = std::log(config.shrink_factor);

    SplitResult out;
    out.scene.scene_extent = scene.scene_extent;
    out.scene.has_dir_color = scene.has_dir_color;
    out.scene.gaussians.reserve(scene.size());

    for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
        const Gaussian& g = scene.gaussians[i];
        Vec3 s = g.scales();
        if (max_component(s) <= config.tau_s) {
            out.scene.gaussians.push_back(g);
            out.source_index.push_back(static_cast<int>(i));
            out.is_child.push_back(0);
            continue;
        }
        ++out.split_count;
        Mat3 rot = rotation_from_quat(normalized(g.rotation));
        for (int c = 0; c < config.split_k; ++c) {
            Gaussian child = g;
            Vec3 z{unit(rng), unit(rng), unit(rng)};
            child.position = g.position + rot * Vec3{z.x * s.x, z.y * s.y, z.z * s.z};
            child.log_scale = g.log_scale - Vec3{log_shrink, log_shrink, log_shrink};
            out.scene.gaussians.push_back(child);
            out.source_index.push_back(static_cast<int>(i));
            out.is_child.push_back(1);
        }
    }
    return out;
}

}  // namespace gstrim
