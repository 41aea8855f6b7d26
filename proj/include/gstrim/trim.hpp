#pragma once

#include <string>
#include <vector>

#include "gstrim/render.hpp"

namespace gstrim {

struct TrimConfig {
    enum class Metric { normalized, unnormalized, opacity_baseline };

    double gamma = 0.5;     // opacity/transmittance exponent split
    int top_k = 5;          // views averaged into the multi-view score
    double fraction = 0.10; // removed per trim step
    int interval = 1000;    // iterations between trim steps during training
    Metric metric = Metric::normalized;
};

// Accumulated over one full rasterization pass, without early termination, so
// the per-pixel sums follow the blending weights exactly. A pixel belongs to a
// Gaussian's projected region when its evaluated alpha exceeds the 1/255
// visibility floor.
struct ViewContribution {
    std::vector<double> value;     // per Gaussian
    std::vector<int> pixel_count;  // |P_k| per Gaussian
    double opacity_mass = 0.0;     // sum over pixels of (1 - final transmittance)
};

// Sum of blending weights over the projected region.
ViewContribution contribution_single_view_raw(const GaussianScene& scene, const Camera& cam);

// Pixel-normalized variant: mean over the region of alpha^gamma * T^(1-gamma).
ViewContribution contribution_single_view_normalized(const GaussianScene& scene,
                                                     const Camera& cam, double gamma);

// Activated opacity per Gaussian (the pruning metric this replaces).
std::vector<double> contribution_opacity_baseline(const GaussianScene& scene);

struct ContributionTable {
    std::vector<std::vector<double>> per_view;   // [view][gaussian], empty for opacity baseline
    std::vector<std::vector<int>> pixel_counts;  // [view][gaussian]
    std::vector<double> aggregated;              // multi-view score C per Gaussian
    std::vector<std::vector<int>> top_views;     // view ids averaged per Gaussian
};

// Mean of the top-k per-view contributions, restricted to views with coverage;
// zero when no view covers the Gaussian. Per-view passes are independent.
ContributionTable contribution_multi_view(const GaussianScene& scene,
                                          const std::vector<Camera>& cameras,
                                          const TrimConfig& config);

struct TrimResult {
    GaussianScene scene;
    std::vector<int> removed_ids;  // ascending
    bool was_noop = false;         // fraction * N < 1
    ContributionTable table;
};

// Removes floor(fraction*N) Gaussians with the lowest aggregated contribution,
// ties broken by ascending id.
TrimResult trim_step(const GaussianScene& scene, const std::vector<Camera>& cameras,
                     const TrimConfig& config);

// CSV dumps: per-view rows (gaussian_id, view_id, c_k, pixel_count) and the
// aggregate (gaussian_id, c).
void write_contribution_csv(const std::string& path, const ContributionTable& table);
void write_aggregate_csv(const std::string& path, const ContributionTable& table);

}  // namespace gstrim
