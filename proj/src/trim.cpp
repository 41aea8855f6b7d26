#include "gstrim/trim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace gstrim {

namespace {

// Shared contribution kernel. Traverses every visible splat per pixel (no
// early termination) so the accumulated sums match the blending equations
// exactly even for heavily occluded Gaussians.
ViewContribution contribution_pass(const GaussianScene& scene, const Camera& cam,
                                   bool normalized, double gamma) {
    const TileIndex ti = build_tile_index(scene, cam);
    const int num_tiles = ti.tile_count();
    const int num_proj = static_cast<int>(ti.gaussian_ids.size());

    struct Cell {
        double sum = 0.0;
        int count = 0;
    };
    std::vector<std::vector<Cell>> tile_cells(num_tiles);
    std::vector<double> tile_mass(num_tiles, 0.0);

#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < num_tiles; ++t) {
        const auto& list = ti.tiles[t];
        auto& cells = tile_cells[t];
        cells.assign(list.size(), {});
        int tx = t % ti.tiles_x, ty = t / ti.tiles_x;
        int x_end = std::min((tx + 1) * kTileSize, cam.width);
        int y_end = std::min((ty + 1) * kTileSize, cam.height);
        double mass = 0.0;
        for (int y = ty * kTileSize; y < y_end; ++y) {
            for (int x = tx * kTileSize; x < x_end; ++x) {
                Vec2 pix{x + 0.5, y + 0.5};
                double T = 1.0;
                for (std::size_t li = 0; li < list.size(); ++li) {
                    int k = list[li];
                    const auto& b = ti.bounds[k];
                    if (x < b[0] || x > b[1] || y < b[2] || y > b[3]) continue;
                    double alpha = eval_alpha_conic(pix - ti.projections[k].mean2d,
                                                    ti.conics[k], ti.opacities[k]);
                    if (alpha <= kAlphaFloor) continue;
                    Cell& cell = cells[li];
                    if (normalized)
                        cell.sum += std::pow(alpha, gamma) * std::pow(T, 1.0 - gamma);
                    else
                        cell.sum += alpha * T;
                    ++cell.count;
                    T *= 1.0 - alpha;
                }
                mass += 1.0 - T;
            }
        }
        tile_mass[t] = mass;
    }

    std::vector<Cell> merged(num_proj);
    double mass = 0.0;
    for (int t = 0; t < num_tiles; ++t) {
        const auto& list = ti.tiles[t];
        for (std::size_t j = 0; j < list.size(); ++j) {
            merged[list[j]].sum += tile_cells[t][j].sum;
            merged[list[j]].count += tile_cells[t][j].count;
        }
        mass += tile_mass[t];
    }

    ViewContribution out;
    out.value.assign(scene.size(), 0.0);
    out.pixel_count.assign(scene.size(), 0);
    out.opacity_mass = mass;
    for (int k = 0; k < num_proj; ++k) {
        int id = ti.gaussian_ids[k];
        out.pixel_count[id] = merged[k].count;
        if (merged[k].count == 0) continue;
        out.value[id] = normalized ? merged[k].sum / merged[k].count : merged[k].sum;
    }
    return out;
}

}  // namespace

ViewContribution contribution_single_view_raw(const GaussianScene& scene, const Camera& cam) {
    return contribution_pass(scene, cam, false, 0.0);
}

ViewContribution contribution_single_view_normalized(const GaussianScene& scene,
                                                     const Camera& cam, double gamma) {
    return contribution_pass(scene, cam, true, gamma);
}

std::vector<double> contribution_opacity_baseline(const GaussianScene& scene) {
    std::vector<double> v(scene.size());
    for (std::size_t i = 0; i < scene.size(); ++i) v[i] = scene.gaussians[i].opacity();
    return v;
}

ContributionTable contribution_multi_view(const GaussianScene& scene,
                                          const std::vector<Camera>& cameras,
                                          const TrimConfig& config) {
    if (cameras.empty()) throw std::invalid_argument("contribution_multi_view: no cameras");
    const std::size_t n = scene.size();
    ContributionTable table;

    if (config.metric == TrimConfig::Metric::opacity_baseline) {
        table.aggregated = contribution_opacity_baseline(scene);
        return table;
    }

    for (const Camera& cam : cameras) {
        ViewContribution vc =
            config.metric == TrimConfig::Metric::normalized
                ? contribution_single_view_normalized(scene, cam, config.gamma)
                : contribution_single_view_raw(scene, cam);
        table.per_view.push_back(std::move(vc.value));
        table.pixel_counts.push_back(std::move(vc.pixel_count));
    }

    table.aggregated.assign(n, 0.0);
    table.top_views.resize(n);
    const int v_count = static_cast<int>(cameras.size());
    std::vector<std::pair<double, int>> covered;
    for (std::size_t i = 0; i < n; ++i) {
        covered.clear();
        for (int v = 0; v < v_count; ++v)
            if (table.pixel_counts[v][i] > 0) covered.push_back({table.per_view[v][i], v});
        if (covered.empty()) continue;
        std::sort(covered.begin(), covered.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        int take = std::min<int>(config.top_k, static_cast<int>(covered.size()));
        double sum = 0.0;
        for (int j = 0; j < take; ++j) {
            sum += covered[j].first;
            table.top_views[i].push_back(covered[j].second);
        }
        table.aggregated[i] = sum / take;
    }
    return table;
}

TrimResult trim_step(const GaussianScene& scene, const std::vector<Camera>& cameras,
                     const TrimConfig& config) {
    if (scene.gaussians.empty()) throw std::invalid_argument("trim_step: empty scene");
    TrimResult result;
    result.table = contribution_multi_view(scene, cameras, config);

    const std::size_t n = scene.size();
    const std::size_t remove = static_cast<std::size_t>(config.fraction * n);
    if (remove < 1) {
        result.scene = scene;
        result.was_noop = true;
        return result;
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (result.table.aggregated[a] != result.table.aggregated[b])
            return result.table.aggregated[a] < result.table.aggregated[b];
        return a < b;
    });

    std::vector<char> removed(n, 0);
    for (std::size_t j = 0; j < remove; ++j) removed[order[j]] = 1;

    result.scene.scene_extent = scene.scene_extent;
    result.scene.has_dir_color = scene.has_dir_color;
    result.scene.gaussians.reserve(n - remove);
    for (std::size_t i = 0; i < n; ++i) {
        if (removed[i])
            result.removed_ids.push_back(static_cast<int>(i));
        else
            result.scene.gaussians.push_back(scene.gaussians[i]);
    }
    return result;
}

void write_contribution_csv(const std::string& path, const ContributionTable& table) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f << "gaussian_id,view_id,c_k,pixel_count\n";
    char line[96];
    for (std::size_t v = 0; v < table.per_view.size(); ++v) {
        for (std::size_t i = 0; i < table.per_view[v].size(); ++i) {
            std::snprintf(line, sizeof(line), "%zu,%zu,%.9g,%d\n", i, v, table.per_view[v][i],
                          table.pixel_counts[v][i]);
            f << line;
        }
    }
}

void write_aggregate_csv(const std::string& path, const ContributionTable& table) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f << "gaussian_id,c\n";
    char line[64];
    for (std::size_t i = 0; i < table.aggregated.size(); ++i) {
        std::snprintf(line, sizeof(line), "%zu,%.9g\n", i, table.aggregated[i]);
        f << line;
    }
}

}  // namespace gstrim
