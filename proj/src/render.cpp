#include "gstrim/render.hpp"

#include <algorithm>
#include <cmath>

namespace gstrim {

TileIndex build_tile_index(const GaussianScene& scene, const Camera& cam) {
    const int n = static_cast<int>(scene.size());
    const double near_plane = kNearPlaneFraction * scene.scene_extent;
    const Vec3 cam_center = cam.center_world();

    TileIndex ti;
    ti.tiles_x = (cam.width + kTileSize - 1) / kTileSize;
    ti.tiles_y = (cam.height + kTileSize - 1) / kTileSize;

    std::vector<char> accepted(n, 0);
    std::vector<Projected2D> proj(n);
    std::vector<std::array<int, 4>> bounds(n);

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        auto p = project_gaussian(scene.gaussians[i], cam, near_plane);
        if (!p) continue;
        // Pixel-center bbox of the 3-sigma ellipse.
        double rx = 3.0 * std::sqrt(p->cov2d.a);
        double ry = 3.0 * std::sqrt(p->cov2d.c);
        int x0 = static_cast<int>(std::ceil(p->mean2d.x - rx - 0.5));
        int x1 = static_cast<int>(std::floor(p->mean2d.x + rx - 0.5));
        int y0 = static_cast<int>(std::ceil(p->mean2d.y - ry - 0.5));
        int y1 = static_cast<int>(std::floor(p->mean2d.y + ry - 0.5));
        x0 = std::max(x0, 0);
        y0 = std::max(y0, 0);
        x1 = std::min(x1, cam.width - 1);
        y1 = std::min(y1, cam.height - 1);
        if (x0 > x1 || y0 > y1) continue;
        proj[i] = *p;
        bounds[i] = {x0, x1, y0, y1};
        accepted[i] = 1;
    }

    for (int i = 0; i < n; ++i) {
        if (!accepted[i]) continue;
        ti.gaussian_ids.push_back(i);
        ti.projections.push_back(proj[i]);
        ti.conics.push_back(proj[i].cov2d.inverse());
        ti.opacities.push_back(scene.gaussians[i].opacity());
        ti.colors.push_back(eval_color(scene.gaussians[i], cam_center, scene.has_dir_color));
        ti.bounds.push_back(bounds[i]);
    }

    ti.tiles.assign(static_cast<std::size_t>(ti.tile_count()), {});
    for (int k = 0; k < static_cast<int>(ti.gaussian_ids.size()); ++k) {
        const auto& b = ti.bounds[k];
        for (int ty = b[2] / kTileSize; ty <= b[3] / kTileSize; ++ty)
            for (int tx = b[0] / kTileSize; tx <= b[1] / kTileSize; ++tx)
                ti.tiles[static_cast<std::size_t>(ty) * ti.tiles_x + tx].push_back(k);
    }

    const int num_tiles = ti.tile_count();
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < num_tiles; ++t) {
        auto& list = ti.tiles[t];
        std::sort(list.begin(), list.end(), [&](int a, int b) {
            if (ti.projections[a].depth != ti.projections[b].depth)
                return ti.projections[a].depth < ti.projections[b].depth;
            return ti.gaussian_ids[a] < ti.gaussian_ids[b];
        });
    }
    return ti;
}

RenderOutput render(const GaussianScene& scene, const Camera& cam, const RenderOptions& options) {
    TileIndex ti = build_tile_index(scene, cam);

    RenderOutput out;
    out.color = Image(cam.width, cam.height, 3);
    out.median_depth = Image(cam.width, cam.height, 1);
    out.normal = Image(cam.width, cam.height, 3);
    out.transmittance = Image(cam.width, cam.height, 1);
    if (options.record_weights) {
        out.weight_records.resize(out.color.pixel_count());
        out.dropped_records.assign(out.color.pixel_count(), 0);
    }

    const int num_tiles = ti.tile_count();
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < num_tiles; ++t) {
        const auto& list = ti.tiles[t];
        int tx = t % ti.tiles_x, ty = t / ti.tiles_x;
        int x_end = std::min((tx + 1) * kTileSize, cam.width);
        int y_end = std::min((ty + 1) * kTileSize, cam.height);
        for (int y = ty * kTileSize; y < y_end; ++y) {
            for (int x = tx * kTileSize; x < x_end; ++x) {
                Vec2 pix{x + 0.5, y + 0.5};
                double T = 1.0;
                Vec3 c_accum, n_accum;
                double median = 0.0;
                for (int k : list) {
                    if (T < kEarlyTerminationT) break;
                    const auto& b = ti.bounds[k];
                    if (x < b[0] || x > b[1] || y < b[2] || y > b[3]) continue;
                    double alpha = eval_alpha_conic(pix - ti.projections[k].mean2d,
                                                    ti.conics[k], ti.opacities[k]);
                    if (alpha <= kAlphaFloor) continue;
                    if (T > 0.5) median = ti.projections[k].depth;
                    double w = alpha * T;
                    c_accum += ti.colors[k] * w;
                    n_accum += ti.projections[k].normal_cam * w;
                    if (options.record_weights) {
                        std::size_t pi = static_cast<std::size_t>(y) * cam.width + x;
                        if (static_cast<int>(out.weight_records[pi].size()) <
                            options.max_records_per_pixel)
                            out.weight_records[pi].push_back({ti.gaussian_ids[k], w, T});
                        else
                            ++out.dropped_records[pi];
                    }
                    T *= 1.0 - alpha;
                }
                out.color.at(x, y, 0) = c_accum.x + T * options.background.x;
                out.color.at(x, y, 1) = c_accum.y + T * options.background.y;
                out.color.at(x, y, 2) = c_accum.z + T * options.background.z;
                out.transmittance.at(x, y) = T;
                out.median_depth.at(x, y) = median;
                double len = norm(n_accum);
                if (len > 1e-6) {
                    out.normal.at(x, y, 0) = n_accum.x / len;
                    out.normal.at(x, y, 1) = n_accum.y / len;
                    out.normal.at(x, y, 2) = n_accum.z / len;
                }
            }
        }
    }
    return out;
}

Image render_reference(const GaussianScene& scene, const Camera& cam, const Vec3& background) {
    const int n = static_cast<int>(scene.size());
    const double near_plane = kNearPlaneFraction * scene.scene_extent;
    const Vec3 cam_center = cam.center_world();

    struct Entry {
        int id;
        Projected2D proj;
        Mat2 conic;
        double opacity;
        Vec3 color;
    };
    std::vector<Entry> entries;
    for (int i = 0; i < n; ++i) {
        auto p = project_gaussian(scene.gaussians[i], cam, near_plane);
        if (!p) continue;
        entries.push_back({i, *p, p->cov2d.inverse(), scene.gaussians[i].opacity(),
                           eval_color(scene.gaussians[i], cam_center, scene.has_dir_color)});
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.proj.depth != b.proj.depth) return a.proj.depth < b.proj.depth;
        return a.id < b.id;
    });

    Image img(cam.width, cam.height, 3);
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            Vec2 pix{x + 0.5, y + 0.5};
            double T = 1.0;
            Vec3 c_accum;
            for (const auto& e : entries) {
                double alpha = eval_alpha_conic(pix - e.proj.mean2d, e.conic, e.opacity);
                if (alpha <= kAlphaFloor) continue;
                c_accum += e.color * (alpha * T);
                T *= 1.0 - alpha;
            }
            img.at(x, y, 0) = c_accum.x + T * background.x;
            img.at(x, y, 1) = c_accum.y + T * background.y;
            img.at(x, y, 2) = c_accum.z + T * background.z;
        }
    }
    return img;
}

}  // namespace gstrim
