#pragma once

#include <array>
#include <vector>

#include "gstrim/core.hpp"
#include "gstrim/image.hpp"

namespace gstrim {

struct RenderOptions {
    Vec3 background;                 // default black
    bool record_weights = false;
    int max_records_per_pixel = 64;  // diagnostics bound; overflow counted, deepest dropped
};

struct WeightRecord {
    int gaussian_id;
    double weight;                // alpha_i * prod_{j<i}(1 - alpha_j)
    double transmittance_before;  // T_i
};

struct RenderOutput {
    Image color;          // H x W x 3
    Image median_depth;   // H x W, 0 where no Gaussian reaches T > 0.5
    Image normal;         // H x W x 3, blended shortest-axis normals (camera space)
    Image transmittance;  // H x W, final T per pixel
    std::vector<std::vector<WeightRecord>> weight_records;  // per pixel, row-major; empty unless requested
    std::vector<int> dropped_records;                       // per pixel overflow count
};

// Per-view projection table plus per-tile depth-sorted work lists. A Gaussian
// is listed in a tile iff its 3-sigma bounding box contains at least one of
// the tile's pixel centers; ties in depth break by ascending gaussian id.
struct TileIndex {
    int tiles_x = 0, tiles_y = 0;
    std::vector<int> gaussian_ids;             // accepted projections, ascending id
    std::vector<Projected2D> projections;
    std::vector<Mat2> conics;                  // cov2d inverses
    std::vector<double> opacities;             // activated
    std::vector<Vec3> colors;                  // view-evaluated colors
    std::vector<std::array<int, 4>> bounds;    // inclusive pixel bbox {x0, x1, y0, y1}
    std::vector<std::vector<int>> tiles;       // per tile, indices into the arrays above

    int tile_count() const { return tiles_x * tiles_y; }
};

TileIndex build_tile_index(const GaussianScene& scene, const Camera& cam);

// Tiled front-to-back compositor. Tiles are independent work units and run in
// parallel; outputs are identical for any thread count.
RenderOutput render(const GaussianScene& scene, const Camera& cam,
                    const RenderOptions& options = {});

// Brute-force per-pixel compositing over all Gaussians: no tiles, no early
// termination. Correctness oracle for render's color channel.
Image render_reference(const GaussianScene& scene, const Camera& cam,
                       const Vec3& background = {});

}  // namespace gstrim
