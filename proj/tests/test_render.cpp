#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gstrim/render.hpp"
#include "test_util.hpp"

using namespace gstrim;
using namespace gstrim::testutil;

namespace {

// Large flat disk facing an identity camera; alpha is near the activated
// opacity across the whole image when scale >> image footprint.
Gaussian wall(double z, double opacity, const Vec3& color, double scale = 50.0) {
    Gaussian g;
    g.position = {0.0, 0.0, z};
    g.log_scale = {std::log(scale), std::log(scale), std::log(scale / 100.0)};
    g.opacity_logit = logit(opacity);
    g.color_dc = (color - Vec3{0.5, 0.5, 0.5}) * (1.0 / kSH0);
    return g;
}

GaussianScene wall_scene(std::initializer_list<Gaussian> gs) {
    GaussianScene s;
    s.gaussians = gs;
    s.scene_extent = 1.0;
    return s;
}

}  // namespace

TEST_CASE("tile index: single small Gaussian lands only in the center tile") {
    Camera cam = identity_camera(64.0, 24.0, 48);  // 3x3 tiles, axis hits tile (1,1) center
    GaussianScene scene;
    scene.scene_extent = 1.0;
    Gaussian g;
    g.position = {0.0, 0.0, 4.0};
    // 3 sigma extent of ~2 px: sigma_px = fx * s / z -> s = 0.66px * z / fx
    double s = 0.66 * 4.0 / 64.0;
    g.log_scale = {std::log(s), std::log(s), std::log(s)};
    g.opacity_logit = logit(0.9);
    scene.gaussians.push_back(g);

    TileIndex ti = build_tile_index(scene, cam);
    REQUIRE(ti.gaussian_ids.size() == 1);
    REQUIRE(ti.tiles_x == 3);
    int populated = 0, populated_tile = -1;
    for (int t = 0; t < ti.tile_count(); ++t)
        if (!ti.tiles[t].empty()) {
            ++populated;
            populated_tile = t;
        }
    CHECK(populated == 1);
    CHECK(populated_tile == 1 * ti.tiles_x + 1);
}

TEST_CASE("tile index: per-tile lists are depth sorted") {
    Camera cam = identity_camera(64.0, 32.0, 64);
    GaussianScene scene = wall_scene({wall(4.0, 0.5, {1, 0, 0}), wall(2.0, 0.5, {0, 1, 0})});
    TileIndex ti = build_tile_index(scene, cam);
    for (const auto& list : ti.tiles) {
        REQUIRE(list.size() == 2);
        CHECK(ti.projections[list[0]].depth == doctest::Approx(2.0));
        CHECK(ti.projections[list[1]].depth == doctest::Approx(4.0));
    }
}

TEST_CASE("tile membership equals the per-pixel-center bbox oracle") {
    std::mt19937_64 rng(21);
    Camera cam = identity_camera(48.0, 24.0, 48);
    GaussianScene scene = random_scene(rng, 100, 2.0);
    TileIndex ti = build_tile_index(scene, cam);

    // Brute force: every pixel center inside a projection's 3-sigma bounding
    // box marks that pixel's tile.
    std::vector<std::set<int>> expected(ti.tile_count());
    for (std::size_t k = 0; k < ti.gaussian_ids.size(); ++k) {
        const Projected2D& p = ti.projections[k];
        double rx = 3.0 * std::sqrt(p.cov2d.a), ry = 3.0 * std::sqrt(p.cov2d.c);
        for (int y = 0; y < cam.height; ++y)
            for (int x = 0; x < cam.width; ++x) {
                double px = x + 0.5, py = y + 0.5;
                if (std::fabs(px - p.mean2d.x) <= rx && std::fabs(py - p.mean2d.y) <= ry)
                    expected[(y / kTileSize) * ti.tiles_x + (x / kTileSize)].insert(
                        static_cast<int>(k));
            }
    }
    for (int t = 0; t < ti.tile_count(); ++t) {
        std::set<int> got(ti.tiles[t].begin(), ti.tiles[t].end());
        CHECK(got == expected[t]);
    }
}

TEST_CASE("single opaque wall blends to its color") {
    Camera cam = identity_camera(64.0, 32.0, 64);
    GaussianScene scene = wall_scene({wall(3.0, 0.9999, {1, 0, 0})});
    RenderOutput out = render(scene, cam);
    // Alpha clamps at 0.99 everywhere the wall covers.
    CHECK(out.color.at(32, 32, 0) == doctest::Approx(0.99).epsilon(1e-6));
    CHECK(out.color.at(32, 32, 1) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(out.transmittance.at(32, 32) == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(out.median_depth.at(32, 32) == doctest::Approx(3.0));
}

TEST_CASE("two-layer blend and median depth follow the transmittance rule") {
    Camera cam = identity_camera(64.0, 32.0, 64);

    // Front alpha 0.6: T before the rear Gaussian is 0.4 < 0.5, so the median
    // sticks with the front surface.
    {
        GaussianScene scene =
            wall_scene({wall(4.0, 0.9, {0, 1, 0}), wall(2.0, 0.6, {1, 0, 0})});
        RenderOutput out = render(scene, cam);
        CHECK(out.color.at(32, 32, 0) == doctest::Approx(0.6).epsilon(1e-5));
        CHECK(out.color.at(32, 32, 1) == doctest::Approx(0.9 * 0.4).epsilon(1e-5));
        CHECK(out.median_depth.at(32, 32) == doctest::Approx(2.0));
    }
    // Front alpha 0.3: T before the rear Gaussian is 0.7 > 0.5, so the median
    // takes the max qualifying depth.
    {
        GaussianScene scene =
            wall_scene({wall(4.0, 0.9, {0, 1, 0}), wall(2.0, 0.3, {1, 0, 0})});
        RenderOutput out = render(scene, cam);
        CHECK(out.median_depth.at(32, 32) == doctest::Approx(4.0));
    }
}

TEST_CASE("empty pixels take the background color") {
    Camera cam = identity_camera(64.0, 32.0, 64);
    GaussianScene scene;
    scene.scene_extent = 1.0;
    Gaussian g;
    g.position = {0.0, 0.0, 4.0};
    g.log_scale = {std::log(0.05), std::log(0.05), std::log(0.01)};
    g.opacity_logit = logit(0.9);
    scene.gaussians.push_back(g);

    RenderOptions opt;
    opt.background = {0.2, 0.3, 0.4};
    RenderOutput out = render(scene, cam, opt);
    CHECK(out.color.at(1, 1, 0) == doctest::Approx(0.2));
    CHECK(out.color.at(1, 1, 2) == doctest::Approx(0.4));
    CHECK(out.transmittance.at(1, 1) == doctest::Approx(1.0));
    CHECK(out.median_depth.at(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("render matches the brute-force reference on random scenes") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 6; ++trial) {
        GaussianScene scene = random_scene(rng, 60 + 20 * trial, 1.5, trial % 2 == 1);
        Camera cam = make_camera({0.2 * trial, -0.3, -1.0}, {0, 0, 5.0}, 60.0, 64);
        RenderOutput tiled = render(scene, cam);
        Image ref = render_reference(scene, cam);
        CHECK(max_abs_diff(tiled.color, ref) < 1e-4);
    }
}

TEST_CASE("blend weights partition opacity mass per pixel") {
    std::mt19937_64 rng(44);
    GaussianScene scene = random_scene(rng, 120, 1.5);
    Camera cam = identity_camera(56.0, 32.0, 64);
    RenderOptions opt;
    opt.record_weights = true;
    opt.max_records_per_pixel = 256;
    RenderOutput out = render(scene, cam, opt);

    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            std::size_t pi = static_cast<std::size_t>(y) * cam.width + x;
            CHECK(out.dropped_records[pi] == 0);
            double sum = 0.0, last_t = 1.0;
            for (const WeightRecord& r : out.weight_records[pi]) {
                CHECK(r.weight > 0.0);
                CHECK(r.weight <= 1.0);
                CHECK(r.transmittance_before <= last_t + 1e-12);
                last_t = r.transmittance_before;
                sum += r.weight;
            }
            CHECK(sum + out.transmittance.at(x, y) == doctest::Approx(1.0).epsilon(1e-5));
        }
    }
}

TEST_CASE("weight record cap drops deepest entries with a counter") {
    Camera cam = identity_camera(64.0, 32.0, 64);
    GaussianScene scene;
    scene.scene_extent = 1.0;
    for (int i = 0; i < 12; ++i) scene.gaussians.push_back(wall(2.0 + 0.1 * i, 0.2, {1, 1, 1}));
    RenderOptions opt;
    opt.record_weights = true;
    opt.max_records_per_pixel = 5;
    RenderOutput out = render(scene, cam, opt);
    std::size_t pi = 32 * 64 + 32;
    CHECK(out.weight_records[pi].size() == 5);
    CHECK(out.dropped_records[pi] == 7);
    // Kept records are the frontmost ones.
    CHECK(out.weight_records[pi][0].gaussian_id == 0);
    CHECK(out.weight_records[pi][4].gaussian_id == 4);
}

TEST_CASE("outputs are invariant to storage order and thread count") {
    std::mt19937_64 rng(55);
    GaussianScene scene = random_scene(rng, 80, 1.5);
    Camera cam = identity_camera(56.0, 32.0, 64);
    RenderOutput base = render(scene, cam);

    GaussianScene shuffled = scene;
    std::shuffle(shuffled.gaussians.begin(), shuffled.gaussians.end(), rng);
    RenderOutput moved = render(shuffled, cam);
    CHECK(max_abs_diff(base.color, moved.color) < 1e-6);
    CHECK(max_abs_diff(base.median_depth, moved.median_depth) < 1e-6);
    CHECK(max_abs_diff(base.normal, moved.normal) < 1e-6);

#ifdef _OPENMP
    int saved = omp_get_max_threads();
    omp_set_num_threads(3);
    RenderOutput threaded = render(scene, cam);
    omp_set_num_threads(saved);
    CHECK(max_abs_diff(base.color, threaded.color) == 0.0);
    CHECK(max_abs_diff(base.transmittance, threaded.transmittance) == 0.0);
#endif
}

TEST_CASE("occluder never increases a rear Gaussian's weight") {
    std::mt19937_64 rng(66);
    Camera cam = identity_camera(56.0, 32.0, 64);
    GaussianScene scene = random_scene(rng, 30, 1.0);
    RenderOptions opt;
    opt.record_weights = true;
    opt.max_records_per_pixel = 64;
    RenderOutput before = render(scene, cam, opt);

    GaussianScene occluded = scene;
    occluded.gaussians.push_back(wall(1.0, 0.7, {1, 1, 1}));
    RenderOutput after = render(occluded, cam, opt);

    auto weight_of = [&](const RenderOutput& out, std::size_t pi, int id) {
        for (const WeightRecord& r : out.weight_records[pi])
            if (r.gaussian_id == id) return r.weight;
        return 0.0;
    };
    for (std::size_t pi = 0; pi < before.weight_records.size(); pi += 7) {
        for (int id = 0; id < 30; ++id)
            CHECK(weight_of(after, pi, id) <= weight_of(before, pi, id) + 1e-12);
    }
}
