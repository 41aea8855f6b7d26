#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "gstrim/trim.hpp"
#include "test_util.hpp"

using namespace gstrim;
using namespace gstrim::testutil;

namespace {

Gaussian wall(double z, double opacity, double scale = 50.0) {
    Gaussian g;
    g.position = {0.0, 0.0, z};
    g.log_scale = {std::log(scale), std::log(scale), std::log(scale / 100.0)};
    g.opacity_logit = logit(opacity);
    return g;
}

// Independent oracle: per-pixel compositing via the scalar core ops only (no
// tiles, no shared kernel).
struct BruteContrib {
    std::vector<double> raw, normalized;
    std::vector<int> count;
    double opacity_mass = 0.0;
};

BruteContrib brute_force_contribution(const GaussianScene& scene, const Camera& cam,
                                      double gamma) {
    const double near_plane = kNearPlaneFraction * scene.scene_extent;
    struct Entry {
        int id;
        Projected2D proj;
        double opacity;
    };
    std::vector<Entry> entries;
    for (std::size_t i = 0; i < scene.size(); ++i) {
        auto p = project_gaussian(scene.gaussians[i], cam, near_plane);
        if (p) entries.push_back({static_cast<int>(i), *p, scene.gaussians[i].opacity()});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.proj.depth != b.proj.depth) return a.proj.depth < b.proj.depth;
        return a.id < b.id;
    });

    BruteContrib out;
    out.raw.assign(scene.size(), 0.0);
    out.normalized.assign(scene.size(), 0.0);
    out.count.assign(scene.size(), 0);
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            Vec2 pix{x + 0.5, y + 0.5};
            double t = 1.0;
            for (const Entry& e : entries) {
                double alpha = eval_gaussian_alpha(pix, e.proj, e.opacity);
                if (alpha <= kAlphaFloor) continue;
                out.raw[e.id] += alpha * t;
                out.normalized[e.id] += std::pow(alpha, gamma) * std::pow(t, 1.0 - gamma);
                ++out.count[e.id];
                t *= 1.0 - alpha;
            }
            out.opacity_mass += 1.0 - t;
        }
    }
    for (std::size_t i = 0; i < scene.size(); ++i)
        if (out.count[i] > 0) out.normalized[i] /= out.count[i];
    return out;
}

std::vector<Camera> ring_cameras(int count, int size = 48) {
    std::vector<Camera> cams;
    for (int v = 0; v < count; ++v) {
        double th = 2.0 * 3.14159265358979 * v / count;
        cams.push_back(make_camera({2.5 * std::cos(th), 2.5 * std::sin(th), 2.2}, {0, 0, 0},
                                   static_cast<double>(size), size));
    }
    return cams;
}

}  // namespace

TEST_CASE("raw contribution of an unoccluded near-uniform wall") {
    Camera cam = identity_camera(64.0, 32.0, 64);
    GaussianScene scene;
    scene.scene_extent = 1.0;
    scene.gaussians.push_back(wall(3.0, 0.5, 400.0));

    ViewContribution vc = contribution_single_view_raw(scene, cam);
    CHECK(vc.pixel_count[0] == 64 * 64);
    CHECK(vc.value[0] == doctest::Approx(0.5 * 64 * 64).epsilon(1e-4));
}

TEST_CASE("raw contribution behind an opaque occluder") {
    Camera cam = identity_camera(64.0, 32.0, 64);
    GaussianScene scene;
    scene.scene_extent = 1.0;
    scene.gaussians.push_back(wall(5.0, 0.5));
    scene.gaussians.push_back(wall(2.0, 0.999));  // clamps to alpha 0.99

    ViewContribution vc = contribution_single_view_raw(scene, cam);
    // Transmittance behind the clamped front wall is 0.01 everywhere.
    CHECK(vc.value[0] == doctest::Approx(0.5 * 0.01 * 64 * 64).epsilon(1e-3));
}

TEST_CASE("normalized contribution of an unoccluded uniform splat") {
    Camera cam = identity_camera(64.0, 32.0, 64);
    GaussianScene scene;
    scene.scene_extent = 1.0;
    scene.gaussians.push_back(wall(3.0, 0.64));

    ViewContribution vc = contribution_single_view_normalized(scene, cam, 0.5);
    CHECK(vc.value[0] == doctest::Approx(0.8).epsilon(1e-4));
}

TEST_CASE("gamma = 1 ignores occlusion; gamma < 1 is strictly occlusion sensitive") {
    Camera cam = identity_camera(64.0, 32.0, 64);
    GaussianScene bare;
    bare.scene_extent = 1.0;
    bare.gaussians.push_back(wall(5.0, 0.7));

    GaussianScene occluded = bare;
    occluded.gaussians.push_back(wall(2.0, 0.9));

    double bare_g1 = contribution_single_view_normalized(bare, cam, 1.0).value[0];
    double occ_g1 = contribution_single_view_normalized(occluded, cam, 1.0).value[0];
    CHECK(bare_g1 == doctest::Approx(occ_g1).epsilon(1e-12));

    for (double gamma : {0.0, 0.25, 0.5, 0.75}) {
        double bare_g = contribution_single_view_normalized(bare, cam, gamma).value[0];
        double occ_g = contribution_single_view_normalized(occluded, cam, gamma).value[0];
        CHECK(occ_g < bare_g);
    }
}

TEST_CASE("contribution passes match the per-pixel brute-force oracle") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 4; ++trial) {
        GaussianScene scene = random_scene(rng, 40, 1.5);
        Camera cam = make_camera({0.3, -0.4 * trial, -1.0}, {0, 0, 5.0}, 50.0, 48);
        double gamma = 0.25 * (trial + 1);

        BruteContrib oracle = brute_force_contribution(scene, cam, gamma);
        ViewContribution raw = contribution_single_view_raw(scene, cam);
        ViewContribution norm_c = contribution_single_view_normalized(scene, cam, gamma);

        for (std::size_t i = 0; i < scene.size(); ++i) {
            CHECK(raw.value[i] == doctest::Approx(oracle.raw[i]).epsilon(1e-9));
            CHECK(raw.pixel_count[i] == oracle.count[i]);
            CHECK(norm_c.value[i] == doctest::Approx(oracle.normalized[i]).epsilon(1e-9));
        }

        // Raw conservation: weights partition the absorbed opacity mass.
        double total = 0.0;
        for (double v : raw.value) total += v;
        CHECK(total == doctest::Approx(raw.opacity_mass).epsilon(1e-9));

        // And the same identity against the renderer's transmittance map, up
        // to its early-termination allowance.
        RenderOutput out = render(scene, cam);
        double mass_from_render = 0.0;
        for (double t : out.transmittance.data) mass_from_render += 1.0 - t;
        CHECK(std::fabs(mass_from_render - raw.opacity_mass) <
              1e-4 * static_cast<double>(out.transmittance.data.size()));
    }
}

TEST_CASE("multi-view aggregation takes the mean of the top-k covered views") {
    std::mt19937_64 rng(37);
    GaussianScene scene = random_scene(rng, 25, 1.2);
    std::vector<Camera> cams = ring_cameras(7);
    TrimConfig config;
    config.top_k = 5;

    ContributionTable table = contribution_multi_view(scene, cams, config);
    REQUIRE(table.per_view.size() == cams.size());
    for (std::size_t i = 0; i < scene.size(); ++i) {
        std::vector<double> covered;
        for (std::size_t v = 0; v < cams.size(); ++v)
            if (table.pixel_counts[v][i] > 0) covered.push_back(table.per_view[v][i]);
        if (covered.empty()) {
            CHECK(table.aggregated[i] == 0.0);
            continue;
        }
        std::sort(covered.rbegin(), covered.rend());
        int take = std::min<int>(5, static_cast<int>(covered.size()));
        double mean = 0.0;
        for (int j = 0; j < take; ++j) mean += covered[j];
        mean /= take;
        CHECK(table.aggregated[i] == doctest::Approx(mean).epsilon(1e-12));
        CHECK(static_cast<int>(table.top_views[i].size()) == take);
    }

    // Single view: the aggregate is that view's value.
    ContributionTable single = contribution_multi_view(scene, {cams[0]}, config);
    for (std::size_t i = 0; i < scene.size(); ++i)
        CHECK(single.aggregated[i] == doctest::Approx(single.per_view[0][i]));

    // Permutation invariance over camera order.
    std::vector<Camera> shuffled = cams;
    std::reverse(shuffled.begin(), shuffled.end());
    ContributionTable rev = contribution_multi_view(scene, shuffled, config);
    for (std::size_t i = 0; i < scene.size(); ++i)
        CHECK(rev.aggregated[i] == doctest::Approx(table.aggregated[i]).epsilon(1e-12));
}

TEST_CASE("top-k mean arithmetic on a constructed spread") {
    // One Gaussian visible from 6 views with distinct contributions; checked
    // against the hand-computed mean of the top five.
    GaussianScene scene;
    scene.scene_extent = 1.0;
    scene.gaussians.push_back(wall(3.0, 0.6, 0.8));
    std::vector<Camera> cams;
    // Cameras at increasing distance: farther views collect smaller sums.
    for (int v = 0; v < 6; ++v)
        cams.push_back(make_camera({0.0, -0.01 * v, -1.0 - 1.2 * v}, {0, 0, 3.0}, 48.0, 48));
    TrimConfig config;
    config.top_k = 5;
    config.metric = TrimConfig::Metric::unnormalized;
    ContributionTable table = contribution_multi_view(scene, cams, config);
    std::vector<double> values;
    for (std::size_t v = 0; v < cams.size(); ++v) values.push_back(table.per_view[v][0]);
    std::sort(values.rbegin(), values.rend());
    double expect = (values[0] + values[1] + values[2] + values[3] + values[4]) / 5.0;
    CHECK(table.aggregated[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("trim_step removes the lowest-contribution fraction") {
    std::mt19937_64 rng(41);
    GaussianScene scene = random_scene(rng, 90, 1.2);
    // Ten Gaussians behind every camera: zero coverage, zero contribution.
    for (int i = 0; i < 10; ++i) {
        Gaussian g = scene.gaussians[i];
        g.position = {0.0, 0.0, -40.0 - i};
        scene.gaussians.push_back(g);
    }

    // Cameras facing the z in [3, 7] slab the random scene occupies.
    std::vector<Camera> cams;
    cams.push_back(make_camera({1.2, 1.2, -1.0}, {0, 0, 5.0}, 40.0, 48));
    cams.push_back(make_camera({-1.2, 1.2, -1.0}, {0, 0, 5.0}, 40.0, 48));
    cams.push_back(make_camera({1.2, -1.2, -1.0}, {0, 0, 5.0}, 40.0, 48));
    cams.push_back(make_camera({-1.2, -1.2, -1.0}, {0, 0, 5.0}, 40.0, 48));
    TrimConfig config;
    config.fraction = 0.10;

    TrimResult result = trim_step(scene, cams, config);
    // Precondition for the exact-separation claim: every visible Gaussian has
    // nonzero contribution, so the planted ten are the only zeros.
    for (int i = 0; i < 90; ++i) REQUIRE(result.table.aggregated[i] > 0.0);

    CHECK(result.scene.size() == 90);  // floor(0.1 * 100) = 10 removed
    REQUIRE(result.removed_ids.size() == 10);
    // Exactly the ten zero-contribution Gaussians go.
    for (int i = 0; i < 10; ++i) CHECK(result.removed_ids[i] == 90 + i);

    // Separation: removed max <= retained min.
    double removed_max = 0.0;
    std::vector<char> removed(scene.size(), 0);
    for (int id : result.removed_ids) {
        removed[id] = 1;
        removed_max = std::fmax(removed_max, result.table.aggregated[id]);
    }
    double retained_min = 1e30;
    for (std::size_t i = 0; i < scene.size(); ++i)
        if (!removed[i]) retained_min = std::fmin(retained_min, result.table.aggregated[i]);
    CHECK(removed_max <= retained_min);

    // Determinism: same inputs, same removals.
    TrimResult again = trim_step(scene, cams, config);
    CHECK(again.removed_ids == result.removed_ids);
}

TEST_CASE("trim_step is a warning no-op when fraction * N < 1") {
    GaussianScene scene;
    scene.scene_extent = 1.0;
    for (int i = 0; i < 5; ++i) scene.gaussians.push_back(wall(2.0 + i, 0.5));
    TrimConfig config;
    config.fraction = 0.1;  // 0.1 * 5 < 1
    TrimResult result = trim_step(scene, {identity_camera(48.0, 24.0, 48)}, config);
    CHECK(result.was_noop);
    CHECK(result.scene.size() == 5);
    CHECK(result.removed_ids.empty());
}

TEST_CASE("opacity baseline returns activated opacity and ranks like gamma=1 on clean splats") {
    GaussianScene scene;
    scene.scene_extent = 1.0;
    Gaussian g;
    g.opacity_logit = 0.0;
    scene.gaussians.push_back(g);
    CHECK(contribution_opacity_baseline(scene)[0] == doctest::Approx(0.5));

    // Separated identical splats with distinct opacities: the gamma = 1
    // normalized metric and the opacity baseline rank them identically.
    GaussianScene splats;
    splats.scene_extent = 1.0;
    double opacities[4] = {0.2, 0.4, 0.6, 0.8};
    for (int i = 0; i < 4; ++i) {
        Gaussian s;
        s.position = {-1.2 + 0.8 * i, 0.0, 4.0};
        s.log_scale = {std::log(0.12), std::log(0.12), std::log(0.02)};
        s.opacity_logit = logit(opacities[i]);
        splats.gaussians.push_back(s);
    }
    Camera cam = identity_camera(40.0, 32.0, 64);
    ViewContribution g1 = contribution_single_view_normalized(splats, cam, 1.0);
    std::vector<double> baseline = contribution_opacity_baseline(splats);
    for (int i = 0; i + 1 < 4; ++i) {
        CHECK(g1.value[i] < g1.value[i + 1]);
        CHECK(baseline[i] < baseline[i + 1]);
    }
}

TEST_CASE("occluded high-opacity floater: high under the baseline, low under the blend metric") {
    Camera cam = identity_camera(64.0, 32.0, 64);
    GaussianScene scene;
    scene.scene_extent = 1.0;
    scene.gaussians.push_back(wall(2.0, 0.9));   // surface
    scene.gaussians.push_back(wall(2.1, 0.85));  // second surface layer
    scene.gaussians.push_back(wall(5.0, 0.97, 0.5));  // high opacity, fully behind

    std::vector<double> baseline = contribution_opacity_baseline(scene);
    CHECK(baseline[2] > baseline[0]);
    CHECK(baseline[2] > baseline[1]);

    ViewContribution metric = contribution_single_view_normalized(scene, cam, 0.5);
    CHECK(metric.value[2] < metric.value[0]);
    CHECK(metric.value[2] < metric.value[1]);
}

TEST_CASE("contribution csv dumps") {
    std::mt19937_64 rng(47);
    GaussianScene scene = random_scene(rng, 8, 1.0);
    std::vector<Camera> cams = ring_cameras(2);
    TrimConfig config;
    ContributionTable table = contribution_multi_view(scene, cams, config);
    std::string dir = std::filesystem::temp_directory_path().string();
    write_contribution_csv(dir + "/contrib.csv", table);
    write_aggregate_csv(dir + "/contrib_aggregate.csv", table);

    std::ifstream f(dir + "/contrib.csv");
    std::string header;
    std::getline(f, header);
    CHECK(header == "gaussian_id,view_id,c_k,pixel_count");
    int lines = 0;
    std::string line;
    while (std::getline(f, line)) ++lines;
    CHECK(lines == 16);  // 8 gaussians x 2 views
}
