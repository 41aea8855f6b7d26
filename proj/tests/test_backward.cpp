#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fd_check.hpp"
#include "gstrim/backward.hpp"
#include "gstrim/georeg.hpp"
#include "test_util.hpp"

using namespace gstrim;
using namespace gstrim::testutil;

namespace {

GaussianScene single_gaussian_scene() {
    GaussianScene scene;
    scene.scene_extent = 1.0;
    Gaussian g;
    g.position = {0.1, -0.05, 4.0};
    g.log_scale = {std::log(0.35), std::log(0.25), std::log(0.06)};
    g.rotation = normalized(Quat{0.9, 0.2, -0.3, 0.1});
    g.opacity_logit = logit(0.7);
    g.color_dc = {0.4, -0.3, 0.2};
    scene.gaussians.push_back(g);
    return scene;
}

}  // namespace

TEST_CASE("rendering a scene against itself gives zero gradients") {
    GaussianScene scene = single_gaussian_scene();
    Camera cam = identity_camera(20.0, 8.0, 16);
    RenderOutput out = render(scene, cam);
    NormalConfig nc;
    nc.alpha2 = 0.0;
    LossResult loss = total_loss(out, out.color, cam, nc);
    ParamGradients grads = backward_render(scene, cam, loss.grads);
    CHECK(norm(grads.position[0]) == 0.0);
    CHECK(norm(grads.log_scale[0]) == 0.0);
    CHECK(norm(grads.rotation[0]) == 0.0);
    CHECK(grads.opacity_logit[0] == 0.0);
    CHECK(norm(grads.color_dc[0]) == 0.0);
}

TEST_CASE("single-Gaussian position gradient matches central differences at the stated step") {
    GaussianScene scene = single_gaussian_scene();
    Camera cam = identity_camera(20.0, 8.0, 16);
    std::mt19937_64 rng(9);
    LossGradients loss = random_loss_images(rng, 16, 16, false);
    FdReport report = fd_check_gradients(scene, cam, loss, 1e-4 * scene.scene_extent);
    CHECK(report.checked == 14);
    for (const auto& f : report.failures)
        MESSAGE(f.param, "[", f.gaussian, "][", f.component, "] analytic=", f.analytic,
                " numeric=", f.numeric);
    CHECK(report.ok());
}

TEST_CASE("opacity gradient pushes opacity up when rendering darker than the target") {
    GaussianScene scene = single_gaussian_scene();
    scene.gaussians[0].color_dc = {0.5, 0.5, 0.5};  // bright positive color
    Camera cam = identity_camera(20.0, 8.0, 16);
    RenderOutput out = render(scene, cam);
    Image white(16, 16, 3);
    for (auto& v : white.data) v = 1.0;
    NormalConfig nc;
    nc.alpha2 = 0.0;
    LossResult loss = total_loss(out, white, cam, nc);
    ParamGradients grads = backward_render(scene, cam, loss.grads);
    CHECK(grads.opacity_logit[0] < 0.0);  // descending the loss raises the logit
}

TEST_CASE("gradient check on random scenes, all parameter classes") {
    std::mt19937_64 rng(101);
    int total_checked = 0;
    for (int trial = 0; trial < 4; ++trial) {
        GaussianScene scene = random_scene(rng, 12, 1.2, trial % 2 == 1);
        Camera cam = make_camera({0.1 * trial - 0.2, 0.3, -0.8}, {0, 0, 5.0}, 24.0, 24);
        Vec3 bg = trial == 2 ? Vec3{0.15, 0.25, 0.35} : Vec3{};
        LossGradients loss = random_loss_images(rng, 24, 24, trial >= 1, bg);
        FdReport report =
            fd_check_gradients(scene, cam, loss, 1e-5 * scene.scene_extent, 1e-5);
        total_checked += report.checked;
        for (const auto& f : report.failures)
            MESSAGE("trial ", trial, ": ", f.param, "[", f.gaussian, "][", f.component,
                    "] analytic=", f.analytic, " numeric=", f.numeric);
        CHECK(report.ok());
    }
    CHECK(total_checked > 600);
}

TEST_CASE("Gaussians with no coverage receive exactly zero gradients") {
    GaussianScene scene = single_gaussian_scene();
    Gaussian off = scene.gaussians[0];
    off.position = {50.0, 50.0, 4.0};  // projects far outside the image
    scene.gaussians.push_back(off);
    Gaussian behind = scene.gaussians[0];
    behind.position = {0.0, 0.0, -2.0};
    scene.gaussians.push_back(behind);
    scene.scene_extent = 1.0;

    Camera cam = identity_camera(20.0, 8.0, 16);
    std::mt19937_64 rng(13);
    LossGradients loss = random_loss_images(rng, 16, 16, true);
    ParamGradients grads = backward_render(scene, cam, loss);
    for (std::size_t i = 1; i <= 2; ++i) {
        CHECK(norm(grads.position[i]) == 0.0);
        CHECK(norm(grads.log_scale[i]) == 0.0);
        CHECK(norm(grads.rotation[i]) == 0.0);
        CHECK(grads.opacity_logit[i] == 0.0);
        CHECK(norm(grads.color_dc[i]) == 0.0);
    }
}

TEST_CASE("gradients are additive over views") {
    std::mt19937_64 rng(15);
    GaussianScene scene = random_scene(rng, 10, 1.0);
    Camera cam_a = make_camera({0.0, -0.5, -1.0}, {0, 0, 5.0}, 24.0, 24);
    Camera cam_b = make_camera({0.5, 0.2, -0.9}, {0, 0, 5.0}, 24.0, 24);
    LossGradients loss_a = random_loss_images(rng, 24, 24, false);
    LossGradients loss_b = random_loss_images(rng, 24, 24, false);

    ParamGradients ga = backward_render(scene, cam_a, loss_a);
    ParamGradients gb = backward_render(scene, cam_b, loss_b);
    ParamGradients sum = backward_render(scene, cam_a, loss_a);
    sum.accumulate(gb);

    for (std::size_t i = 0; i < scene.size(); ++i) {
        CHECK(sum.position[i].x == ga.position[i].x + gb.position[i].x);
        CHECK(sum.opacity_logit[i] == ga.opacity_logit[i] + gb.opacity_logit[i]);
        CHECK(sum.rotation[i].w == ga.rotation[i].w + gb.rotation[i].w);
    }
}

TEST_CASE("symmetric pixels wanting the same correction cancel; opposite wants add") {
    // One wide mid-gray Gaussian centered midway between two adjacent pixel
    // centers. Two too-dark pixels pull the Gaussian toward themselves in
    // opposite directions, so their position gradients cancel; a white/black
    // pair agrees on the direction and the gradients add instead.
    GaussianScene scene;
    scene.scene_extent = 1.0;
    Gaussian g;
    g.position = {0.0, 0.0, 4.0};
    g.log_scale = {std::log(1.0), std::log(1.0), std::log(0.1)};
    g.opacity_logit = logit(0.8);
    g.color_dc = {0.0, 0.0, 0.0};  // renders mid-gray
    scene.gaussians.push_back(g);

    Camera cam = identity_camera(16.0, 8.0, 16);
    cam.cy = 8.5;  // mean2d lands at (8, 8.5): between pixels (7,8) and (8,8)

    LossGradients pix_a, pix_b, pix_b_opposite;
    pix_a.color = Image(16, 16, 3);
    pix_b.color = Image(16, 16, 3);
    pix_b_opposite.color = Image(16, 16, 3);
    pix_a.color.at(7, 8, 0) = -1.0;           // darker than a white target
    pix_b.color.at(8, 8, 0) = -1.0;           // also darker than a white target
    pix_b_opposite.color.at(8, 8, 0) = 1.0;   // brighter than a black target

    Vec3 grad_a = backward_render(scene, cam, pix_a).position[0];
    Vec3 grad_b = backward_render(scene, cam, pix_b).position[0];
    Vec3 grad_b_opp = backward_render(scene, cam, pix_b_opposite).position[0];
    // The lateral pulls conflict and cancel; the shared depth pull is the
    // consistent component and survives the sum.
    CHECK(std::fabs(grad_a.x) > 1e-3);
    CHECK(std::fabs(grad_b.x) > 1e-3);
    CHECK(std::fabs(grad_a.x + grad_b.x) <= 1e-6);
    CHECK(std::fabs(grad_a.x + grad_b_opp.x) > std::fabs(grad_a.x));
}

TEST_CASE("clamped alpha contributes zero gradient") {
    GaussianScene scene;
    scene.scene_extent = 1.0;
    Gaussian g;
    g.position = {0.0, 0.0, 3.0};
    g.log_scale = {std::log(60.0), std::log(60.0), std::log(0.5)};
    g.opacity_logit = 6.0;  // sigmoid ~ 0.9975, clamps everywhere on screen
    g.color_dc = {0.3, 0.3, 0.3};
    scene.gaussians.push_back(g);

    Camera cam = identity_camera(20.0, 8.0, 16);
    std::mt19937_64 rng(21);
    LossGradients loss = random_loss_images(rng, 16, 16, false);
    ParamGradients grads = backward_render(scene, cam, loss);
    CHECK(grads.opacity_logit[0] == 0.0);
    CHECK(norm(grads.position[0]) == 0.0);
    CHECK(norm(grads.log_scale[0]) == 0.0);
    // Color still flows: the blend weight itself is unclamped.
    CHECK(norm(grads.color_dc[0]) > 0.0);

    FdReport report = fd_check_gradients(scene, cam, loss, 1e-5);
    CHECK(report.ok());
}

TEST_CASE("backward is independent of thread count") {
#ifdef _OPENMP
    std::mt19937_64 rng(23);
    GaussianScene scene = random_scene(rng, 40, 1.5);
    Camera cam = identity_camera(40.0, 24.0, 48);
    LossGradients loss = random_loss_images(rng, 48, 48, true);

    int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    ParamGradients one = backward_render(scene, cam, loss);
    omp_set_num_threads(4);
    ParamGradients four = backward_render(scene, cam, loss);
    omp_set_num_threads(saved);

    for (std::size_t i = 0; i < scene.size(); ++i) {
        CHECK(one.position[i].x == four.position[i].x);
        CHECK(one.position[i].y == four.position[i].y);
        CHECK(one.log_scale[i].z == four.log_scale[i].z);
        CHECK(one.rotation[i].w == four.rotation[i].w);
        CHECK(one.opacity_logit[i] == four.opacity_logit[i]);
    }
#endif
}

TEST_CASE("gradient stats bucket by covariance determinant") {
    GaussianScene scene;
    scene.scene_extent = 1.0;
    // det = exp(2 * sum(log_scale)); pick one Gaussian per bucket.
    double targets[4] = {5e-6, 5e-5, 5e-4, 5e-3};
    for (double det : targets) {
        Gaussian g;
        double ls = std::log(det) / 6.0;
        g.log_scale = {ls, ls, ls};
        scene.gaussians.push_back(g);
    }
    std::vector<double> accum{0.3, 0.3, 0.3, 0.3};

    GradientStats stats = accumulate_gradient_stats(scene, accum, 300);
    REQUIRE(stats.buckets.size() == 4);
    for (int b = 0; b < 4; ++b) {
        CHECK(stats.buckets[b].count == 1);
        CHECK(stats.buckets[b].mean_normalized_norm ==
              doctest::Approx((0.3 / 300) / targets[b]).epsilon(1e-9));
    }
    // Zero-gradient Gaussians are excluded; empty buckets are absent.
    accum = {0.0, 0.5, 0.0, 0.0};
    stats = accumulate_gradient_stats(scene, accum, 300);
    REQUIRE(stats.buckets.size() == 1);
    CHECK(stats.buckets[0].det_lo == doctest::Approx(1e-5));
    CHECK(stats.buckets[0].count == 1);

    // Two identical Gaussians with identical gradients: the bucket mean equals
    // either one's normalized value.
    GaussianScene pair;
    pair.scene_extent = 1.0;
    Gaussian g;
    g.log_scale = {std::log(0.15), std::log(0.15), std::log(0.15)};
    pair.gaussians = {g, g};
    double det = std::exp(2.0 * 3.0 * std::log(0.15));
    GradientStats ps = accumulate_gradient_stats(pair, {0.7, 0.7}, 100);
    REQUIRE(ps.buckets.size() == 1);
    CHECK(ps.buckets[0].count == 2);
    CHECK(ps.buckets[0].mean_normalized_norm == doctest::Approx((0.7 / 100) / det));
}
