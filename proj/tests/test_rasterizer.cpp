#include "adgs/rasterizer.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace adgs;
using namespace adgs::test;

TEST_CASE("project_gaussian: optical axis, isotropic cov, culling") {
    Camera cam = test_camera(32, 40.0);
    Gaussian3D g;
    g.mu = Vec3(0, 0, 2);
    g.sh = ShMatrix::Zero(1, 3);
    auto splat = project_gaussian(g, cam);
    REQUIRE(splat.has_value());
    CHECK((splat->mean2d - Vec2(cam.cx, cam.cy)).norm() < 1e-12);

    // Isotropic: cov2d ~ (f*sigma/z)^2 I before the floor.
    const double sigma = 0.2;
    g.log_scale = Vec3::Constant(std::log(sigma));
    splat = project_gaussian(g, cam);
    REQUIRE(splat.has_value());
    const double expected = std::pow(40.0 * sigma / 2.0, 2);
    CHECK(std::abs(splat->cov2d(0, 0) - kCovFloor - expected) < 1e-9 * expected);
    CHECK(std::abs(splat->cov2d(1, 1) - kCovFloor - expected) < 1e-9 * expected);
    CHECK(std::abs(splat->cov2d(0, 1)) < 1e-9);

    g.mu = Vec3(0, 0, -1);
    CHECK(!project_gaussian(g, cam).has_value());

    // Footprint far outside the viewport is culled.
    g.mu = Vec3(100, 0, 2);
    g.log_scale = Vec3::Constant(std::log(0.01));
    CHECK(!project_gaussian(g, cam).has_value());
}

TEST_CASE("render: empty cloud and single splat") {
    Camera cam = test_camera();
    GaussianCloud cloud;
    RenderOutput out = render(cloud, cam);
    CHECK(out.color.ch[0].abs().maxCoeff() == 0.0);
    CHECK(out.accum_alpha.abs().maxCoeff() == 0.0);
    CHECK(out.depth.abs().maxCoeff() == 0.0);

    // One opaque splat at the center pixel with color ~(1,0,0).
    Gaussian3D g;
    g.mu = Vec3(0, 0, 2);
    g.log_scale = Vec3::Constant(std::log(0.8));  // big: alpha clamps at 0.99
    g.opacity_logit = logit(0.9999999);
    g.sh = ShMatrix::Zero(1, 3);
    g.sh(0, 0) = 0.5 / 0.28209479177387814;  // red channel -> 1.0
    g.sh(0, 1) = -0.5 / 0.28209479177387814;
    g.sh(0, 2) = -0.5 / 0.28209479177387814;
    cloud.gaussians.push_back(g);
    cloud.background_color = Vec3(0, 0, 1);
    out = render(cloud, cam);
    const int r = 16, c = 16;
    CHECK(std::abs(out.accum_alpha(r, c) - 0.99) < 1e-6);
    CHECK(std::abs(out.color.ch[0](r, c) - 0.99) < 1e-4);
    CHECK(std::abs(out.color.ch[2](r, c) - 0.01) < 1e-4);  // background leaks 1%
    CHECK(std::abs(out.depth(r, c) - 0.99 * 2.0) < 1e-6);
}

namespace {

// Two controlled splats on the optical axis with exact alphas at the center.
GaussianCloud two_splat_cloud() {
    GaussianCloud cloud;
    auto mk = [](double z, const Vec3& color) {
        Gaussian3D g;
        g.mu = Vec3(0, 0, z);
        g.log_scale = Vec3::Constant(std::log(10.0 * z));  // flat profile near center
        g.opacity_logit = logit(0.5);
        g.sh = ShMatrix::Zero(1, 3);
        g.sh.row(0) = ((color.array() - 0.5) / 0.28209479177387814).matrix().transpose();
        return g;
    };
    cloud.gaussians.push_back(mk(1.0, Vec3(1, 0, 0)));
    cloud.gaussians.push_back(mk(3.0, Vec3(0, 0, 1)));
    return cloud;
}

}  // namespace

TEST_CASE("render: two-splat compositing example") {
    Camera cam = test_camera();
    GaussianCloud cloud = two_splat_cloud();
    RenderOutput out = render(cloud, cam);
    const int r = 16, c = 16;
    // Huge flat Gaussians: alpha at the center is essentially the opacity 0.5.
    CHECK(std::abs(out.color.ch[0](r, c) - 0.5) < 1e-3);
    CHECK(std::abs(out.color.ch[2](r, c) - 0.25) < 1e-3);
    CHECK(std::abs(out.color.ch[1](r, c) - 0.0) < 1e-12);
    CHECK(std::abs(out.depth(r, c) - 1.25) < 5e-3);
    CHECK(std::abs(out.accum_alpha(r, c) - 0.75) < 1e-3);
    CHECK(out.contrib_count(r, c) == 2);
}

TEST_CASE("render: storage order invariance with depth sort tie-break") {
    std::mt19937_64 rng(21);
    GaussianCloud cloud = random_cloud(12, rng);
    // Force a depth tie to exercise the tie-break.
    cloud.gaussians[3] = cloud.gaussians[5];
    Camera cam = test_camera();
    RenderOutput a = render(cloud, cam);

    GaussianCloud shuffled = cloud;
    std::reverse(shuffled.gaussians.begin(), shuffled.gaussians.end());
    RenderOutput b = render(shuffled, cam);
    for (int ch = 0; ch < 3; ++ch)
        CHECK((a.color.ch[ch] - b.color.ch[ch]).abs().maxCoeff() == 0.0);
    CHECK((a.depth - b.depth).abs().maxCoeff() == 0.0);
}

TEST_CASE("render: conservation and depth/color equivalence") {
    std::mt19937_64 rng(22);
    GaussianCloud cloud = random_cloud(15, rng);
    Camera cam = test_camera();
    RenderOutput out = render(cloud, cam);

    CHECK(out.accum_alpha.maxCoeff() <= 1.0 + 1e-12);
    CHECK(out.accum_alpha.minCoeff() >= 0.0);

    // Render again with color == depth per Gaussian: must reproduce the depth
    // channel exactly (same compositing machinery).
    // eval_sh_color clamps to [0,1], so encode z/scale as the color.
    GaussianCloud depth_cloud = cloud;
    const double scale = 4.0;
    for (auto& g : depth_cloud.gaussians) {
        const double z = cam.to_camera(g.mu).z();
        g.sh = ShMatrix::Zero(1, 3);
        g.sh.row(0) =
            ((Vec3::Constant(z / scale).array() - 0.5) / 0.28209479177387814).matrix().transpose();
    }
    RenderOutput dout = render(depth_cloud, cam);
    CHECK(((dout.color.ch[0] * scale) - out.depth).abs().maxCoeff() < 1e-9);
}

TEST_CASE("render: opacity monotonicity") {
    std::mt19937_64 rng(23);
    GaussianCloud cloud = random_cloud(8, rng);
    Camera cam = test_camera();
    // w_i at the pixel is recoverable from the depth render of a single-color
    // experiment; simpler: bump opacity of one Gaussian and check its isolated
    // weight via rendering it alone against an empty background.
    GaussianCloud solo;
    solo.sh_degree = cloud.sh_degree;
    solo.gaussians.push_back(cloud.gaussians[0]);
    RenderOutput lo = render(solo, cam);
    solo.gaussians[0].opacity_logit += 1.0;
    RenderOutput hi = render(solo, cam);
    CHECK(((hi.accum_alpha - lo.accum_alpha) >= -1e-12).all());
}

TEST_CASE("render_backward: zero upstream and culled Gaussian") {
    std::mt19937_64 rng(24);
    GaussianCloud cloud = random_cloud(6, rng);
    cloud.gaussians[2].mu = Vec3(0, 0, -5);  // behind camera -> culled
    Camera cam = test_camera();
    Image zero(cam.height, cam.width);
    GradBundle grads = render_backward(cloud, cam, zero);
    for (int i = 0; i < cloud.size(); ++i) {
        CHECK(grads.mu[i].norm() == 0.0);
        CHECK(grads.opacity_logit[i] == 0.0);
    }
    CHECK(grads.pos_grad_norm.maxCoeff() == 0.0);

    Image ones(cam.height, cam.width, 1.0);
    grads = render_backward(cloud, cam, ones);
    CHECK(grads.mu[2].norm() == 0.0);  // culled: no contribution, no gradient
    CHECK(grads.hits[2] == 0);
    CHECK(grads.hits[0] == 1);
}

TEST_CASE("render_backward: finite differences over every parameter class") {
    std::mt19937_64 rng(25);
    for (int sh_degree : {0, 2}) {
        GaussianCloud cloud = random_cloud(10, rng, sh_degree);
        Camera cam = test_camera(32, 40.0);
        RandomScalarizer scalarize(32, 32, rng, /*depth=*/true);

        GradBundle grads = render_backward(cloud, cam, scalarize.wc, &scalarize.wd);

        auto loss_at = [&](GaussianCloud& c) { return scalarize(render(c, cam)); };
        const double h = 1e-3;
        int checked = 0;
        for (int i = 0; i < cloud.size(); ++i) {
            auto fd_at = [&](double* param, double save, double step) {
                *param = save + step;
                const double up = loss_at(cloud);
                *param = save - step;
                const double dn = loss_at(cloud);
                *param = save;
                return (up - dn) / (2 * step);
            };
            auto check1 = [&](double* param, double analytic) {
                const double save = *param;
                const double fd = fd_at(param, save, h);
                if (std::abs(fd) < 1e-7 && std::abs(analytic) < 1e-7) return;
                // The forward pass has hard cutoffs (footprint radius, alpha
                // clamps, color clamps). Skip parameters sitting on such a
                // kink: there the two step sizes disagree with each other.
                const double fd_small = fd_at(param, save, h / 4);
                if (rel_err(fd, fd_small) > 1e-4) return;
                CHECK(rel_err(analytic, fd) < 1e-3);
                ++checked;
            };
            for (int k = 0; k < 3; ++k) check1(&cloud.gaussians[i].mu[k], grads.mu[i][k]);
            for (int k = 0; k < 3; ++k)
                check1(&cloud.gaussians[i].log_scale[k], grads.log_scale[i][k]);
            for (int k = 0; k < 4; ++k) check1(&cloud.gaussians[i].quat[k], grads.quat[i][k]);
            check1(&cloud.gaussians[i].opacity_logit, grads.opacity_logit[i]);
            for (int r = 0; r < cloud.gaussians[i].sh.rows(); ++r)
                for (int c = 0; c < 3; ++c)
                    check1(&cloud.gaussians[i].sh(r, c), grads.sh[i](r, c));
        }
        CHECK(checked > 50);  // the scene must actually exercise gradients
    }
}

TEST_CASE("render is deterministic across thread counts") {
    std::mt19937_64 rng(26);
    GaussianCloud cloud = random_cloud(20, rng);
    Camera cam = test_camera(48, 55.0);
    set_render_threads(1);
    RenderOutput a = render(cloud, cam);
    GradBundle ga = render_backward(cloud, cam, a.color);
    set_render_threads(4);
    RenderOutput b = render(cloud, cam);
    GradBundle gb = render_backward(cloud, cam, b.color);
    set_render_threads(0);
    for (int ch = 0; ch < 3; ++ch)
        CHECK((a.color.ch[ch] - b.color.ch[ch]).abs().maxCoeff() == 0.0);
    for (int i = 0; i < cloud.size(); ++i) CHECK((ga.mu[i] - gb.mu[i]).norm() == 0.0);
}
