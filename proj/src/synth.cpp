#include "adgs/dataio.hpp"

#include "adgs/rasterizer.hpp"

#include <cmath>
#include <cstdio>

namespace adgs {

namespace {

constexpr double kShC0 = 0.28209479177387814;

Camera look_at(const Vec3& position, const Vec3& target, const Vec3& up, int size, double focal) {
    Camera cam;
    cam.width = cam.height = size;
    cam.fx = cam.fy = focal;
    cam.cx = size / 2.0;
    cam.cy = size / 2.0;
    const Vec3 z = (target - position).normalized();  // camera forward
    const Vec3 x = z.cross(up).normalized();          // image x (right)
    const Vec3 y = z.cross(x);                        // image y (down)
    cam.rotation.row(0) = x.transpose();
    cam.rotation.row(1) = y.transpose();
    cam.rotation.row(2) = z.transpose();
    cam.translation = -cam.rotation * position;
    cam.validate();
    return cam;
}

Gaussian3D make_gaussian(const Vec3& mu, const Vec3& scale, const Vec3& color, double opacity) {
    Gaussian3D g;
    g.mu = mu;
    g.log_scale = scale.array().log();
    g.quat = Vec4(1, 0, 0, 0);
    g.opacity_logit = logit(opacity);
    g.sh = ShMatrix::Zero(1, 3);
    g.sh.row(0) = ((color.array() - 0.5) / kShC0).matrix().transpose();
    return g;
}

struct Preset {
    GaussianCloud cloud;
    std::vector<Camera> cameras;
    std::vector<std::optional<bool>> split;  // per camera; nullopt = every-8th default
};

Preset flat_card(std::mt19937_64& rng) {
    Preset p;
    p.cloud.sh_degree = 0;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    // 5x5 grid of thin axis-aligned Gaussians in the z = 0 plane; the scene is
    // symmetric under z-reflection so mirrored cameras see identical images.
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c) {
            const Vec3 mu(-0.6 + 0.3 * c, -0.6 + 0.3 * r, 0.0);
            const Vec3 color(0.15 + 0.7 * uni(rng), 0.15 + 0.7 * uni(rng), 0.15 + 0.7 * uni(rng));
            p.cloud.gaussians.push_back(
                make_gaussian(mu, Vec3(0.12, 0.12, 0.01), color, 0.9));
        }
    for (int i = 0; i < 16; ++i) {
        const double th = 2.0 * M_PI * i / 16;
        const Vec3 pos(0.5 * std::cos(th), 0.5 * std::sin(th), 2.3);
        p.cameras.push_back(look_at(pos, Vec3::Zero(), Vec3(0, 1, 0), 64, 70.0));
        p.split.push_back(std::nullopt);
    }
    return p;
}

Preset layered_boxes(std::mt19937_64& rng) {
    Preset p;
    p.cloud.sh_degree = 0;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    // 50 Gaussians in three box-shaped clusters at three well-separated
    // depths against an empty (black) background. With unnormalized depth
    // compositing, any wall-like backdrop carries ground-truth depth
    // "ordering" that is pure alpha microstructure, so the scene keeps depth
    // signal only where it is learnable: across the layers and through a
    // per-element depth jitter inside each box.
    const double layer_z[3] = {0.0, -0.55, -1.1};
    const double layer_x[3] = {-0.62, 0.0, 0.62};
    const Vec3 base_color[3] = {Vec3(0.9, 0.15, 0.1), Vec3(0.1, 0.85, 0.2), Vec3(0.15, 0.3, 0.95)};
    const int per_layer[3] = {17, 17, 16};
    for (int layer = 0; layer < 3; ++layer)
        for (int i = 0; i < per_layer[layer]; ++i) {
            const int cols = 4;
            const int r = i / cols, c = i % cols;
            const Vec3 mu(layer_x[layer] - 0.21 + 0.14 * c, -0.28 + 0.14 * r,
                          layer_z[layer] + 0.12 * (uni(rng) - 0.5));
            Vec3 color = base_color[layer];
            for (int ch = 0; ch < 3; ++ch)
                color[ch] = std::clamp(color[ch] + 0.25 * (uni(rng) - 0.5), 0.05, 0.95);
            p.cloud.gaussians.push_back(make_gaussian(mu, Vec3::Constant(0.1), color, 0.95));
        }
    // 16 views, explicit 12 train / 4 test split.
    for (int i = 0; i < 16; ++i) {
        const double th = 2.0 * M_PI * i / 16;
        const Vec3 pos(0.5 * std::cos(th), 0.5 * std::sin(th), 2.5);
        p.cameras.push_back(look_at(pos, Vec3(0, 0, -0.5), Vec3(0, 1, 0), 64, 70.0));
        p.split.push_back(i % 4 == 0);
    }
    return p;
}

Preset sphere_field(std::mt19937_64& rng) {
    Preset p;
    p.cloud.sh_degree = 0;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < 60; ++i) {
        Vec3 dir(normal(rng), normal(rng), normal(rng));
        dir.normalize();
        const Vec3 mu = 0.8 * dir;
        const Vec3 color(0.1 + 0.8 * uni(rng), 0.1 + 0.8 * uni(rng), 0.1 + 0.8 * uni(rng));
        p.cloud.gaussians.push_back(make_gaussian(mu, Vec3::Constant(0.08), color, 0.9));
    }
    for (int i = 0; i < 16; ++i) {
        const double th = 2.0 * M_PI * i / 16;
        const Vec3 pos(2.5 * std::cos(th), 0.6, 2.5 * std::sin(th));
        p.cameras.push_back(look_at(pos, Vec3::Zero(), Vec3(0, 1, 0), 64, 70.0));
        p.split.push_back(std::nullopt);
    }
    return p;
}

}  // namespace

SceneDataset synth_scene(const std::string& preset, std::mt19937_64& rng,
                         const std::string& out_dir) {
    Preset p;
    if (preset == "flat-card")
        p = flat_card(rng);
    else if (preset == "layered-boxes")
        p = layered_boxes(rng);
    else if (preset == "textured-sphere-field")
        p = sphere_field(rng);
    else
        throw InvalidParameter("unknown preset: " + preset +
                               " (expected flat-card, layered-boxes, textured-sphere-field)");

    std::vector<SceneView> views;
    std::vector<Image> images;
    std::vector<DepthMap> depths;
    char buf[64];
    for (size_t i = 0; i < p.cameras.size(); ++i) {
        const RenderOutput out = render(p.cloud, p.cameras[i]);
        SceneView view;
        view.camera = p.cameras[i];
        std::snprintf(buf, sizeof buf, "images/view_%03zu.pfm", i);
        view.image_path = buf;
        std::snprintf(buf, sizeof buf, "depths/view_%03zu.pfm", i);
        view.depth_path = buf;
        view.is_test = p.split[i];
        views.push_back(view);
        images.push_back(out.color);
        depths.push_back(out.depth);
    }

    // Initialization point cloud: each surface contributes its center plus a
    // few samples from its own distribution, with isotropic position noise so
    // the cloud behaves like a real (imperfect) structure-from-motion result
    // rather than giving the optimizer the answer.
    constexpr double kPointNoise = 0.25;
    constexpr int kPointsPerSurface = 3;
    std::vector<ColoredPoint> points;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const auto& g : p.cloud.gaussians) {
        ColoredPoint pt;
        Vec3 color = (g.sh.row(0).transpose() * kShC0).array() + 0.5;
        pt.color = color.cwiseMax(0.0).cwiseMin(1.0);
        const Mat3 a = quat_to_rotation(normalize_quat(g.quat)) * g.scale().asDiagonal();
        for (int s = 0; s < kPointsPerSurface; ++s) {
            const Vec3 spread = s == 0 ? Vec3::Zero()
                                       : Vec3(a * Vec3(normal(rng), normal(rng), normal(rng)));
            const Vec3 noise(normal(rng), normal(rng), normal(rng));
            pt.position = g.mu + spread + kPointNoise * noise;
            points.push_back(pt);
        }
    }

    save_scene(out_dir, views, images, depths, points, p.cloud.background_color);
    return load_scene(out_dir);
}

}  // namespace adgs
