#pragma once

#include "adgs/scene.hpp"

#include <optional>
#include <vector>

namespace adgs {

// Compositing constants. The backward pass replays exactly the same skip and
// early-stop rules, so the forward/backward pair stays consistent.
constexpr double kCovFloor = 0.3;        // px^2 added to the cov2d diagonal
constexpr double kAlphaClamp = 0.99;
constexpr double kAlphaMin = 1.0 / 255.0;
constexpr double kTransmittanceStop = 1e-4;
constexpr int kTileSize = 16;

/// A projected Gaussian footprint in screen space.
struct Splat2D {
    Vec2 mean2d = Vec2::Zero();        // pixel coordinates
    Mat2 cov2d = Mat2::Identity();     // after the low-pass floor
    double depth = 0;                  // camera-space z
    int source_index = 0;
    Vec3 color = Vec3::Zero();
    double opacity = 0;
    double radius = 0;                 // conservative pixel-space extent
};

struct RenderOutput {
    Image color;
    DepthMap depth;
    Eigen::ArrayXXd accum_alpha;
    Eigen::ArrayXXi contrib_count;
};

/// Per-Gaussian analytic gradients plus the 2D positional-gradient statistic
/// (norm of dL/dmean2d, one hit per pass in which the Gaussian was visible).
struct GradBundle {
    std::vector<Vec3> mu;
    std::vector<Vec3> log_scale;
    std::vector<Vec4> quat;
    std::vector<double> opacity_logit;
    std::vector<ShMatrix> sh;
    Eigen::VectorXd pos_grad_norm;
    Eigen::VectorXi hits;

    void resize_like(const GaussianCloud& cloud);
    void add(const GradBundle& other);
};

std::optional<Splat2D> project_gaussian(const Gaussian3D& g, const Camera& cam, int source_index = 0);

RenderOutput render(const GaussianCloud& cloud, const Camera& cam);

/// Analytic adjoint of render. `upstream_depth` may be null when no loss
/// touches the depth channel.
GradBundle render_backward(const GaussianCloud& cloud, const Camera& cam,
                           const Image& upstream, const DepthMap* upstream_depth = nullptr);

/// Thread count used for tile-parallel passes; reductions stay in fixed tile
/// order so results are identical for any value. 0 = hardware concurrency.
void set_render_threads(int n);

}  // namespace adgs
