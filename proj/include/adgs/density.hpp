#pragma once

#include "adgs/rasterizer.hpp"
#include "adgs/scene.hpp"

#include <random>
#include <vector>

namespace adgs {

struct DensifyParams {
    double grad_threshold = 0.0002;       // tau
    double opacity_threshold = 0.005;     // epsilon
    double scale_split_threshold = 0.01;  // fraction of scene extent
    int split_count = 2;
    double split_scale_divisor = 1.6;     // phi
};

/// Accumulated positional-gradient statistics since the last densify step.
struct DensifyStats {
    Eigen::VectorXd norm_sum;
    Eigen::VectorXi count;

    void resize(int n) {
        norm_sum = Eigen::VectorXd::Zero(n);
        count = Eigen::VectorXi::Zero(n);
    }
    /// Densify criterion: mean positional-gradient norm over the window.
    double criterion(int i) const { return norm_sum[i] / std::max(count[i], 1); }
};

void accumulate(DensifyStats& stats, const GradBundle& bundle);

struct PruneResult {
    std::vector<int> removed;  // original indices, ascending
};

/// Removes every Gaussian with opacity < epsilon; survivors keep order.
PruneResult prune(GaussianCloud& cloud, double epsilon);

struct DensifyResult {
    int clones = 0;
    int splits = 0;
    std::vector<int> removed_parents;  // original indices of split parents, ascending
    int appended = 0;                  // clones + children appended at the end
};

/// Clone/split step. Small Gaussians above the gradient threshold are cloned;
/// large ones are split into `split_count` children sampled from the parent
/// distribution with log_scale reduced by ln(phi). New cloud order:
/// [survivors in order, clones, split children]. Stats are reset afterwards.
DensifyResult densify(GaussianCloud& cloud, DensifyStats& stats, const DensifyParams& params,
                      double scene_extent, std::mt19937_64& rng);

}  // namespace adgs
