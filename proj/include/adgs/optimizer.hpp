#pragma once

#include "adgs/rasterizer.hpp"
#include "adgs/scene.hpp"

#include <vector>

namespace adgs {

/// Per-group step sizes applied by the adaptive-moment update.
struct StepSizes {
    double mu = 1.6e-4;  // set per iteration from the positional decay schedule
    double log_scale = 0.005;
    double quat = 0.001;
    double opacity = 0.05;
    double sh = 0.0025;
};

/// First/second moment buffers, one row per Gaussian. Rows track the cloud
/// through densify (appended as zeros) and prune (dropped).
struct OptimizerState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-15;
    long long step = 0;

    Eigen::ArrayXXd m_mu, v_mu;            // N x 3
    Eigen::ArrayXXd m_log_scale, v_log_scale;
    Eigen::ArrayXXd m_quat, v_quat;        // N x 4
    Eigen::ArrayXXd m_opacity, v_opacity;  // N x 1
    Eigen::ArrayXXd m_sh, v_sh;            // N x 3K

    void init(const GaussianCloud& cloud);
    void drop_rows(const std::vector<int>& removed_ascending);
    void append_rows(int count);
    int rows() const { return static_cast<int>(m_mu.rows()); }
};

/// One adaptive-moment step over every parameter group. Gaussians with any
/// non-finite gradient are skipped (and counted) rather than corrupted.
int optimizer_update(OptimizerState& opt, const GradBundle& grads, GaussianCloud& cloud,
                     const StepSizes& lr);

}  // namespace adgs
