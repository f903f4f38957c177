#include "adgs/density.hpp"

#include <cmath>

namespace adgs {

void accumulate(DensifyStats& stats, const GradBundle& bundle) {
    if (stats.norm_sum.size() != bundle.pos_grad_norm.size())
        throw ShapeError("accumulate: stats length does not match bundle");
    stats.norm_sum += bundle.pos_grad_norm;
    stats.count += bundle.hits;
}

PruneResult prune(GaussianCloud& cloud, double epsilon) {
    PruneResult res;
    std::vector<Gaussian3D> kept;
    kept.reserve(cloud.gaussians.size());
    for (int i = 0; i < cloud.size(); ++i) {
        if (cloud.gaussians[i].opacity() < epsilon)
            res.removed.push_back(i);
        else
            kept.push_back(cloud.gaussians[i]);
    }
    cloud.gaussians = std::move(kept);
    return res;
}

DensifyResult densify(GaussianCloud& cloud, DensifyStats& stats, const DensifyParams& params,
                      double scene_extent, std::mt19937_64& rng) {
    if (stats.norm_sum.size() != cloud.size())
        throw ShapeError("densify: stats length does not match cloud");
    if (scene_extent <= 0) throw InvalidParameter("densify: scene_extent must be positive");

    DensifyResult res;
    std::vector<Gaussian3D> clones, children;
    std::vector<bool> is_split(cloud.gaussians.size(), false);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double log_phi = std::log(params.split_scale_divisor);

    for (int i = 0; i < cloud.size(); ++i) {
        if (stats.count[i] == 0 || stats.criterion(i) < params.grad_threshold) continue;
        const Gaussian3D& g = cloud.gaussians[i];
        if (g.scale().maxCoeff() <= params.scale_split_threshold * scene_extent) {
            clones.push_back(g);
            ++res.clones;
        } else {
            is_split[i] = true;
            res.removed_parents.push_back(i);
            ++res.splits;
            // Children sampled from N(mu, Sigma) via Sigma = A A^T, A = R diag(s).
            const Mat3 a = quat_to_rotation(normalize_quat(g.quat)) * g.scale().asDiagonal();
            for (int c = 0; c < params.split_count; ++c) {
                Gaussian3D child = g;
                const Vec3 z(normal(rng), normal(rng), normal(rng));
                child.mu = g.mu + a * z;
                child.log_scale = g.log_scale.array() - log_phi;
                children.push_back(child);
            }
        }
    }

    std::vector<Gaussian3D> next;
    next.reserve(cloud.gaussians.size() + clones.size() + children.size());
    for (int i = 0; i < cloud.size(); ++i)
        if (!is_split[i]) next.push_back(cloud.gaussians[i]);
    for (auto& g : clones) next.push_back(std::move(g));
    for (auto& g : children) next.push_back(std::move(g));
    res.appended = static_cast<int>(clones.size() + children.size());
    cloud.gaussians = std::move(next);

    stats.resize(cloud.size());
    return res;
}

}  // namespace adgs
