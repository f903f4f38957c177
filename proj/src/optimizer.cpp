#include "adgs/optimizer.hpp"

#include <cmath>

namespace adgs {

namespace {

void drop_rows_of(Eigen::ArrayXXd& a, const std::vector<int>& removed) {
    if (removed.empty()) return;
    Eigen::ArrayXXd out(a.rows() - static_cast<int>(removed.size()), a.cols());
    int w = 0;
    size_t r = 0;
    for (int i = 0; i < a.rows(); ++i) {
        if (r < removed.size() && removed[r] == i) {
            ++r;
            continue;
        }
        out.row(w++) = a.row(i);
    }
    a = std::move(out);
}

void append_rows_of(Eigen::ArrayXXd& a, int count) {
    Eigen::ArrayXXd out = Eigen::ArrayXXd::Zero(a.rows() + count, a.cols());
    out.topRows(a.rows()) = a;
    a = std::move(out);
}

}  // namespace

void OptimizerState::init(const GaussianCloud& cloud) {
    const int n = cloud.size();
    const int k = sh_coeff_count(cloud.sh_degree);
    step = 0;
    m_mu = v_mu = Eigen::ArrayXXd::Zero(n, 3);
    m_log_scale = v_log_scale = Eigen::ArrayXXd::Zero(n, 3);
    m_quat = v_quat = Eigen::ArrayXXd::Zero(n, 4);
    m_opacity = v_opacity = Eigen::ArrayXXd::Zero(n, 1);
    m_sh = v_sh = Eigen::ArrayXXd::Zero(n, 3 * k);
}

void OptimizerState::drop_rows(const std::vector<int>& removed) {
    for (auto* a : {&m_mu, &v_mu, &m_log_scale, &v_log_scale, &m_quat, &v_quat, &m_opacity,
                    &v_opacity, &m_sh, &v_sh})
        drop_rows_of(*a, removed);
}

void OptimizerState::append_rows(int count) {
    for (auto* a : {&m_mu, &v_mu, &m_log_scale, &v_log_scale, &m_quat, &v_quat, &m_opacity,
                    &v_opacity, &m_sh, &v_sh})
        append_rows_of(*a, count);
}

int optimizer_update(OptimizerState& opt, const GradBundle& grads, GaussianCloud& cloud,
                     const StepSizes& lr) {
    const int n = cloud.size();
    if (static_cast<int>(grads.mu.size()) != n || opt.rows() != n)
        throw ShapeError("optimizer_update: gradient/state row count does not match cloud");

    opt.step += 1;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    int nan_skips = 0;

    const int k = sh_coeff_count(cloud.sh_degree);
    for (int i = 0; i < n; ++i) {
        Gaussian3D& g = cloud.gaussians[i];

        bool finite = grads.mu[i].allFinite() && grads.log_scale[i].allFinite() &&
                      grads.quat[i].allFinite() && std::isfinite(grads.opacity_logit[i]) &&
                      grads.sh[i].allFinite();

        auto adam = [&](double& m, double& v, double grad, double rate) -> double {
            m = opt.beta1 * m + (1 - opt.beta1) * grad;
            v = opt.beta2 * v + (1 - opt.beta2) * grad * grad;
            return rate * (m / bc1) / (std::sqrt(v / bc2) + opt.eps);
        };

        if (!finite) {
            // Moments still decay so the state stays consistent with step.
            ++nan_skips;
            for (auto* a : {&opt.m_mu, &opt.m_log_scale, &opt.m_quat, &opt.m_opacity, &opt.m_sh})
                a->row(i) *= opt.beta1;
            for (auto* a : {&opt.v_mu, &opt.v_log_scale, &opt.v_quat, &opt.v_opacity, &opt.v_sh})
                a->row(i) *= opt.beta2;
            continue;
        }

        for (int c = 0; c < 3; ++c) {
            g.mu[c] -= adam(opt.m_mu(i, c), opt.v_mu(i, c), grads.mu[i][c], lr.mu);
            g.log_scale[c] -=
                adam(opt.m_log_scale(i, c), opt.v_log_scale(i, c), grads.log_scale[i][c], lr.log_scale);
        }
        for (int c = 0; c < 4; ++c)
            g.quat[c] -= adam(opt.m_quat(i, c), opt.v_quat(i, c), grads.quat[i][c], lr.quat);
        g.opacity_logit -=
            adam(opt.m_opacity(i, 0), opt.v_opacity(i, 0), grads.opacity_logit[i], lr.opacity);
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < 3; ++c)
                g.sh(r, c) -= adam(opt.m_sh(i, r * 3 + c), opt.v_sh(i, r * 3 + c),
                                   grads.sh[i](r, c), lr.sh);
    }
    return nan_skips;
}

}  // namespace adgs
