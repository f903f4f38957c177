#include "adgs/losses.hpp"

#include <cmath>

namespace adgs {

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, kWin>& window() {
    static const std::array<double, kWin> w = [] {
        std::array<double, kWin> v{};
        double sum = 0;
        for (int i = 0; i < kWin; ++i) {
            const double x = i - kWin / 2;
            v[i] = std::exp(-x * x / (2 * kSigma * kSigma));
            sum += v[i];
        }
        for (auto& e : v) e /= sum;
        return v;
    }();
    return w;
}

// Reflect-101 index, valid for any image size.
int reflect(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

Eigen::ArrayXXd filter2(const Eigen::ArrayXXd& in) {
    const auto& w = window();
    const int h = static_cast<int>(in.rows()), wd = static_cast<int>(in.cols());
    Eigen::ArrayXXd tmp(h, wd), out(h, wd);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < wd; ++c) {
            double s = 0;
            for (int k = 0; k < kWin; ++k) s += w[k] * in(r, reflect(c + k - kWin / 2, wd));
            tmp(r, c) = s;
        }
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < wd; ++c) {
            double s = 0;
            for (int k = 0; k < kWin; ++k) s += w[k] * tmp(reflect(r + k - kWin / 2, h), c);
            out(r, c) = s;
        }
    return out;
}

// Adjoint of filter2 under the reflect padding (scatter form).
Eigen::ArrayXXd filter2_adjoint(const Eigen::ArrayXXd& up) {
    const auto& w = window();
    const int h = static_cast<int>(up.rows()), wd = static_cast<int>(up.cols());
    Eigen::ArrayXXd tmp = Eigen::ArrayXXd::Zero(h, wd), out = Eigen::ArrayXXd::Zero(h, wd);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < wd; ++c)
            for (int k = 0; k < kWin; ++k) tmp(reflect(r + k - kWin / 2, h), c) += w[k] * up(r, c);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < wd; ++c)
            for (int k = 0; k < kWin; ++k) out(r, reflect(c + k - kWin / 2, wd)) += w[k] * tmp(r, c);
    return out;
}

}  // namespace

void LossWeights::validate() const {
    const double vals[] = {lambda_ssim, lambda_r, omega1, omega2, lambda1, lambda2, lambda3};
    for (double v : vals)
        if (!std::isfinite(v) || v < 0) throw InvalidParameter("LossWeights: values must be finite and nonnegative");
    if (lambda_ssim > 1.0) throw InvalidParameter("LossWeights: lambda_ssim must be <= 1");
}

double ssim(const Image& a, const Image& b, Image* grad_a, Image* grad_b) {
    require_same_shape(a, b, "ssim");
    const int h = a.height, wd = a.width;
    const double inv_n = 1.0 / (3.0 * h * wd);
    double total = 0;
    if (grad_a) *grad_a = Image(h, wd);
    if (grad_b) *grad_b = Image(h, wd);

    for (int c = 0; c < 3; ++c) {
        const Eigen::ArrayXXd& x = a.ch[c];
        const Eigen::ArrayXXd& y = b.ch[c];
        const Eigen::ArrayXXd mu_x = filter2(x), mu_y = filter2(y);
        const Eigen::ArrayXXd var_x = filter2(x * x) - mu_x * mu_x;
        const Eigen::ArrayXXd var_y = filter2(y * y) - mu_y * mu_y;
        const Eigen::ArrayXXd cov = filter2(x * y) - mu_x * mu_y;

        const Eigen::ArrayXXd a1 = 2 * mu_x * mu_y + kC1;
        const Eigen::ArrayXXd a2 = 2 * cov + kC2;
        const Eigen::ArrayXXd b1 = mu_x * mu_x + mu_y * mu_y + kC1;
        const Eigen::ArrayXXd b2 = var_x + var_y + kC2;
        const Eigen::ArrayXXd s = (a1 * a2) / (b1 * b2);
        total += s.sum() * inv_n;

        if (!grad_a && !grad_b) continue;
        // Per-pixel partials of the SSIM map; upstream weight is inv_n per pixel.
        const Eigen::ArrayXXd denom = b1 * b2;
        const Eigen::ArrayXXd ds_dcov = (2 * a1 / denom) * inv_n;
        if (grad_a) {
            const Eigen::ArrayXXd ds_dmux = (2 * mu_y * a2 / denom - s * 2 * mu_x / b1) * inv_n;
            const Eigen::ArrayXXd ds_dvarx = (-s / b2) * inv_n;
            const Eigen::ArrayXXd m = ds_dmux - 2 * mu_x * ds_dvarx - mu_y * ds_dcov;
            grad_a->ch[c] = filter2_adjoint(m) + 2 * x * filter2_adjoint(ds_dvarx) +
                            y * filter2_adjoint(ds_dcov);
        }
        if (grad_b) {
            const Eigen::ArrayXXd ds_dmuy = (2 * mu_x * a2 / denom - s * 2 * mu_y / b1) * inv_n;
            const Eigen::ArrayXXd ds_dvary = (-s / b2) * inv_n;
            const Eigen::ArrayXXd m = ds_dmuy - 2 * mu_y * ds_dvary - mu_x * ds_dcov;
            grad_b->ch[c] = filter2_adjoint(m) + 2 * y * filter2_adjoint(ds_dvary) +
                            x * filter2_adjoint(ds_dcov);
        }
    }
    return total;
}

ScalarWithImageGrad photometric_loss(const Image& v, const Image& v_gt, double lambda_ssim) {
    require_same_shape(v, v_gt, "photometric_loss");
    ScalarWithImageGrad out;
    out.grad = Image(v.height, v.width);
    const double inv_n = 1.0 / (3.0 * v.height * v.width);

    double l1 = 0;
    for (int c = 0; c < 3; ++c) {
        const Eigen::ArrayXXd diff = v.ch[c] - v_gt.ch[c];
        l1 += diff.abs().sum() * inv_n;
        out.grad.ch[c] = (1.0 - lambda_ssim) * inv_n * diff.sign();
    }

    double s = 1.0;
    if (lambda_ssim > 0) {
        Image gs;
        s = ssim(v, v_gt, &gs);
        for (int c = 0; c < 3; ++c) out.grad.ch[c] -= lambda_ssim * gs.ch[c];
    }
    out.value = (1.0 - lambda_ssim) * l1 + lambda_ssim * (1.0 - s);
    return out;
}

PseudoConsistency pseudo_view_consistency(const Image& u1, const Image& u2, double lambda_ssim) {
    require_same_shape(u1, u2, "pseudo_view_consistency");
    PseudoConsistency out;
    out.grad_u1 = Image(u1.height, u1.width);
    out.grad_u2 = Image(u1.height, u1.width);
    const double inv_n = 1.0 / (3.0 * u1.height * u1.width);

    double l1 = 0;
    for (int c = 0; c < 3; ++c) {
        const Eigen::ArrayXXd diff = u1.ch[c] - u2.ch[c];
        l1 += diff.abs().sum() * inv_n;
        out.grad_u1.ch[c] = (1.0 - lambda_ssim) * inv_n * diff.sign();
        out.grad_u2.ch[c] = -out.grad_u1.ch[c];
    }

    double s = 1.0;
    if (lambda_ssim > 0) {
        Image g1, g2;
        s = ssim(u1, u2, &g1, &g2);
        for (int c = 0; c < 3; ++c) {
            out.grad_u1.ch[c] -= lambda_ssim * g1.ch[c];
            out.grad_u2.ch[c] -= lambda_ssim * g2.ch[c];
        }
    }
    out.value = (1.0 - lambda_ssim) * l1 + lambda_ssim * (1.0 - s);
    return out;
}

ScalarWithDepthGrad depth_smoothness(const DepthMap& d, const Image& v, double lambda_r,
                                     bool include_smoothness, Image* grad_v) {
    if (d.rows() != v.height || d.cols() != v.width)
        throw ShapeError("depth_smoothness: depth and image shapes differ");
    const int h = static_cast<int>(d.rows()), wd = static_cast<int>(d.cols());
    ScalarWithDepthGrad out;
    out.grad = DepthMap::Zero(h, wd);
    if (grad_v) *grad_v = Image(h, wd);

    if (include_smoothness) {
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < wd; ++c) {
                double img_grad = 0;
                for (int ch = 0; ch < 3; ++ch) {
                    if (c + 1 < wd) img_grad += std::abs(v.ch[ch](r, c + 1) - v.ch[ch](r, c));
                    if (r + 1 < h) img_grad += std::abs(v.ch[ch](r + 1, c) - v.ch[ch](r, c));
                }
                const double weight = std::exp(-img_grad);
                double depth_tv = 0;  // |dx| + |dy| sharing this pixel's weight
                if (c + 1 < wd) {
                    const double dx = d(r, c + 1) - d(r, c);
                    out.value += std::abs(dx) * weight;
                    depth_tv += std::abs(dx);
                    const double sg = (dx > 0) - (dx < 0);
                    out.grad(r, c + 1) += weight * sg;
                    out.grad(r, c) -= weight * sg;
                }
                if (r + 1 < h) {
                    const double dy = d(r + 1, c) - d(r, c);
                    out.value += std::abs(dy) * weight;
                    depth_tv += std::abs(dy);
                    const double sg = (dy > 0) - (dy < 0);
                    out.grad(r + 1, c) += weight * sg;
                    out.grad(r, c) -= weight * sg;
                }
                // d(weight)/d(v) = -weight * d(img_grad)/d(v), applied to the
                // shared |dx|+|dy| factor.
                if (grad_v && depth_tv != 0.0) {
                    const double k = -depth_tv * weight;
                    for (int ch = 0; ch < 3; ++ch) {
                        if (c + 1 < wd) {
                            const double dvx = v.ch[ch](r, c + 1) - v.ch[ch](r, c);
                            const double sv = (dvx > 0) - (dvx < 0);
                            grad_v->ch[ch](r, c + 1) += k * sv;
                            grad_v->ch[ch](r, c) -= k * sv;
                        }
                        if (r + 1 < h) {
                            const double dvy = v.ch[ch](r + 1, c) - v.ch[ch](r, c);
                            const double sv = (dvy > 0) - (dvy < 0);
                            grad_v->ch[ch](r + 1, c) += k * sv;
                            grad_v->ch[ch](r, c) -= k * sv;
                        }
                    }
                }
            }
        }
    }

    // Range reward; subgradient to the first argmax/argmin in row-major order.
    int max_r = 0, max_c = 0, min_r = 0, min_c = 0;
    double dmax = d(0, 0), dmin = d(0, 0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < wd; ++c) {
            if (d(r, c) > dmax) { dmax = d(r, c); max_r = r; max_c = c; }
            if (d(r, c) < dmin) { dmin = d(r, c); min_r = r; min_c = c; }
        }
    out.value -= lambda_r * (dmax - dmin);
    out.grad(max_r, max_c) -= lambda_r;
    out.grad(min_r, min_c) += lambda_r;
    return out;
}

TotalDepthSmoothness total_depth_smoothness(const Image& v, const DepthMap& d, const Image& u,
                                            const DepthMap& d_u, double omega1, double omega2,
                                            double lambda_r, bool include_smoothness) {
    Image train_gv, pseudo_gv;
    auto train = depth_smoothness(d, v, lambda_r, include_smoothness, &train_gv);
    auto pseudo = depth_smoothness(d_u, u, lambda_r, include_smoothness, &pseudo_gv);
    TotalDepthSmoothness out;
    out.value = omega1 * train.value + omega2 * pseudo.value;
    out.grad_d = omega1 * train.grad;
    out.grad_d_u = omega2 * pseudo.grad;
    out.grad_v = Image(v.height, v.width);
    out.grad_u = Image(u.height, u.width);
    for (int c = 0; c < 3; ++c) {
        out.grad_v.ch[c] = omega1 * train_gv.ch[c];
        out.grad_u.ch[c] = omega2 * pseudo_gv.ch[c];
    }
    return out;
}

CombinedLoss combined_loss(const Image& v_k, const Image& v_gt, const DepthMap& d_k,
                           const Image& u_k, const DepthMap& d_uk, const Image& u_other,
                           const LossWeights& w, bool include_smoothness) {
    CombinedLoss out;
    auto ph = photometric_loss(v_k, v_gt, w.lambda_ssim);
    auto tds = total_depth_smoothness(v_k, d_k, u_k, d_uk, w.omega1, w.omega2, w.lambda_r,
                                      include_smoothness);
    auto ps = pseudo_view_consistency(u_k, u_other, w.lambda_ssim);

    out.l_ph = ph.value;
    out.l_tds = tds.value;
    out.l_pseudo = ps.value;
    out.value = w.lambda1 * ph.value + w.lambda2 * tds.value + w.lambda3 * ps.value;

    out.grad_v = Image(v_k.height, v_k.width);
    for (int c = 0; c < 3; ++c)
        out.grad_v.ch[c] = w.lambda1 * ph.grad.ch[c] + w.lambda2 * tds.grad_v.ch[c];
    out.grad_d = w.lambda2 * tds.grad_d;
    out.grad_u = Image(u_k.height, u_k.width);
    for (int c = 0; c < 3; ++c)
        out.grad_u.ch[c] = w.lambda3 * ps.grad_u1.ch[c] + w.lambda2 * tds.grad_u.ch[c];
    out.grad_d_u = w.lambda2 * tds.grad_d_u;
    return out;
}

}  // namespace adgs
