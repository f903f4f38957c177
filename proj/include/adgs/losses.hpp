#pragma once

#include "adgs/types.hpp"

namespace adgs {

struct LossWeights {
    double lambda_ssim = 0.2;
    double lambda_r = 0.001;
    double omega1 = 0.01;
    double omega2 = 0.05;
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double lambda3 = 1.0;

    void validate() const;
};

struct ScalarWithImageGrad {
    double value = 0;
    Image grad;
};

struct ScalarWithDepthGrad {
    double value = 0;
    DepthMap grad;
};

/// Mean local SSIM (11x11 Gaussian window, sigma 1.5, C1=0.01^2, C2=0.03^2,
/// per channel then averaged). Gradient w.r.t. `a`; w.r.t. `b` on request.
double ssim(const Image& a, const Image& b, Image* grad_a = nullptr, Image* grad_b = nullptr);

/// (1 - lambda_ssim) * mean|v - gt| + lambda_ssim * (1 - SSIM(v, gt)).
ScalarWithImageGrad photometric_loss(const Image& v, const Image& v_gt, double lambda_ssim);

struct PseudoConsistency {
    double value = 0;
    Image grad_u1;
    Image grad_u2;
};

/// Photometric agreement between the two models' pseudo-view renders;
/// gradient flows to both.
PseudoConsistency pseudo_view_consistency(const Image& u1, const Image& u2, double lambda_ssim);

/// Edge-aware depth smoothness with depth-range reward. Forward differences;
/// the range subgradient goes to the first argmax/argmin in row-major order.
/// `include_smoothness` exists for the ablation that keeps only the range term.
/// The edge weights depend on the guide image `v`; `grad_v`, when non-null,
/// receives the gradient through them (zero-initialised here).
ScalarWithDepthGrad depth_smoothness(const DepthMap& d, const Image& v, double lambda_r,
                                     bool include_smoothness = true, Image* grad_v = nullptr);

struct TotalDepthSmoothness {
    double value = 0;
    DepthMap grad_d;
    DepthMap grad_d_u;
    Image grad_v;  // through the train-view edge weights
    Image grad_u;  // through the pseudo-view edge weights
};

TotalDepthSmoothness total_depth_smoothness(const Image& v, const DepthMap& d, const Image& u,
                                            const DepthMap& d_u, double omega1, double omega2,
                                            double lambda_r, bool include_smoothness = true);

struct CombinedLoss {
    double value = 0;
    double l_ph = 0, l_tds = 0, l_pseudo = 0;
    Image grad_v;      // train-view color
    DepthMap grad_d;   // train-view depth
    Image grad_u;      // this model's pseudo-view color
    DepthMap grad_d_u; // pseudo-view depth
};

/// Low-phase loss for one model: lambda1*L_ph + lambda2*L_tds + lambda3*L_pseudo.
/// The other model receives its own symmetric pseudo term in its own evaluation.
CombinedLoss combined_loss(const Image& v_k, const Image& v_gt, const DepthMap& d_k,
                           const Image& u_k, const DepthMap& d_uk, const Image& u_other,
                           const LossWeights& w, bool include_smoothness = true);

}  // namespace adgs
