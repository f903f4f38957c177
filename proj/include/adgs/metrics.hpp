#pragma once

#include "adgs/rasterizer.hpp"
#include "adgs/scene.hpp"

#include <optional>
#include <string>
#include <vector>

namespace adgs {

/// Returned by depth_srocc when either input is constant under the mask
/// (correlation undefined).
constexpr double kSroccUndefined = -2.0;

struct EvalReport {
    std::vector<double> view_psnr;
    std::vector<double> view_ssim;
    std::vector<double> view_srocc;  // kSroccUndefined when no reference depth
    std::vector<int> skipped_views;  // indices without ground truth
    double mean_psnr = 0;
    double mean_ssim = 0;
    double mean_srocc = 0;
    bool means_defined = false;
    bool srocc_defined = false;
    int gaussian_count = 0;
    size_t model_bytes = 0;
};

/// 10·log10(1/MSE) over all channels, capped at 99 dB for exact matches.
double psnr(const Image& a, const Image& b);

/// Spearman rank-order correlation: fractional ranks then Pearson. Pixels with
/// mask == 0 are excluded. Returns kSroccUndefined on constant input.
double depth_srocc(const DepthMap& d_pred, const DepthMap& d_ref, const Eigen::ArrayXXd& mask);

/// Renders every test view and assembles per-view + mean metrics. SROCC uses
/// pixels whose accumulated alpha exceeds 0.5. Views lacking a ground-truth
/// image (empty channels) are skipped and flagged.
EvalReport evaluate(const GaussianCloud& model, const std::vector<Camera>& test_cams,
                    const std::vector<Image>& gt_images, const std::vector<DepthMap>& ref_depths);

/// Per-view CSV with stable schema (lpips reported as "not computed").
void write_eval_csv(const std::string& path, const EvalReport& report);
std::string eval_summary(const EvalReport& report);

}  // namespace adgs
