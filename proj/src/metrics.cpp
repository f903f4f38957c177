#include "adgs/metrics.hpp"

#include "adgs/dataio.hpp"
#include "adgs/losses.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace adgs {

double psnr(const Image& a, const Image& b) {
    require_same_shape(a, b, "psnr");
    double sq = 0;
    for (int c = 0; c < 3; ++c) sq += (a.ch[c] - b.ch[c]).square().sum();
    const double mse = sq / (3.0 * a.height * a.width);
    if (mse <= 0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

namespace {

// Average-rank (fractional) ranks: ties share the mean of their positions.
std::vector<double> fractional_ranks(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double r = 0.5 * (i + j) + 1.0;  // 1-based mean rank of the tie group
        for (int k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double cab = 0, caa = 0, cbb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        cab += da * db;
        caa += da * da;
        cbb += db * db;
    }
    if (caa <= 0 || cbb <= 0) return kSroccUndefined;
    return cab / std::sqrt(caa * cbb);
}

}  // namespace

double depth_srocc(const DepthMap& d_pred, const DepthMap& d_ref, const Eigen::ArrayXXd& mask) {
    if (d_pred.rows() != d_ref.rows() || d_pred.cols() != d_ref.cols() ||
        mask.rows() != d_pred.rows() || mask.cols() != d_pred.cols())
        throw ShapeError("depth_srocc: shape mismatch");
    std::vector<double> p, r;
    for (Eigen::Index row = 0; row < d_pred.rows(); ++row)
        for (Eigen::Index col = 0; col < d_pred.cols(); ++col)
            if (mask(row, col) != 0) {
                p.push_back(d_pred(row, col));
                r.push_back(d_ref(row, col));
            }
    if (p.size() < 2) throw InvalidParameter("depth_srocc: fewer than 2 valid pixels");
    return pearson(fractional_ranks(p), fractional_ranks(r));
}

EvalReport evaluate(const GaussianCloud& model, const std::vector<Camera>& test_cams,
                    const std::vector<Image>& gt_images, const std::vector<DepthMap>& ref_depths) {
    if (test_cams.size() != gt_images.size())
        throw InvalidParameter("evaluate: cameras and ground-truth images misaligned");
    if (!ref_depths.empty() && ref_depths.size() != test_cams.size())
        throw InvalidParameter("evaluate: reference depths misaligned");

    EvalReport rep;
    rep.gaussian_count = static_cast<int>(model.gaussians.size());
    rep.model_bytes = checkpoint_byte_size(rep.gaussian_count, model.sh_degree);

    double sum_psnr = 0, sum_ssim = 0, sum_srocc = 0;
    int n = 0, n_srocc = 0;
    for (size_t i = 0; i < test_cams.size(); ++i) {
        if (gt_images[i].height == 0 || gt_images[i].width == 0) {
            rep.skipped_views.push_back(static_cast<int>(i));
            continue;
        }
        const RenderOutput out = render(model, test_cams[i]);
        const double view_psnr = psnr(out.color, gt_images[i]);
        const double view_ssim = ssim(out.color, gt_images[i]);
        double view_srocc = kSroccUndefined;
        if (!ref_depths.empty()) {
            const Eigen::ArrayXXd mask = (out.accum_alpha > 0.5).cast<double>();
            if ((mask != 0).count() >= 2) view_srocc = depth_srocc(out.depth, ref_depths[i], mask);
        }
        rep.view_psnr.push_back(view_psnr);
        rep.view_ssim.push_back(view_ssim);
        rep.view_srocc.push_back(view_srocc);
        sum_psnr += view_psnr;
        sum_ssim += view_ssim;
        if (view_srocc != kSroccUndefined) {
            sum_srocc += view_srocc;
            ++n_srocc;
        }
        ++n;
    }
    rep.means_defined = n > 0;
    rep.srocc_defined = n_srocc > 0;
    if (n > 0) {
        rep.mean_psnr = sum_psnr / n;
        rep.mean_ssim = sum_ssim / n;
    }
    if (n_srocc > 0) rep.mean_srocc = sum_srocc / n_srocc;
    return rep;
}

void write_eval_csv(const std::string& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write eval csv: " + path);
    out << "view,psnr,ssim,depth_srocc,lpips\n";
    char buf[128];
    for (size_t i = 0; i < report.view_psnr.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,", i, report.view_psnr[i],
                      report.view_ssim[i]);
        out << buf;
        if (report.view_srocc[i] == kSroccUndefined)
            out << "not computed";
        else {
            std::snprintf(buf, sizeof buf, "%.17g", report.view_srocc[i]);
            out << buf;
        }
        out << ",not computed\n";
    }
    out << "mean,";
    if (report.means_defined) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,", report.mean_psnr, report.mean_ssim);
        out << buf;
    } else {
        out << "undefined,undefined,";
    }
    if (report.srocc_defined) {
        std::snprintf(buf, sizeof buf, "%.17g", report.mean_srocc);
        out << buf;
    } else {
        out << "undefined";
    }
    out << ",not computed\n";
}

std::string eval_summary(const EvalReport& report) {
    std::ostringstream s;
    s << "views evaluated: " << report.view_psnr.size();
    if (!report.skipped_views.empty()) s << " (skipped " << report.skipped_views.size() << ")";
    s << "\ngaussians: " << report.gaussian_count << "  model bytes: " << report.model_bytes << "\n";
    if (report.means_defined) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "mean PSNR: %.4f dB  mean SSIM: %.6f\n", report.mean_psnr,
                      report.mean_ssim);
        s << buf;
        if (report.srocc_defined) {
            std::snprintf(buf, sizeof buf, "mean depth SROCC: %.6f\n", report.mean_srocc);
            s << buf;
        } else {
            s << "mean depth SROCC: not computed\n";
        }
    } else {
        s << "no views with ground truth; means undefined\n";
    }
    return s.str();
}

}  // namespace adgs
