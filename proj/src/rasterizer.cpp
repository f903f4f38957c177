#include "adgs/rasterizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace adgs {

namespace {

int g_render_threads = 0;

int effective_threads(int work_items) {
    int n = g_render_threads > 0 ? g_render_threads
                                 : static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    return std::min(n, work_items);
}

// Static block partition; deterministic results do not depend on the split
// because every worker writes to disjoint per-item storage.
template <typename Fn>
void parallel_for(int count, Fn&& fn) {
    const int threads = effective_threads(count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

struct Frame {
    std::vector<Splat2D> splats;  // sorted by (depth, source_index)
    std::vector<Mat2> inv_cov;    // per splat
    int tiles_x = 0, tiles_y = 0;
    std::vector<std::vector<int>> tile_lists;
};

// Pixel extent within which alpha can exceed kAlphaMin; beyond it the
// compositing skip rule discards the contribution anyway, so culling and
// rasterization agree exactly.
double footprint_radius(const Mat2& cov2d) {
    const double tr = cov2d(0, 0) + cov2d(1, 1);
    const double det = cov2d(0, 0) * cov2d(1, 1) - cov2d(0, 1) * cov2d(1, 0);
    const double disc = std::max(0.0, tr * tr / 4.0 - det);
    const double lam_max = tr / 2.0 + std::sqrt(disc);
    return std::sqrt(2.0 * std::log(1.0 / kAlphaMin) * lam_max);
}

Frame build_frame(const GaussianCloud& cloud, const Camera& cam) {
    Frame f;
    f.splats.reserve(cloud.gaussians.size());
    for (int i = 0; i < cloud.size(); ++i) {
        if (auto s = project_gaussian(cloud.gaussians[i], cam, i)) f.splats.push_back(*s);
    }
    std::sort(f.splats.begin(), f.splats.end(), [](const Splat2D& a, const Splat2D& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.source_index < b.source_index;
    });
    f.inv_cov.resize(f.splats.size());
    for (size_t k = 0; k < f.splats.size(); ++k) f.inv_cov[k] = f.splats[k].cov2d.inverse();

    f.tiles_x = (cam.width + kTileSize - 1) / kTileSize;
    f.tiles_y = (cam.height + kTileSize - 1) / kTileSize;
    f.tile_lists.assign(static_cast<size_t>(f.tiles_x) * f.tiles_y, {});
    for (int k = 0; k < static_cast<int>(f.splats.size()); ++k) {
        const Splat2D& s = f.splats[k];
        const int x0 = std::max(0, static_cast<int>(std::floor((s.mean2d.x() - s.radius) / kTileSize)));
        const int x1 = std::min(f.tiles_x - 1, static_cast<int>(std::floor((s.mean2d.x() + s.radius) / kTileSize)));
        const int y0 = std::max(0, static_cast<int>(std::floor((s.mean2d.y() - s.radius) / kTileSize)));
        const int y1 = std::min(f.tiles_y - 1, static_cast<int>(std::floor((s.mean2d.y() + s.radius) / kTileSize)));
        for (int ty = y0; ty <= y1; ++ty)
            for (int tx = x0; tx <= x1; ++tx) f.tile_lists[static_cast<size_t>(ty) * f.tiles_x + tx].push_back(k);
    }
    return f;
}

struct JacobianTerms {
    Eigen::Matrix<double, 2, 3> j;
    Vec3 t;  // camera-space mean
};

JacobianTerms projection_jacobian(const Camera& cam, const Vec3& t) {
    JacobianTerms out;
    out.t = t;
    const double iz = 1.0 / t.z();
    out.j << cam.fx * iz, 0, -cam.fx * t.x() * iz * iz,
             0, cam.fy * iz, -cam.fy * t.y() * iz * iz;
    return out;
}

// Screen-space gradient accumulators, one slot per splat.
struct ScreenGrad {
    Vec2 d_mean2d = Vec2::Zero();
    Vec3 d_inv_cov = Vec3::Zero();  // dL/dLambda as (xx, xy, yy)
    Vec3 d_color = Vec3::Zero();
    double d_opacity = 0;  // w.r.t. activated opacity o
    double d_depth = 0;
    void operator+=(const ScreenGrad& o) {
        d_mean2d += o.d_mean2d;
        d_inv_cov += o.d_inv_cov;
        d_color += o.d_color;
        d_opacity += o.d_opacity;
        d_depth += o.d_depth;
    }
};

}  // namespace

void set_render_threads(int n) { g_render_threads = n; }

void GradBundle::resize_like(const GaussianCloud& cloud) {
    const int n = cloud.size();
    const int k = sh_coeff_count(cloud.sh_degree);
    mu.assign(n, Vec3::Zero());
    log_scale.assign(n, Vec3::Zero());
    quat.assign(n, Vec4::Zero());
    opacity_logit.assign(n, 0.0);
    sh.assign(n, ShMatrix::Zero(k, 3));
    pos_grad_norm = Eigen::VectorXd::Zero(n);
    hits = Eigen::VectorXi::Zero(n);
}

void GradBundle::add(const GradBundle& other) {
    if (mu.size() != other.mu.size()) throw ShapeError("GradBundle::add: size mismatch");
    for (size_t i = 0; i < mu.size(); ++i) {
        mu[i] += other.mu[i];
        log_scale[i] += other.log_scale[i];
        quat[i] += other.quat[i];
        opacity_logit[i] += other.opacity_logit[i];
        sh[i] += other.sh[i];
    }
    pos_grad_norm += other.pos_grad_norm;
    hits += other.hits;
}

std::optional<Splat2D> project_gaussian(const Gaussian3D& g, const Camera& cam, int source_index) {
    const Vec3 t = cam.to_camera(g.mu);
    if (t.z() <= cam.near) return std::nullopt;

    Splat2D s;
    s.source_index = source_index;
    s.depth = t.z();
    s.mean2d = Vec2(cam.fx * t.x() / t.z() + cam.cx, cam.fy * t.y() / t.z() + cam.cy);

    const Mat3 sigma = build_covariance(g.log_scale, g.quat);
    const auto jt = projection_jacobian(cam, t);
    const Mat3 m = cam.rotation * sigma * cam.rotation.transpose();
    s.cov2d = jt.j * m * jt.j.transpose();
    s.cov2d(0, 0) += kCovFloor;
    s.cov2d(1, 1) += kCovFloor;

    s.radius = footprint_radius(s.cov2d);
    if (s.mean2d.x() + s.radius < 0 || s.mean2d.x() - s.radius > cam.width ||
        s.mean2d.y() + s.radius < 0 || s.mean2d.y() - s.radius > cam.height)
        return std::nullopt;

    s.color = eval_sh_color(g.sh, (g.mu - cam.center()).normalized());
    s.opacity = g.opacity();
    return s;
}

RenderOutput render(const GaussianCloud& cloud, const Camera& cam) {
    cam.validate();
    RenderOutput out;
    out.color = Image(cam.height, cam.width);
    out.depth = DepthMap::Zero(cam.height, cam.width);
    out.accum_alpha = Eigen::ArrayXXd::Zero(cam.height, cam.width);
    out.contrib_count = Eigen::ArrayXXi::Zero(cam.height, cam.width);

    const Frame frame = build_frame(cloud, cam);
    const Vec3 bg = cloud.background_color;

    parallel_for(static_cast<int>(frame.tile_lists.size()), [&](int tile) {
        const auto& list = frame.tile_lists[tile];
        const int tx = tile % frame.tiles_x, ty = tile / frame.tiles_x;
        const int r0 = ty * kTileSize, r1 = std::min(cam.height, r0 + kTileSize);
        const int c0 = tx * kTileSize, c1 = std::min(cam.width, c0 + kTileSize);
        for (int r = r0; r < r1; ++r) {
            for (int c = c0; c < c1; ++c) {
                const Vec2 p(c + 0.5, r + 0.5);
                double t = 1.0, d = 0.0;
                Vec3 col = Vec3::Zero();
                int n = 0;
                for (int k : list) {
                    const Splat2D& s = frame.splats[k];
                    const Vec2 delta = p - s.mean2d;
                    const double q = delta.dot(frame.inv_cov[k] * delta);
                    const double alpha = std::min(kAlphaClamp, s.opacity * std::exp(-0.5 * q));
                    if (alpha < kAlphaMin) continue;
                    const double w = alpha * t;
                    col += w * s.color;
                    d += w * s.depth;
                    t *= 1.0 - alpha;
                    ++n;
                    if (t < kTransmittanceStop) break;
                }
                col += t * bg;
                out.color.set_pixel(r, c, col);
                out.depth(r, c) = d;
                out.accum_alpha(r, c) = 1.0 - t;
                out.contrib_count(r, c) = n;
            }
        }
    });
    return out;
}

GradBundle render_backward(const GaussianCloud& cloud, const Camera& cam,
                           const Image& upstream, const DepthMap* upstream_depth) {
    cam.validate();
    if (upstream.height != cam.height || upstream.width != cam.width)
        throw ShapeError("render_backward: upstream shape does not match viewport");
    if (upstream_depth &&
        (upstream_depth->rows() != cam.height || upstream_depth->cols() != cam.width))
        throw ShapeError("render_backward: upstream depth shape does not match viewport");

    GradBundle grads;
    grads.resize_like(cloud);

    const Frame frame = build_frame(cloud, cam);
    const int n_splats = static_cast<int>(frame.splats.size());
    const Vec3 bg = cloud.background_color;

    // Per-tile accumulators indexed by position in the tile list, reduced
    // into per-splat totals in fixed tile order afterwards.
    std::vector<std::vector<ScreenGrad>> tile_grads(frame.tile_lists.size());

    parallel_for(static_cast<int>(frame.tile_lists.size()), [&](int tile) {
        const auto& list = frame.tile_lists[tile];
        auto& acc = tile_grads[tile];
        acc.assign(list.size(), ScreenGrad{});
        if (list.empty()) return;
        const int tx = tile % frame.tiles_x, ty = tile / frame.tiles_x;
        const int r0 = ty * kTileSize, r1 = std::min(cam.height, r0 + kTileSize);
        const int c0 = tx * kTileSize, c1 = std::min(cam.width, c0 + kTileSize);

        std::vector<std::pair<int, double>> hitlist;  // (position in list, alpha)
        hitlist.reserve(list.size());
        for (int r = r0; r < r1; ++r) {
            for (int c = c0; c < c1; ++c) {
                const Vec2 p(c + 0.5, r + 0.5);
                // Forward replay with the exact skip/stop rules.
                hitlist.clear();
                double t = 1.0;
                for (int pos = 0; pos < static_cast<int>(list.size()); ++pos) {
                    const Splat2D& s = frame.splats[list[pos]];
                    const Vec2 delta = p - s.mean2d;
                    const double q = delta.dot(frame.inv_cov[list[pos]] * delta);
                    const double alpha = std::min(kAlphaClamp, s.opacity * std::exp(-0.5 * q));
                    if (alpha < kAlphaMin) continue;
                    hitlist.emplace_back(pos, alpha);
                    t *= 1.0 - alpha;
                    if (t < kTransmittanceStop) break;
                }
                if (hitlist.empty()) continue;
                const double t_final = t;

                const Vec3 g_color = upstream.pixel(r, c);
                const double g_depth = upstream_depth ? (*upstream_depth)(r, c) : 0.0;

                // Back-to-front sweep with suffix sums of composited color/depth.
                Vec3 suffix_c = Vec3::Zero();
                double suffix_z = 0.0;
                double t_after = t_final;
                for (int i = static_cast<int>(hitlist.size()) - 1; i >= 0; --i) {
                    const auto [pos, alpha] = hitlist[i];
                    const int k = list[pos];
                    const Splat2D& s = frame.splats[k];
                    const double t_before = t_after / (1.0 - alpha);
                    const double w = alpha * t_before;
                    ScreenGrad& sg = acc[pos];

                    sg.d_color += w * g_color;
                    sg.d_depth += w * g_depth;

                    const double inv_om = 1.0 / (1.0 - alpha);
                    const Vec3 dc_dalpha = t_before * s.color - (suffix_c + t_final * bg) * inv_om;
                    const double dd_dalpha = t_before * s.depth - suffix_z * inv_om;
                    const double g_alpha = g_color.dot(dc_dalpha) + g_depth * dd_dalpha;

                    // Gradient is zero through the alpha clamp.
                    if (alpha < kAlphaClamp) {
                        const Vec2 delta = p - s.mean2d;
                        const double gauss = alpha / s.opacity;  // exp(-q/2)
                        sg.d_opacity += g_alpha * gauss;
                        const double g_gauss = g_alpha * s.opacity;
                        const Vec2 lam_delta = frame.inv_cov[k] * delta;
                        sg.d_mean2d += g_gauss * gauss * lam_delta;
                        const double cg = -0.5 * g_gauss * gauss;
                        sg.d_inv_cov += cg * Vec3(delta.x() * delta.x(), delta.x() * delta.y(),
                                                  delta.y() * delta.y());
                    }

                    suffix_c += w * s.color;
                    suffix_z += w * s.depth;
                    t_after = t_before;
                }
            }
        }
    });

    // Fixed-order reduction: tile index, then list position.
    std::vector<ScreenGrad> total(n_splats);
    for (size_t tile = 0; tile < frame.tile_lists.size(); ++tile) {
        const auto& list = frame.tile_lists[tile];
        for (size_t pos = 0; pos < list.size(); ++pos) total[list[pos]] += tile_grads[tile][pos];
    }

    // Chain screen-space gradients through projection, covariance, SH, and
    // the log/logit parameterizations. Independent per splat.
    parallel_for(n_splats, [&](int k) {
        const Splat2D& s = frame.splats[k];
        const ScreenGrad& sg = total[k];
        const int src = s.source_index;
        const Gaussian3D& g = cloud.gaussians[src];

        grads.hits[src] = 1;
        grads.pos_grad_norm[src] = sg.d_mean2d.norm();

        // dL/dLambda -> dL/dcov2d (Lambda = cov2d^{-1}).
        Mat2 d_lambda;
        d_lambda << sg.d_inv_cov[0], sg.d_inv_cov[1], sg.d_inv_cov[1], sg.d_inv_cov[2];
        const Mat2 d_cov2d = -frame.inv_cov[k] * d_lambda * frame.inv_cov[k];

        const Vec3 t = cam.to_camera(g.mu);
        const auto jt = projection_jacobian(cam, t);
        const Mat3 sigma = build_covariance(g.log_scale, g.quat);
        const Mat3 m = cam.rotation * sigma * cam.rotation.transpose();

        Vec3 d_t = jt.j.transpose() * sg.d_mean2d;
        d_t.z() += sg.d_depth;

        const Mat3 d_m = jt.j.transpose() * d_cov2d * jt.j;
        const Eigen::Matrix<double, 2, 3> d_j = 2.0 * d_cov2d * jt.j * m;
        const double iz2 = 1.0 / (t.z() * t.z());
        const double iz3 = iz2 / t.z();
        d_t.x() += d_j(0, 2) * (-cam.fx * iz2);
        d_t.y() += d_j(1, 2) * (-cam.fy * iz2);
        d_t.z() += d_j(0, 0) * (-cam.fx * iz2) + d_j(1, 1) * (-cam.fy * iz2) +
                   d_j(0, 2) * (2.0 * cam.fx * t.x() * iz3) +
                   d_j(1, 2) * (2.0 * cam.fy * t.y() * iz3);

        const Mat3 d_sigma = cam.rotation.transpose() * d_m * cam.rotation;
        Vec3 d_mu = cam.rotation.transpose() * d_t;

        // Sigma = A A^T with A = R(q) diag(s).
        const Vec4 qn = normalize_quat(g.quat);
        const Mat3 rot = quat_to_rotation(qn);
        const Vec3 sc = g.scale();
        const Mat3 a = rot * sc.asDiagonal();
        const Mat3 d_a = 2.0 * d_sigma * a;
        const Mat3 d_rot = d_a * sc.asDiagonal();
        const Mat3 rt_da = rot.transpose() * d_a;
        for (int i = 0; i < 3; ++i) grads.log_scale[src][i] = rt_da(i, i) * sc[i];

        const auto dr = quat_rotation_jacobian(qn);
        Vec4 d_qn;
        for (int i = 0; i < 4; ++i) d_qn[i] = (d_rot.array() * dr[i].array()).sum();
        const Eigen::Matrix4d qproj = Eigen::Matrix4d::Identity() - qn * qn.transpose();
        grads.quat[src] = (qproj * d_qn) / g.quat.norm();

        // Color: clamp mask, SH coefficients, and view-direction dependence.
        const Vec3 cam_center = cam.center();
        const Vec3 rel = g.mu - cam_center;
        const double rn = rel.norm();
        const Vec3 dir = rel / rn;
        const int kc = static_cast<int>(g.sh.rows());
        double basis[9];
        Vec3 dbasis[9];
        sh_basis_grad(kc, dir, basis, dbasis);
        Vec3 raw = Vec3::Constant(0.5);
        for (int i = 0; i < kc; ++i) raw += basis[i] * g.sh.row(i).transpose();
        Vec3 d_color = sg.d_color;
        for (int c = 0; c < 3; ++c)
            if (raw[c] <= 0.0 || raw[c] >= 1.0) d_color[c] = 0.0;
        Vec3 d_dir = Vec3::Zero();
        for (int i = 0; i < kc; ++i) {
            grads.sh[src].row(i) = basis[i] * d_color.transpose();
            d_dir += dbasis[i] * (g.sh.row(i) * d_color);
        }
        d_mu += (Mat3::Identity() - dir * dir.transpose()) / rn * d_dir;

        grads.mu[src] = d_mu;
        const double o = s.opacity;
        grads.opacity_logit[src] = sg.d_opacity * o * (1.0 - o);
    });

    return grads;
}

}  // namespace adgs
