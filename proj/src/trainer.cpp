#include "adgs/trainer.hpp"

#include "adgs/rasterizer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace adgs {

namespace fs = std::filesystem;

Camera sample_pseudo_view(const std::vector<Camera>& train_cams, std::mt19937_64& rng,
                          double max_angle_deg, double max_trans_frac, double scene_extent) {
    if (train_cams.empty()) throw InvalidParameter("sample_pseudo_view: no training cameras");
    std::uniform_int_distribution<size_t> pick(0, train_cams.size() - 1);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    Camera cam = train_cams[pick(rng)];
    // Fixed draw order keeps seeded runs reproducible even when limits are 0.
    Vec3 axis(normal(rng), normal(rng), normal(rng));
    const double angle = uni(rng) * max_angle_deg * M_PI / 180.0;
    Vec3 dir(normal(rng), normal(rng), normal(rng));
    const double shift = uni(rng) * max_trans_frac * scene_extent;

    if (axis.norm() < 1e-12) axis = Vec3(0, 0, 1);
    const Mat3 d_rot = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
    const Vec3 center = cam.center() + (dir.norm() < 1e-12 ? Vec3::Zero() : Vec3(shift * dir.normalized()));
    cam.rotation = cam.rotation * d_rot.transpose();
    cam.translation = -cam.rotation * center;
    return cam;
}

void TrainState::init(const SceneDataset& ds, const RunConfig& cfg) {
    cfg.validate();
    if (ds.train_cameras.empty()) throw InvalidParameter("train: dataset has no training views");
    dataset = &ds;
    config = cfg;
    rng.seed(cfg.seed);
    iteration = 0;
    GaussianCloud base = init_cloud(ds, rng, cfg.sh_degree);
    for (int k = 0; k < 2; ++k) {
        cloud[k] = base;
        opt[k].beta1 = cfg.optimizer.beta1;
        opt[k].beta2 = cfg.optimizer.beta2;
        opt[k].eps = cfg.optimizer.eps;
        opt[k].init(cloud[k]);
        stats[k].resize(cloud[k].size());
    }
}

namespace {

double position_lr(const TrainState& s) {
    const OptimizerConfig& o = s.config.optimizer;
    const double frac = static_cast<double>(s.iteration) / std::max(1, s.config.schedule.total_iters);
    return s.dataset->scene_extent * o.pos_lr_init_frac *
           std::pow(o.pos_lr_final_frac / o.pos_lr_init_frac, frac);
}

DensifyEvent densify_and_prune(TrainState& s, int k, const DensifyParams& params) {
    DensifyEvent ev;
    ev.happened = true;
    const DensifyResult dres =
        densify(s.cloud[k], s.stats[k], params, s.dataset->scene_extent, s.rng);
    s.opt[k].drop_rows(dres.removed_parents);
    s.opt[k].append_rows(dres.appended);
    ev.clones = dres.clones;
    ev.splits = dres.splits;

    const PruneResult pres = prune(s.cloud[k], params.opacity_threshold);
    s.opt[k].drop_rows(pres.removed);
    s.stats[k].resize(s.cloud[k].size());
    ev.pruned = static_cast<int>(pres.removed.size());
    ev.total = s.cloud[k].size();
    return ev;
}

}  // namespace

StepReport train_step(TrainState& s) {
    const RunConfig& cfg = s.config;
    const PhaseSchedule& sched = cfg.schedule;
    const int t = s.iteration;
    if (t < 0 || t >= sched.total_iters) throw InvalidParameter("train_step: iteration out of range");
    const Phase phase = phase_for_iteration(t, sched);

    StepReport rep;
    rep.iteration = t;
    rep.phase = phase;

    // Densify + prune at the first iteration of every alternating block, and
    // periodically during warm-up when enabled. Without alternation the
    // high-phase thresholds apply throughout.
    if (phase != Phase::Warmup && is_block_start(t, sched)) {
        const DensifyParams& p = !cfg.alternate_densify ? cfg.high_params
                                 : (phase == Phase::Low ? cfg.low_params : cfg.high_params);
        for (int k = 0; k < 2; ++k) rep.densify_event[k] = densify_and_prune(s, k, p);
    } else if (phase == Phase::Warmup && cfg.warmup_densify && t > 0 &&
               t % cfg.warmup_densify_interval == 0) {
        for (int k = 0; k < 2; ++k) rep.densify_event[k] = densify_and_prune(s, k, cfg.high_params);
    }

    const bool combined = cfg.loss_mode == LossMode::CombinedAlways ||
                          (cfg.loss_mode == LossMode::Alternating && phase == Phase::Low);

    const size_t view = static_cast<size_t>(t) % s.dataset->train_cameras.size();
    const Camera& cam = s.dataset->train_cameras[view];
    const Image& gt = s.dataset->train_images[view];

    StepSizes lr;
    lr.mu = position_lr(s);
    lr.log_scale = cfg.optimizer.log_scale_lr;
    lr.quat = cfg.optimizer.quat_lr;
    lr.opacity = cfg.optimizer.opacity_lr;
    lr.sh = cfg.optimizer.sh_lr;

    if (!combined) {
        for (int k = 0; k < 2; ++k) {
            const RenderOutput out = render(s.cloud[k], cam);
            const ScalarWithImageGrad ph = photometric_loss(out.color, gt, cfg.weights.lambda_ssim);
            const GradBundle grads = render_backward(s.cloud[k], cam, ph.grad);
            accumulate(s.stats[k], grads);
            rep.model[k].nan_skipped = optimizer_update(s.opt[k], grads, s.cloud[k], lr);
            rep.model[k].l_ph = ph.value;
            rep.model[k].total = ph.value;
            rep.model[k].gaussian_count = s.cloud[k].size();
        }
    } else {
        const Camera pseudo = sample_pseudo_view(s.dataset->train_cameras, s.rng,
                                                 cfg.pseudo_view.max_angle_deg,
                                                 cfg.pseudo_view.max_trans_frac,
                                                 s.dataset->scene_extent);
        RenderOutput train_out[2], pseudo_out[2];
        for (int k = 0; k < 2; ++k) {
            train_out[k] = render(s.cloud[k], cam);
            pseudo_out[k] = render(s.cloud[k], pseudo);
        }
        for (int k = 0; k < 2; ++k) {
            const CombinedLoss loss = combined_loss(
                train_out[k].color, gt, train_out[k].depth, pseudo_out[k].color,
                pseudo_out[k].depth, pseudo_out[1 - k].color, cfg.weights,
                cfg.include_smoothness_term);
            GradBundle grads = render_backward(s.cloud[k], cam, loss.grad_v, &loss.grad_d);
            grads.add(render_backward(s.cloud[k], pseudo, loss.grad_u, &loss.grad_d_u));
            accumulate(s.stats[k], grads);
            rep.model[k].nan_skipped = optimizer_update(s.opt[k], grads, s.cloud[k], lr);
            rep.model[k].l_ph = loss.l_ph;
            rep.model[k].l_tds = loss.l_tds;
            rep.model[k].l_pseudo = loss.l_pseudo;
            rep.model[k].total = loss.value;
            rep.model[k].gaussian_count = s.cloud[k].size();
        }
    }

    ++s.iteration;
    return rep;
}

TrainState train(const SceneDataset& dataset, const RunConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    set_render_threads(cfg.render_threads);

    TrainState state;
    state.init(dataset, cfg);

    std::ofstream loss_csv(fs::path(out_dir) / "loss.csv");
    std::ofstream density_csv(fs::path(out_dir) / "density.csv");
    if (!loss_csv || !density_csv) throw std::runtime_error("train: cannot open log files");
    loss_csv << "iteration,phase";
    for (int k = 1; k <= 2; ++k)
        loss_csv << ",l_ph_" << k << ",l_tds_" << k << ",l_pseudo_" << k << ",total_" << k
                 << ",gaussians_" << k << ",nan_skipped_" << k;
    loss_csv << "\n";
    density_csv << "iteration,phase,model,clones,splits,pruned,total\n";

    char buf[96];
    for (int t = 0; t < cfg.schedule.total_iters; ++t) {
        StepReport rep;
        try {
            rep = train_step(state);
        } catch (const std::exception&) {
            save_checkpoint((fs::path(out_dir) / "diagnostic.ckpt").string(), state.cloud[0],
                            state.opt[0], state.iteration);
            throw;
        }

        loss_csv << rep.iteration << "," << phase_name(rep.phase);
        for (int k = 0; k < 2; ++k) {
            const ModelLoss& m = rep.model[k];
            std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%.17g", m.l_ph, m.l_tds, m.l_pseudo,
                          m.total);
            loss_csv << buf << "," << m.gaussian_count << "," << m.nan_skipped;
        }
        loss_csv << "\n";
        for (int k = 0; k < 2; ++k) {
            const DensifyEvent& ev = rep.densify_event[k];
            if (!ev.happened) continue;
            density_csv << rep.iteration << "," << phase_name(rep.phase) << "," << (k + 1) << ","
                        << ev.clones << "," << ev.splits << "," << ev.pruned << "," << ev.total
                        << "\n";
        }

        if (cfg.checkpoint_interval > 0 && (t + 1) % cfg.checkpoint_interval == 0 &&
            t + 1 < cfg.schedule.total_iters) {
            std::snprintf(buf, sizeof buf, "ckpt_%06d.ckpt", t + 1);
            save_checkpoint((fs::path(out_dir) / buf).string(), state.cloud[0], state.opt[0], t + 1);
        }
    }
    save_checkpoint((fs::path(out_dir) / "final.ckpt").string(), state.cloud[0], state.opt[0],
                    state.iteration);
    return state;
}

}  // namespace adgs
