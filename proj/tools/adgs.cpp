#include "adgs/dataio.hpp"
#include "adgs/image_io.hpp"
#include "adgs/metrics.hpp"
#include "adgs/rasterizer.hpp"
#include "adgs/trainer.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace adgs;

namespace {

void echo_config(const RunConfig& cfg) {
    const char* mode = cfg.loss_mode == LossMode::PhotometricOnly ? "photometric-only"
                       : cfg.loss_mode == LossMode::CombinedAlways ? "combined-always"
                                                                   : "alternating";
    std::cout << "loss mode: " << mode << "  lambda1=" << cfg.weights.lambda1
              << " lambda2=" << cfg.weights.lambda2 << " lambda3=" << cfg.weights.lambda3
              << " lambda_r=" << cfg.weights.lambda_r << " omega1=" << cfg.weights.omega1
              << " omega2=" << cfg.weights.omega2 << "\n";
    std::cout << "schedule: warmup=" << cfg.schedule.warmup_iters
              << " low=" << cfg.schedule.low_len << " high=" << cfg.schedule.high_len
              << " total=" << cfg.schedule.total_iters
              << "  alternate densify: " << (cfg.alternate_densify ? "yes" : "no") << "\n";
    std::cout << "low params: tau=" << cfg.low_params.grad_threshold
              << " eps=" << cfg.low_params.opacity_threshold
              << "  high params: tau=" << cfg.high_params.grad_threshold
              << " eps=" << cfg.high_params.opacity_threshold << "  seed=" << cfg.seed << "\n";
}

int run_train(const std::string& config_path, const std::string& scene_path,
              const std::string& out_dir, std::optional<std::uint64_t> seed,
              const std::string& ablation) {
    RunConfig cfg = load_run_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!ablation.empty()) {
        if (ablation.size() != 1) throw InvalidParameter("ablation must be one of A..F");
        apply_ablation(cfg, ablation[0]);
    }
    echo_config(cfg);
    const SceneDataset ds = load_scene(scene_path);
    const TrainState state = train(ds, cfg, out_dir);
    const EvalReport rep = evaluate(state.cloud[0], ds.test_cameras, ds.test_images, ds.test_depths);
    std::cout << eval_summary(rep);
    return 0;
}

std::vector<Camera> spiral_trajectory(const GaussianCloud& cloud, int frames) {
    Vec3 center = Vec3::Zero();
    for (const auto& g : cloud.gaussians) center += g.mu;
    if (!cloud.gaussians.empty()) center /= static_cast<double>(cloud.gaussians.size());
    double radius = 0.5;
    for (const auto& g : cloud.gaussians) radius = std::max(radius, (g.mu - center).norm());

    std::vector<Camera> cams;
    for (int i = 0; i < frames; ++i) {
        const double th = 2.0 * M_PI * i / frames;
        const double lift = 0.4 * radius * std::sin(2.0 * th);  // spiral bob
        const Vec3 pos = center + Vec3(2.5 * radius * std::cos(th), lift + 0.5 * radius,
                                       2.5 * radius * std::sin(th));
        Camera cam;
        cam.width = cam.height = 256;
        cam.fx = cam.fy = 280.0;
        cam.cx = cam.cy = 128.0;
        const Vec3 z = (center - pos).normalized();
        const Vec3 x = z.cross(Vec3(0, 1, 0)).normalized();
        const Vec3 y = z.cross(x);
        cam.rotation.row(0) = x.transpose();
        cam.rotation.row(1) = y.transpose();
        cam.rotation.row(2) = z.transpose();
        cam.translation = -cam.rotation * pos;
        cams.push_back(cam);
    }
    return cams;
}

int run_render(const std::string& ckpt_path, std::optional<int> camera_index,
               const std::string& trajectory, const std::string& scene_path,
               const std::string& out_dir) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    fs::create_directories(out_dir);
    char buf[64];

    if (camera_index) {
        if (scene_path.empty())
            throw InvalidParameter("render --camera requires --scene to index cameras");
        const SceneDataset ds = load_scene(scene_path);
        std::vector<Camera> all = ds.train_cameras;
        all.insert(all.end(), ds.test_cameras.begin(), ds.test_cameras.end());
        if (*camera_index < 0 || *camera_index >= static_cast<int>(all.size()))
            throw InvalidParameter("camera index out of range");
        const RenderOutput out = render(ckpt.cloud, all[*camera_index]);
        std::snprintf(buf, sizeof buf, "camera_%03d.png", *camera_index);
        write_png((fs::path(out_dir) / buf).string(), out.color);
        std::snprintf(buf, sizeof buf, "camera_%03d.pfm", *camera_index);
        write_pfm((fs::path(out_dir) / buf).string(), out.color);
        std::cout << "wrote 1 frame to " << out_dir << "\n";
        return 0;
    }
    if (trajectory != "spiral") throw InvalidParameter("unknown trajectory: " + trajectory);
    const std::vector<Camera> cams = spiral_trajectory(ckpt.cloud, 60);
    for (size_t i = 0; i < cams.size(); ++i) {
        const RenderOutput out = render(ckpt.cloud, cams[i]);
        std::snprintf(buf, sizeof buf, "frame_%03zu.png", i);
        write_png((fs::path(out_dir) / buf).string(), out.color);
    }
    std::cout << "wrote " << cams.size() << " frames to " << out_dir << "\n";
    return 0;
}

int run_eval(const std::string& ckpt_path, const std::string& scene_path,
             const std::string& out_csv) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const SceneDataset ds = load_scene(scene_path);
    const EvalReport rep = evaluate(ckpt.cloud, ds.test_cameras, ds.test_images, ds.test_depths);
    write_eval_csv(out_csv, rep);
    std::cout << eval_summary(rep);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse-input Gaussian splatting with alternating densification"};
    app.require_subcommand(1);

    std::string config_path, scene_path, out_path, ablation, preset, trajectory, ckpt_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> camera_index;
    int threads = 0;

    CLI::App* train_cmd = app.add_subcommand("train", "Train a model on a scene directory");
    train_cmd->add_option("--config", config_path, "JSON run config")->required();
    train_cmd->add_option("--scene", scene_path, "scene directory")->required();
    train_cmd->add_option("--out", out_path, "output directory")->required();
    train_cmd->add_option("--seed", seed, "RNG seed (overrides config)");
    train_cmd->add_option("--ablation", ablation, "ablation variant A..F");

    CLI::App* render_cmd = app.add_subcommand("render", "Render views from a checkpoint");
    render_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    render_cmd->add_option("--camera", camera_index, "scene camera index");
    render_cmd->add_option("--trajectory", trajectory, "trajectory name (spiral)");
    render_cmd->add_option("--scene", scene_path, "scene directory (for --camera)");
    render_cmd->add_option("--out", out_path, "output directory")->required();

    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a scene's test split");
    eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    eval_cmd->add_option("--scene", scene_path, "scene directory")->required();
    eval_cmd->add_option("--out", out_path, "output CSV path")->required();

    CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scene");
    synth_cmd->add_option("--preset", preset, "flat-card | layered-boxes | textured-sphere-field")
        ->required();
    synth_cmd->add_option("--out", out_path, "output scene directory")->required();
    synth_cmd->add_option("--seed", seed, "RNG seed")->required();

    app.add_option("--threads", threads, "render thread count (0 = hardware)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        set_render_threads(threads);
        if (train_cmd->parsed()) return run_train(config_path, scene_path, out_path, seed, ablation);
        if (render_cmd->parsed()) {
            if (!camera_index && trajectory.empty())
                throw InvalidParameter("render: need --camera INDEX or --trajectory spiral");
            return run_render(ckpt_path, camera_index, trajectory, scene_path, out_path);
        }
        if (eval_cmd->parsed()) return run_eval(ckpt_path, scene_path, out_path);
        if (synth_cmd->parsed()) {
            std::mt19937_64 rng(*seed);
            synth_scene(preset, rng, out_path);
            std::cout << "wrote scene to " << out_path << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
