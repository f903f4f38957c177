#pragma once

#include "adgs/config.hpp"
#include "adgs/dataio.hpp"
#include "adgs/density.hpp"
#include "adgs/optimizer.hpp"

#include <random>
#include <string>

namespace adgs {

/// Uniformly picks a training camera and applies a small rigid perturbation:
/// rotation by a random axis-angle (angle ~ U(0, max_angle_deg)) and a camera
/// center shift of norm <= max_trans_frac * scene_extent. Intrinsics unchanged.
Camera sample_pseudo_view(const std::vector<Camera>& train_cams, std::mt19937_64& rng,
                          double max_angle_deg, double max_trans_frac, double scene_extent);

struct ModelLoss {
    double l_ph = 0, l_tds = 0, l_pseudo = 0, total = 0;
    int gaussian_count = 0;
    int nan_skipped = 0;
};

struct DensifyEvent {
    int clones = 0, splits = 0, pruned = 0, total = 0;
    bool happened = false;
};

struct StepReport {
    int iteration = 0;
    Phase phase = Phase::Warmup;
    ModelLoss model[2];
    DensifyEvent densify_event[2];
};

/// Two concurrently trained models with independent optimizer and densify
/// statistics; the first model is exported for evaluation.
struct TrainState {
    const SceneDataset* dataset = nullptr;
    RunConfig config;
    GaussianCloud cloud[2];
    OptimizerState opt[2];
    DensifyStats stats[2];
    std::mt19937_64 rng;
    int iteration = 0;

    void init(const SceneDataset& ds, const RunConfig& cfg);
};

/// One training iteration: round-robin train view, phase-dependent loss,
/// optimizer step on both models, densify+prune at block starts.
StepReport train_step(TrainState& state);

/// Full run. Writes loss.csv and density.csv plus periodic checkpoints of the
/// first model into out_dir; final model saved as final.ckpt. Returns the state
/// after the last iteration.
TrainState train(const SceneDataset& dataset, const RunConfig& cfg, const std::string& out_dir);

}  // namespace adgs
