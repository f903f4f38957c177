#pragma once

#include "adgs/density.hpp"
#include "adgs/losses.hpp"

#include <string>

namespace adgs {

enum class Phase { Warmup, Low, High };

const char* phase_name(Phase p);

struct PhaseSchedule {
    int warmup_iters = 1500;   // N_W
    int low_len = 100;         // N_L
    int high_len = 100;        // N_H
    int total_iters = 10000;
    bool low_first = true;

    void validate() const;
};

Phase phase_for_iteration(int t, const PhaseSchedule& s);
/// True at the first iteration of every alternating (low/high) block.
bool is_block_start(int t, const PhaseSchedule& s);

/// Loss scheduling across phases; PhotometricOnly and CombinedAlways back the
/// ablation variants that disable the alternation.
enum class LossMode { Alternating, PhotometricOnly, CombinedAlways };

struct OptimizerConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-15;
    double pos_lr_init_frac = 1.6e-4;   // times scene extent
    double pos_lr_final_frac = 1.6e-6;  // exponential decay target
    double log_scale_lr = 0.005;
    double quat_lr = 0.001;
    double opacity_lr = 0.05;
    double sh_lr = 0.0025;
};

struct PseudoViewConfig {
    double max_angle_deg = 3.0;
    double max_trans_frac = 0.02;
};

struct RunConfig {
    PhaseSchedule schedule;
    DensifyParams high_params{0.0002, 0.005, 0.01, 2, 1.6};
    DensifyParams low_params{0.0005, 0.1, 0.01, 2, 1.6};
    LossWeights weights;
    OptimizerConfig optimizer;
    PseudoViewConfig pseudo_view;

    LossMode loss_mode = LossMode::Alternating;
    bool alternate_densify = true;       // false: high-phase params throughout
    bool include_smoothness_term = true; // false: range reward only (ablation E)
    bool warmup_densify = true;
    int warmup_densify_interval = 100;

    int sh_degree = 0;
    int checkpoint_interval = 1000;
    std::uint64_t seed = 0;
    int render_threads = 0;

    void validate() const;
};

/// Loads a JSON config; any absent field keeps its default above.
RunConfig load_run_config(const std::string& path);

/// Applies one of the ablation variants A..F on top of a config.
void apply_ablation(RunConfig& cfg, char variant);

}  // namespace adgs
