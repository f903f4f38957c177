#include "adgs/config.hpp"

#include <json.hpp>

#include <fstream>

namespace adgs {

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::Warmup: return "warmup";
        case Phase::Low: return "low";
        case Phase::High: return "high";
    }
    return "?";
}

void PhaseSchedule::validate() const {
    if (warmup_iters < 0) throw InvalidParameter("schedule: warmup_iters must be >= 0");
    if (low_len < 1 || high_len < 1) throw InvalidParameter("schedule: phase lengths must be >= 1");
    if (total_iters < warmup_iters) throw InvalidParameter("schedule: total_iters must be >= warmup_iters");
}

Phase phase_for_iteration(int t, const PhaseSchedule& s) {
    if (t < 0 || t >= s.total_iters) throw InvalidParameter("phase_for_iteration: iteration out of range");
    if (t < s.warmup_iters) return Phase::Warmup;
    const int k = (t - s.warmup_iters) % (s.low_len + s.high_len);
    const int first_len = s.low_first ? s.low_len : s.high_len;
    const bool in_first = k < first_len;
    if (s.low_first) return in_first ? Phase::Low : Phase::High;
    return in_first ? Phase::High : Phase::Low;
}

bool is_block_start(int t, const PhaseSchedule& s) {
    if (t < s.warmup_iters) return false;
    const int k = (t - s.warmup_iters) % (s.low_len + s.high_len);
    return k == 0 || k == (s.low_first ? s.low_len : s.high_len);
}

void RunConfig::validate() const {
    schedule.validate();
    weights.validate();
    if (sh_degree < 0 || sh_degree > 2) throw InvalidParameter("config: sh_degree must be 0, 1 or 2");
    if (low_params.opacity_threshold < 0 || low_params.opacity_threshold > 1 ||
        high_params.opacity_threshold < 0 || high_params.opacity_threshold > 1)
        throw InvalidParameter("config: opacity thresholds must be in [0,1]");
    if (low_params.grad_threshold < 0 || high_params.grad_threshold < 0)
        throw InvalidParameter("config: gradient thresholds must be nonnegative");
    if (low_params.split_count < 2 || high_params.split_count < 2)
        throw InvalidParameter("config: split_count must be >= 2");
    if (low_params.split_scale_divisor <= 1 || high_params.split_scale_divisor <= 1)
        throw InvalidParameter("config: split_scale_divisor must be > 1");
}

namespace {

using nlohmann::json;

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown_keys(const json& j, const char* section,
                         std::initializer_list<const char*> known) {
    for (const auto& item : j.items()) {
        bool found = false;
        for (const char* k : known)
            if (item.key() == k) { found = true; break; }
        if (!found)
            throw InvalidParameter(std::string("config: unknown key '") + item.key() +
                                   "' in " + section);
    }
}

void parse_densify(const json& j, DensifyParams& p, const char* section) {
    reject_unknown_keys(j, section,
                        {"grad_threshold", "opacity_threshold", "scale_split_threshold",
                         "split_count", "split_scale_divisor"});
    maybe(j, "grad_threshold", p.grad_threshold);
    maybe(j, "opacity_threshold", p.opacity_threshold);
    maybe(j, "scale_split_threshold", p.scale_split_threshold);
    maybe(j, "split_count", p.split_count);
    maybe(j, "split_scale_divisor", p.split_scale_divisor);
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j = json::parse(in);

    RunConfig cfg;
    reject_unknown_keys(j, "top level",
                        {"schedule", "high_densify", "low_densify", "weights", "optimizer",
                         "pseudo_view", "alternate_densify", "include_smoothness_term",
                         "warmup_densify", "warmup_densify_interval", "sh_degree",
                         "checkpoint_interval", "seed", "render_threads", "loss_mode"});
    if (j.contains("schedule")) {
        const auto& s = j["schedule"];
        reject_unknown_keys(s, "schedule",
                            {"warmup_iters", "low_len", "high_len", "total_iters", "low_first"});
        maybe(s, "warmup_iters", cfg.schedule.warmup_iters);
        maybe(s, "low_len", cfg.schedule.low_len);
        maybe(s, "high_len", cfg.schedule.high_len);
        maybe(s, "total_iters", cfg.schedule.total_iters);
        maybe(s, "low_first", cfg.schedule.low_first);
    }
    if (j.contains("high_densify")) parse_densify(j["high_densify"], cfg.high_params, "high_densify");
    if (j.contains("low_densify")) parse_densify(j["low_densify"], cfg.low_params, "low_densify");
    if (j.contains("weights")) {
        const auto& w = j["weights"];
        reject_unknown_keys(w, "weights",
                            {"lambda_ssim", "lambda_r", "omega1", "omega2",
                             "lambda1", "lambda2", "lambda3"});
        maybe(w, "lambda_ssim", cfg.weights.lambda_ssim);
        maybe(w, "lambda_r", cfg.weights.lambda_r);
        maybe(w, "omega1", cfg.weights.omega1);
        maybe(w, "omega2", cfg.weights.omega2);
        maybe(w, "lambda1", cfg.weights.lambda1);
        maybe(w, "lambda2", cfg.weights.lambda2);
        maybe(w, "lambda3", cfg.weights.lambda3);
    }
    if (j.contains("optimizer")) {
        const auto& o = j["optimizer"];
        reject_unknown_keys(o, "optimizer",
                            {"beta1", "beta2", "eps", "pos_lr_init_frac", "pos_lr_final_frac",
                             "log_scale_lr", "quat_lr", "opacity_lr", "sh_lr"});
        maybe(o, "beta1", cfg.optimizer.beta1);
        maybe(o, "beta2", cfg.optimizer.beta2);
        maybe(o, "eps", cfg.optimizer.eps);
        maybe(o, "pos_lr_init_frac", cfg.optimizer.pos_lr_init_frac);
        maybe(o, "pos_lr_final_frac", cfg.optimizer.pos_lr_final_frac);
        maybe(o, "log_scale_lr", cfg.optimizer.log_scale_lr);
        maybe(o, "quat_lr", cfg.optimizer.quat_lr);
        maybe(o, "opacity_lr", cfg.optimizer.opacity_lr);
        maybe(o, "sh_lr", cfg.optimizer.sh_lr);
    }
    if (j.contains("pseudo_view")) {
        const auto& p = j["pseudo_view"];
        reject_unknown_keys(p, "pseudo_view", {"max_angle_deg", "max_trans_frac"});
        maybe(p, "max_angle_deg", cfg.pseudo_view.max_angle_deg);
        maybe(p, "max_trans_frac", cfg.pseudo_view.max_trans_frac);
    }
    maybe(j, "alternate_densify", cfg.alternate_densify);
    maybe(j, "include_smoothness_term", cfg.include_smoothness_term);
    maybe(j, "warmup_densify", cfg.warmup_densify);
    maybe(j, "warmup_densify_interval", cfg.warmup_densify_interval);
    maybe(j, "sh_degree", cfg.sh_degree);
    maybe(j, "checkpoint_interval", cfg.checkpoint_interval);
    maybe(j, "seed", cfg.seed);
    maybe(j, "render_threads", cfg.render_threads);
    if (j.contains("loss_mode")) {
        const std::string m = j["loss_mode"].get<std::string>();
        if (m == "alternating") cfg.loss_mode = LossMode::Alternating;
        else if (m == "photometric_only") cfg.loss_mode = LossMode::PhotometricOnly;
        else if (m == "combined_always") cfg.loss_mode = LossMode::CombinedAlways;
        else throw InvalidParameter("config: unknown loss_mode '" + m + "'");
    }

    cfg.validate();
    return cfg;
}

void apply_ablation(RunConfig& cfg, char variant) {
    switch (variant) {
        case 'A':  // no alternating densification, alternating losses kept
            cfg.alternate_densify = false;
            break;
        case 'B':  // alternating densification kept, photometric loss only
            cfg.loss_mode = LossMode::PhotometricOnly;
            break;
        case 'C':  // combined loss every iteration, densification not alternated
            cfg.loss_mode = LossMode::CombinedAlways;
            cfg.alternate_densify = false;
            break;
        case 'D':  // no pseudo-view consistency
            cfg.weights.lambda3 = 0;
            break;
        case 'E':  // no edge-aware smoothness term, range reward kept
            cfg.include_smoothness_term = false;
            break;
        case 'F':  // no depth smoothness loss at all
            cfg.weights.lambda2 = 0;
            break;
        default:
            throw InvalidParameter(std::string("unknown ablation variant '") + variant + "'");
    }
}

}  // namespace adgs
