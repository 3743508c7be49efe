#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "attrib/perturbation.hpp"

namespace attrib {

enum class AdaptiveObjective { aupc, autvc };

const char* adaptive_objective_name(AdaptiveObjective o);
AdaptiveObjective adaptive_objective_from_name(const std::string& name);

struct AdaptiveConfig {
    std::size_t max_iterations = 20;  // i_max
    double learning_rate = 0.1;      // alpha
    double learning_decay = 0.9;     // gamma, in (0,1)
    std::size_t max_stop_count = 3;  // s_max
    AdaptiveObjective objective = AdaptiveObjective::autvc;
    std::size_t roots = 150;         // R
    std::uint64_t seed = 0;
};

struct AdaptiveIteration {
    std::size_t iteration = 0;
    double sigma = 0.0;
    double auc = 0.0;
    double alpha = 0.0;
    std::size_t stop_count = 0;
};

struct AdaptiveTrace {
    std::vector<AdaptiveIteration> iterations;
    double initial_sigma = 0.0;
    double initial_auc = 0.0;
    double best_sigma = 0.0;  // sigma*
    double best_auc = 0.0;    // AUC*
};

/// SmoothTaylor at (sigma, roots), then AUPC of its perturbation curve or
/// AUTVC of its multi-scale TV curve. One seed drives roots and game so
/// repeated probes are comparable (common random numbers).
double compute_auc(const Model& model, const Tensor& x, const ScoreTarget& target, double sigma,
                   std::size_t roots, AdaptiveObjective objective, std::uint64_t seed,
                   const PerturbEvalConfig& eval_cfg, const ValueRange& range,
                   const PyramidOptions& pyramid = {});

/// The heuristic line search over sigma against an arbitrary objective.
/// Starts at init_sigma, probes |sigma + alpha| and falls back to
/// |sigma - alpha|, decays alpha when neither direction improves, stops after
/// max_stop_count is exceeded or max_iterations. Equal objective values count
/// as no improvement. A fallback sigma of exactly 0 is clamped to 1e-8.
AdaptiveTrace sigma_line_search(double init_sigma, const AdaptiveConfig& cfg,
                                const std::function<double(double)>& auc_of_sigma);

/// Full search on a real input: initial sigma = mean |x|.
AdaptiveTrace adaptive_noise_search(const Tensor& x, const Model& model, const ScoreTarget& target,
                                    const AdaptiveConfig& cfg, const PerturbEvalConfig& eval_cfg,
                                    const ValueRange& range, const PyramidOptions& pyramid = {});

void write_trace_csv(const std::filesystem::path& path, const AdaptiveTrace& trace);

}  // namespace attrib
