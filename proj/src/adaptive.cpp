#include "attrib/adaptive.hpp"

#include <cmath>

#include "attrib/io.hpp"

namespace attrib {

const char* adaptive_objective_name(AdaptiveObjective o) {
    return o == AdaptiveObjective::aupc ? "aupc" : "autvc";
}

AdaptiveObjective adaptive_objective_from_name(const std::string& name) {
    if (name == "aupc") return AdaptiveObjective::aupc;
    if (name == "autvc") return AdaptiveObjective::autvc;
    throw config_error("unknown adaptive objective: " + name);
}

double compute_auc(const Model& model, const Tensor& x, const ScoreTarget& target, double sigma,
                   std::size_t roots, AdaptiveObjective objective, std::uint64_t seed,
                   const PerturbEvalConfig& eval_cfg, const ValueRange& range,
                   const PyramidOptions& pyramid) {
    const AttributionMap map = smooth_taylor(model, x, target, NoiseConfig{sigma, roots, seed});
    if (objective == AdaptiveObjective::aupc) {
        PerturbEvalConfig game = eval_cfg;
        game.seed = seed;
        return aupc(perturbation_game(model, x, map, target, game, range));
    }
    return autvc(multiscale_tv_curve(to_saliency(map), pyramid));
}

AdaptiveTrace sigma_line_search(double init_sigma, const AdaptiveConfig& cfg,
                                const std::function<double(double)>& auc_of_sigma) {
    if (cfg.max_iterations < 1) throw config_error("adaptive search needs max_iterations >= 1");
    if (cfg.learning_decay <= 0.0 || cfg.learning_decay >= 1.0)
        throw config_error("learning decay must lie in (0, 1)");
    if (cfg.learning_rate <= 0.0) throw config_error("learning rate must be positive");

    // Eq (10) needs sigma > 0; a fallback that lands exactly on 0 is clamped.
    const auto clamp_sigma = [](double s) { return s == 0.0 ? 1e-8 : std::abs(s); };

    AdaptiveTrace trace;
    double sigma = clamp_sigma(init_sigma);
    double auc = auc_of_sigma(sigma);
    double alpha = cfg.learning_rate;
    std::size_t stop = 0;

    trace.initial_sigma = sigma;
    trace.initial_auc = auc;
    trace.best_sigma = sigma;
    trace.best_auc = auc;

    // Equal objective values count as "no improvement" on both comparisons:
    // an equal probe falls back to the sigma - alpha direction, and an equal
    // fallback still decays the learning rate.
    for (std::size_t i = 1; i <= cfg.max_iterations; ++i) {
        double auc_s = auc_of_sigma(clamp_sigma(sigma + alpha));
        if (auc_s >= auc) {
            sigma = clamp_sigma(sigma - alpha);
            auc_s = auc_of_sigma(sigma);
        } else {
            sigma = clamp_sigma(sigma + alpha);
        }

        bool stopped = false;
        if (auc_s >= auc) {
            if (stop <= cfg.max_stop_count) {
                alpha *= cfg.learning_decay;
                ++stop;
            } else {
                stopped = true;
            }
        } else {
            stop = 0;
            if (auc_s < trace.best_auc) {
                trace.best_auc = auc_s;
                trace.best_sigma = sigma;
            }
        }

        trace.iterations.push_back(AdaptiveIteration{i, sigma, auc_s, alpha, stop});
        if (stopped) break;
        auc = auc_s;
    }
    return trace;
}

AdaptiveTrace adaptive_noise_search(const Tensor& x, const Model& model, const ScoreTarget& target,
                                    const AdaptiveConfig& cfg, const PerturbEvalConfig& eval_cfg,
                                    const ValueRange& range, const PyramidOptions& pyramid) {
    // sigma_0 = mean |x| over all elements.
    double mean_abs = 0.0;
    for (float v : x.data()) mean_abs += std::abs(static_cast<double>(v));
    mean_abs /= static_cast<double>(x.size());

    // One seed across all probes of the search: AUC values are only
    // comparable when the sampling noise is held fixed.
    const auto oracle = [&](double sigma) {
        return compute_auc(model, x, target, sigma, cfg.roots, cfg.objective, cfg.seed, eval_cfg,
                           range, pyramid);
    };
    return sigma_line_search(mean_abs, cfg, oracle);
}

void write_trace_csv(const std::filesystem::path& path, const AdaptiveTrace& trace) {
    CsvWriter csv({"iteration", "sigma", "auc", "alpha", "stop_count"});
    for (const AdaptiveIteration& it : trace.iterations)
        csv.add_row({std::to_string(it.iteration), format_double(it.sigma), format_double(it.auc),
                     format_double(it.alpha), std::to_string(it.stop_count)});
    csv.save(path);
}

}  // namespace attrib
