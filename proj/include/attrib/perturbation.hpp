#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "attrib/attribution.hpp"
#include "attrib/rng.hpp"
#include "attrib/saliency.hpp"

namespace attrib {

struct Region {
    std::size_t row = 0, col = 0;

    bool operator==(const Region&) const = default;
};

/// Top-L most salient non-overlapping k x k windows, most relevant first.
struct RegionSequence {
    std::vector<Region> regions;
    std::size_t kernel = 0;
};

struct PerturbEvalConfig {
    std::size_t kernel = 15;   // k
    std::size_t steps = 30;    // L
    std::size_t samples = 50;  // P
    std::uint64_t seed = 0;
};

/// Normalized mean-score curve; points[l] = (l, y_mean_l / f(x)), point 0 is
/// exactly 1.
struct PerturbationCurve {
    std::vector<std::pair<std::size_t, double>> points;
    std::uint64_t seed = 0;
};

/// Scores every stride-1 window by mean absolute attribution, then greedily
/// keeps the best window, discards everything overlapping it, and repeats
/// until cfg.steps are selected. Ties break to the row-major earliest anchor.
RegionSequence order_regions(const AttributionMap& attr, const PerturbEvalConfig& cfg);
RegionSequence order_regions(const SaliencyMap& s, const PerturbEvalConfig& cfg);
/// Core over an explicit spatial relevance map.
RegionSequence order_regions_grid(std::size_t height, std::size_t width,
                                  std::span<const float> relevance, const PerturbEvalConfig& cfg);

/// Spatial mean-|attr| map (channels averaged) used for window scoring.
std::vector<float> spatial_relevance(const Tensor& values, std::size_t& height, std::size_t& width);

/// Copy of x with every channel of the k x k window at `region` replaced by
/// i.i.d. uniform draws over the valid range; all other elements bitwise
/// unchanged.
Tensor perturb_region(const Tensor& x, const Region& region, std::size_t kernel,
                      const ValueRange& range, Rng& rng);

/// The sensitivity game: at each step draws cfg.samples candidate
/// perturbations of the next region, records their mean score, and commits
/// the candidate with the median score (lower median for even sample
/// counts). Requires target to be the model's predicted class on x.
PerturbationCurve perturbation_game(const Model& model, const Tensor& x, const AttributionMap& attr,
                                    const ScoreTarget& target, const PerturbEvalConfig& cfg,
                                    const ValueRange& range);
PerturbationCurve perturbation_game(const ScoreOracle& oracle, const Tensor& x,
                                    const AttributionMap& attr, const PerturbEvalConfig& cfg,
                                    const ValueRange& range);

/// Composite Simpson over uniformly spaced points; an odd final interval is
/// integrated by the trapezoid rule.
double simpson_auc(std::span<const double> ts, std::span<const double> vs);

double aupc(const PerturbationCurve& curve);

void write_perturbation_curve_csv(const std::filesystem::path& path, const PerturbationCurve& curve);

}  // namespace attrib
