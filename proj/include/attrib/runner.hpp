#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "attrib/adaptive.hpp"
#include "attrib/attribution.hpp"
#include "attrib/autodiff.hpp"
#include "attrib/perturbation.hpp"

namespace attrib {

/// One attribution method plus its hyperparameters, as named in config files.
/// Known names: gradient, ig-zero, ig-noise, smoothgrad, smoothtaylor.
struct MethodSpec {
    std::string name;
    std::size_t steps = 0;      // M (ig-zero, ig-noise)
    std::size_t baselines = 0;  // N (ig-noise)
    double sigma = 0.0;         // sigma (smoothtaylor) or sigma' (smoothgrad)
    std::size_t count = 0;      // R (smoothtaylor) or N' (smoothgrad)

    /// "steps=50,baselines=5" style parameter string used in reports.
    std::string params() const;
    /// "ig-noise[steps=50,baselines=5]" file/report tag.
    std::string tag() const;
};

struct GradCheckConfig {
    std::size_t samples = 5;
    double step = 1e-3;
};

struct ExperimentConfig {
    std::filesystem::path model_path;
    std::vector<std::filesystem::path> input_paths;
    std::vector<MethodSpec> methods;
    PerturbEvalConfig perturbation;
    PyramidOptions pyramid;
    std::optional<AdaptiveConfig> adaptive;
    GradCheckConfig gradcheck;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;
    std::optional<ValueRange> input_value_range;
    ScoreKind score_kind = ScoreKind::probability;
    std::vector<double> norm_mean, norm_std;  // PNG conversion
    std::vector<std::filesystem::path> attribution_paths;  // evaluate: precomputed maps
    std::vector<std::filesystem::path> report_inputs;      // report: metrics CSVs
    std::size_t workers = 0;

    std::uint64_t config_hash() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

/// One attribution tensor + sidecar + saliency PGM per (input, method), using
/// the argmax predicted class as the target.
std::vector<std::filesystem::path> cmd_attribute(const ExperimentConfig& cfg);

/// Per-image perturbation/TV curve CSVs, per-image metric rows, and the
/// aggregated method x params table.
std::vector<std::filesystem::path> cmd_evaluate(const ExperimentConfig& cfg);

/// Per-input adaptive noise search: trace CSV plus the tuned SmoothTaylor map
/// at sigma*.
std::vector<std::filesystem::path> cmd_adaptive(const ExperimentConfig& cfg);

/// Autodiff-vs-finite-difference report; `out_text` receives the printable
/// table.
GradCheckReport cmd_gradcheck(const ExperimentConfig& cfg, std::string* out_text);

/// Rebuilds the aggregated summary table from per-image metrics CSVs.
std::vector<std::filesystem::path> cmd_report(const ExperimentConfig& cfg);

/// Loads a .tsr tensor or an 8-bit PNG (normalized per config).
Tensor load_input(const ExperimentConfig& cfg, const std::filesystem::path& path);

}  // namespace attrib
