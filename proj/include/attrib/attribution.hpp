#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "attrib/autodiff.hpp"
#include "attrib/model.hpp"
#include "attrib/tensor.hpp"

namespace attrib {

/// Per-input-element relevance scores, same shape as the explained input.
struct AttributionMap {
    Tensor values;
    ScoreTarget target;
    std::string method_tag;
};

enum class BaselineKind { zero, uniform_noise };

struct IGConfig {
    std::size_t steps = 50;          // M
    BaselineKind baseline_kind = BaselineKind::zero;
    std::size_t baseline_count = 1;  // N
    std::uint64_t seed = 0;
};

struct NoiseConfig {
    double sigma = 0.5;     // noise standard deviation, input-value units
    std::size_t count = 1;  // R roots or N' samples
    std::uint64_t seed = 0;
};

/// Valid input value range, one (lo, hi) per channel. Channel = dim 0 for
/// rank-3 tensors, the whole tensor otherwise. Used for uniform-noise
/// baselines and perturbation replacement values.
struct ValueRange {
    std::vector<std::pair<float, float>> per_channel;

    static ValueRange uniform(float lo, float hi) { return ValueRange{{{lo, hi}}}; }
    /// Default when the caller declares nothing: [min, max] of x per channel.
    static ValueRange from_input(const Tensor& x);
    /// Range for channel c of a tensor with the given channel count
    /// (single-entry ranges broadcast).
    std::pair<float, float> channel(std::size_t c) const;
};

std::size_t channel_count(const Tensor& x);

using BaseMethod = std::function<AttributionMap(const Tensor&)>;

// Oracle-level cores. The model-level overloads below adapt via make_oracle
// and are the spec surface; tests also exercise the cores with closed-form
// oracles.

Tensor integrated_gradients_core(const ScoreOracle& oracle, const Tensor& x, const Tensor& z,
                                 std::size_t steps);
Tensor smooth_taylor_core(const ScoreOracle& oracle, const Tensor& x, const NoiseConfig& cfg);

/// IG with the discrete right-endpoint sum over steps m = 1..M, multiplied
/// elementwise by (x - z).
AttributionMap integrated_gradients(const Model& model, const Tensor& x, const Tensor& z,
                                    const ScoreTarget& target, std::size_t steps);

/// Mean of N IG maps against independent uniform-noise baselines drawn over
/// the declared valid input range.
AttributionMap integrated_gradients_noise_avg(const Model& model, const Tensor& x,
                                              const ScoreTarget& target, const IGConfig& cfg,
                                              const ValueRange& range);

/// Mean of cfg.count evaluations of base_method at x + eps,
/// eps ~ N(0, sigma^2) i.i.d. per element.
AttributionMap smooth_grad(const Model& model, const Tensor& x, const ScoreTarget& target,
                           const BaseMethod& base_method, const NoiseConfig& cfg);
AttributionMap smooth_grad(const Tensor& x, const ScoreTarget& target,
                           const BaseMethod& base_method, const NoiseConfig& cfg);

/// R roots z_r = x + eps, eps ~ N(0, sigma^2); deterministic under fixed seed.
std::vector<Tensor> generate_roots(const Tensor& x, const NoiseConfig& cfg);

/// attribution_i = (1/R) sum_r (x_i - z_r_i) * d f(z_r) / dx_i over the roots
/// from generate_roots.
AttributionMap smooth_taylor(const Model& model, const Tensor& x, const ScoreTarget& target,
                             const NoiseConfig& cfg);

/// L-inf distance between smooth_taylor and smooth_grad run with
/// base(x') = grad f(x') .* (x - x') over the identical noise stream.
double verify_smoothgrad_equivalence(const Model& model, const Tensor& x,
                                     const ScoreTarget& target, const NoiseConfig& cfg);
double verify_smoothgrad_equivalence(const ScoreOracle& oracle, const Tensor& x,
                                     const NoiseConfig& cfg);

AttributionMap raw_gradient(const Model& model, const Tensor& x, const ScoreTarget& target);

/// Tensor file plus JSON sidecar (method tag, config string, seed, model hash).
void save_attribution(const std::filesystem::path& tensor_path, const AttributionMap& map,
                      const std::string& config_desc, std::uint64_t seed,
                      const std::string& model_hash);

}  // namespace attrib
