#include "attrib/attribution.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "attrib/io.hpp"
#include "attrib/parallel.hpp"
#include "attrib/rng.hpp"

namespace attrib {

std::size_t channel_count(const Tensor& x) { return x.rank() == 3 ? x.dim(0) : 1; }

ValueRange ValueRange::from_input(const Tensor& x) {
    const std::size_t channels = channel_count(x);
    const std::size_t per = x.size() / channels;
    ValueRange r;
    r.per_channel.reserve(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        float lo = x[c * per], hi = x[c * per];
        for (std::size_t i = 1; i < per; ++i) {
            lo = std::min(lo, x[c * per + i]);
            hi = std::max(hi, x[c * per + i]);
        }
        r.per_channel.emplace_back(lo, hi);
    }
    return r;
}

std::pair<float, float> ValueRange::channel(std::size_t c) const {
    if (per_channel.empty()) throw config_error("empty value range");
    if (per_channel.size() == 1) return per_channel[0];
    if (c >= per_channel.size())
        throw config_error("value range has " + std::to_string(per_channel.size()) +
                           " channels, requested channel " + std::to_string(c));
    return per_channel[c];
}

namespace {

void check_finite_map(const Tensor& t, const char* method) {
    if (!t.all_finite()) throw numeric_error(std::string(method) + " produced a non-finite attribution map");
}

/// x + sigma * N(0,1) elementwise, draws in row-major order from `rng`.
Tensor add_gaussian_noise(const Tensor& x, double sigma, Rng& rng) {
    std::vector<float> data(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        data[i] = static_cast<float>(static_cast<double>(x[i]) + sigma * rng.normal());
    return Tensor::wrap_unchecked(x.shape(), std::move(data));
}

/// Fixed-index-order mean of per-sample tensors, 64-bit accumulators. Keeps
/// results independent of the schedule that filled the slots.
Tensor ordered_mean(const std::vector<Tensor>& slots) {
    const std::size_t n = slots[0].size();
    std::vector<double> acc(n, 0.0);
    for (const Tensor& t : slots)
        for (std::size_t j = 0; j < n; ++j) acc[j] += static_cast<double>(t[j]);
    std::vector<float> out(n);
    const double inv = 1.0 / static_cast<double>(slots.size());
    for (std::size_t j = 0; j < n; ++j) out[j] = static_cast<float>(acc[j] * inv);
    return Tensor::wrap_unchecked(slots[0].shape(), std::move(out));
}

}  // namespace

Tensor integrated_gradients_core(const ScoreOracle& oracle, const Tensor& x, const Tensor& z,
                                 std::size_t steps) {
    if (!x.same_shape(z))
        throw config_error("integrated gradients: baseline shape " + shape_to_string(z.shape()) +
                           " does not match input shape " + shape_to_string(x.shape()));
    if (steps < 1) throw config_error("integrated gradients: steps must be >= 1");

    // Right-endpoint sum over m = 1..M at z + (m/M)(x - z).
    std::vector<Tensor> grads(steps);
    parallel_for(steps, [&](std::size_t slot) {
        const double alpha = static_cast<double>(slot + 1) / static_cast<double>(steps);
        std::vector<float> point(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            point[i] = static_cast<float>(static_cast<double>(z[i]) +
                                          alpha * (static_cast<double>(x[i]) - static_cast<double>(z[i])));
        grads[slot] = oracle.grad(Tensor::wrap_unchecked(x.shape(), std::move(point)));
    });

    Tensor mean = ordered_mean(grads);
    std::vector<float> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = static_cast<float>((static_cast<double>(x[i]) - static_cast<double>(z[i])) *
                                    static_cast<double>(mean[i]));
    Tensor result = Tensor::wrap_unchecked(x.shape(), std::move(out));
    check_finite_map(result, "integrated gradients");
    return result;
}

AttributionMap integrated_gradients(const Model& model, const Tensor& x, const Tensor& z,
                                    const ScoreTarget& target, std::size_t steps) {
    const ScoreOracle oracle = make_oracle(model, target);
    return AttributionMap{integrated_gradients_core(oracle, x, z, steps), target, "ig"};
}

AttributionMap integrated_gradients_noise_avg(const Model& model, const Tensor& x,
                                              const ScoreTarget& target, const IGConfig& cfg,
                                              const ValueRange& range) {
    if (cfg.baseline_kind != BaselineKind::uniform_noise)
        throw config_error("noise-averaged IG requires baseline_kind=uniform_noise");
    if (cfg.baseline_count < 1) throw config_error("baseline count must be >= 1");

    const ScoreOracle oracle = make_oracle(model, target);
    const std::size_t channels = channel_count(x);
    const std::size_t per = x.size() / channels;

    std::vector<Tensor> maps(cfg.baseline_count);
    for (std::size_t n = 0; n < cfg.baseline_count; ++n) {
        Rng rng = Rng::substream(cfg.seed, {kStreamBaseline, n});
        std::vector<float> baseline(x.size());
        for (std::size_t c = 0; c < channels; ++c) {
            const auto [lo, hi] = range.channel(c);
            for (std::size_t i = 0; i < per; ++i)
                baseline[c * per + i] = static_cast<float>(rng.uniform(lo, hi));
        }
        maps[n] = integrated_gradients_core(oracle, x, Tensor::wrap_unchecked(x.shape(), std::move(baseline)),
                                            cfg.steps);
    }
    Tensor mean = ordered_mean(maps);
    check_finite_map(mean, "noise-averaged integrated gradients");
    return AttributionMap{std::move(mean), target, "ig-noise"};
}

AttributionMap smooth_grad(const Tensor& x, const ScoreTarget& target, const BaseMethod& base_method,
                           const NoiseConfig& cfg) {
    if (cfg.sigma <= 0.0) throw config_error("smooth_grad: sigma must be positive");
    if (cfg.count < 1) throw config_error("smooth_grad: count must be >= 1");

    std::vector<Tensor> maps(cfg.count);
    parallel_for(cfg.count, [&](std::size_t n) {
        Rng rng = Rng::substream(cfg.seed, {kStreamNoise, n});
        const Tensor noised = add_gaussian_noise(x, cfg.sigma, rng);
        AttributionMap m = base_method(noised);
        if (!m.values.same_shape(x))
            throw config_error("smooth_grad: base method returned shape " +
                               shape_to_string(m.values.shape()) + ", expected " +
                               shape_to_string(x.shape()));
        maps[n] = std::move(m.values);
    });
    Tensor mean = ordered_mean(maps);
    check_finite_map(mean, "smooth_grad");
    return AttributionMap{std::move(mean), target, "smoothgrad"};
}

AttributionMap smooth_grad(const Model& model, const Tensor& x, const ScoreTarget& target,
                           const BaseMethod& base_method, const NoiseConfig& cfg) {
    (void)model;  // the base method owns the oracle
    return smooth_grad(x, target, base_method, cfg);
}

std::vector<Tensor> generate_roots(const Tensor& x, const NoiseConfig& cfg) {
    if (cfg.sigma <= 0.0) throw config_error("generate_roots: sigma must be positive");
    if (cfg.count < 1) throw config_error("generate_roots: count must be >= 1");
    std::vector<Tensor> roots;
    roots.reserve(cfg.count);
    for (std::size_t r = 0; r < cfg.count; ++r) {
        Rng rng = Rng::substream(cfg.seed, {kStreamNoise, r});
        roots.push_back(add_gaussian_noise(x, cfg.sigma, rng));
    }
    return roots;
}

Tensor smooth_taylor_core(const ScoreOracle& oracle, const Tensor& x, const NoiseConfig& cfg) {
    const std::vector<Tensor> roots = generate_roots(x, cfg);

    std::vector<Tensor> terms(roots.size());
    parallel_for(roots.size(), [&](std::size_t r) {
        const Tensor& z = roots[r];
        const Tensor g = oracle.grad(z);
        std::vector<float> term(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            term[i] = static_cast<float>((static_cast<double>(x[i]) - static_cast<double>(z[i])) *
                                         static_cast<double>(g[i]));
        terms[r] = Tensor::wrap_unchecked(x.shape(), std::move(term));
    });
    Tensor mean = ordered_mean(terms);
    check_finite_map(mean, "smooth_taylor");
    return mean;
}

AttributionMap smooth_taylor(const Model& model, const Tensor& x, const ScoreTarget& target,
                             const NoiseConfig& cfg) {
    const ScoreOracle oracle = make_oracle(model, target);
    return AttributionMap{smooth_taylor_core(oracle, x, cfg), target, "smoothtaylor"};
}

double verify_smoothgrad_equivalence(const ScoreOracle& oracle, const Tensor& x,
                                     const NoiseConfig& cfg) {
    const Tensor taylor = smooth_taylor_core(oracle, x, cfg);

    // SmoothGrad instance from the equivalence statement: the base attribution
    // at a noised point x' is grad f(x') .* (x - x'). Same seed, same draw
    // order, separate code path.
    const BaseMethod bridge = [&oracle, &x](const Tensor& noised) {
        const Tensor g = oracle.grad(noised);
        std::vector<float> vals(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            vals[i] = static_cast<float>((static_cast<double>(x[i]) - static_cast<double>(noised[i])) *
                                         static_cast<double>(g[i]));
        return AttributionMap{Tensor::wrap_unchecked(x.shape(), std::move(vals)), {}, "bridge"};
    };
    const AttributionMap smooth = smooth_grad(x, {}, bridge, cfg);

    double linf = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        linf = std::max(linf, std::abs(static_cast<double>(taylor[i]) -
                                       static_cast<double>(smooth.values[i])));
    return linf;
}

double verify_smoothgrad_equivalence(const Model& model, const Tensor& x, const ScoreTarget& target,
                                     const NoiseConfig& cfg) {
    return verify_smoothgrad_equivalence(make_oracle(model, target), x, cfg);
}

AttributionMap raw_gradient(const Model& model, const Tensor& x, const ScoreTarget& target) {
    return AttributionMap{gradient(model, x, target), target, "gradient"};
}

void save_attribution(const std::filesystem::path& tensor_path, const AttributionMap& map,
                      const std::string& config_desc, std::uint64_t seed,
                      const std::string& model_hash) {
    write_tensor(tensor_path, map.values);
    nlohmann::ordered_json j;
    j["schema"] = "attrib-map/1";
    j["method"] = map.method_tag;
    j["target"] = {{"class_index", map.target.class_index},
                   {"score_kind", score_kind_name(map.target.kind)}};
    j["config"] = config_desc;
    j["seed"] = seed;
    j["model_hash"] = model_hash;
    j["prng"] = kPrngId;
    std::filesystem::path sidecar = tensor_path;
    sidecar.replace_extension(".json");
    write_file_atomic(sidecar, j.dump(2) + "\n");
}

}  // namespace attrib
