#pragma once

// Shared fixtures for the test suites: toy net builders and independent
// reference implementations of the averaging-based methods. The references
// are deliberately written as plain double-precision loops, separate from the
// library code paths they check.

#include <cmath>
#include <map>
#include <vector>

#include "attrib/attribution.hpp"
#include "attrib/autodiff.hpp"
#include "attrib/model.hpp"
#include "attrib/rng.hpp"
#include "attrib/tensor.hpp"

namespace testutil {

using namespace attrib;

inline Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
    std::vector<float> data(shape_product(shape));
    for (float& v : data) v = static_cast<float>(rng.uniform(lo, hi));
    return Tensor(std::move(shape), std::move(data));
}

/// f(x) = w . x (+ bias), a single dense row.
inline Model linear_model(const std::vector<float>& w, float bias = 0.0f) {
    std::map<std::string, Tensor> weights;
    weights.emplace("w", Tensor({1, w.size()}, std::vector<float>(w)));
    weights.emplace("b", Tensor({1}, {bias}));
    return Model({w.size()}, {LayerDesc::dense("fc", w.size(), 1, "w", "b")}, std::move(weights));
}

/// Constant model: zero weights, fixed bias.
inline Model constant_model(std::size_t in_dim, float value) {
    std::map<std::string, Tensor> weights;
    weights.emplace("w", Tensor({1, in_dim}));
    weights.emplace("b", Tensor({1}, {value}));
    return Model({in_dim}, {LayerDesc::dense("fc", in_dim, 1, "w", "b")}, std::move(weights));
}

/// dense -> act -> dense -> act -> dense stack with fan-in scaled weights.
inline Model mlp(const std::vector<std::size_t>& dims, LayerKind act, Rng& rng,
                 double weight_scale = 1.0, bool trailing_softmax = false) {
    std::vector<LayerDesc> layers;
    std::map<std::string, Tensor> weights;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const std::string wn = "w" + std::to_string(i), bn = "b" + std::to_string(i);
        const double scale = weight_scale / std::sqrt(static_cast<double>(dims[i]));
        weights.emplace(wn, random_tensor({dims[i + 1], dims[i]}, rng, -scale, scale));
        weights.emplace(bn, random_tensor({dims[i + 1]}, rng, -0.1, 0.1));
        layers.push_back(LayerDesc::dense("fc" + std::to_string(i), dims[i], dims[i + 1], wn, bn));
        if (i + 2 < dims.size())
            layers.push_back(LayerDesc::activation("act" + std::to_string(i), act));
    }
    if (trailing_softmax) layers.push_back(LayerDesc::softmax("prob"));
    return Model({dims[0]}, std::move(layers), std::move(weights));
}

/// conv -> relu -> maxpool -> conv -> relu -> avgpool -> flatten -> dense.
inline Model conv_net(Rng& rng, std::size_t in_c = 1, std::size_t hw = 12,
                      std::size_t classes = 3) {
    std::map<std::string, Tensor> weights;
    weights.emplace("c1.w", random_tensor({4, in_c, 3, 3}, rng, -0.4, 0.4));
    weights.emplace("c1.b", random_tensor({4}, rng, -0.1, 0.1));
    weights.emplace("c2.w", random_tensor({6, 4, 3, 3}, rng, -0.3, 0.3));
    weights.emplace("c2.b", random_tensor({6}, rng, -0.1, 0.1));
    const std::size_t h1 = hw / 2;           // after maxpool k2 s2
    const std::size_t h2 = h1 - 2;           // after conv k3 s1 valid
    const std::size_t h3 = h2 / 2;           // after avgpool k2 s2
    const std::size_t flat = 6 * h3 * h3;
    weights.emplace("fc.w", random_tensor({classes, flat}, rng, -0.3, 0.3));
    weights.emplace("fc.b", random_tensor({classes}, rng, -0.1, 0.1));
    return Model({in_c, hw, hw},
                 {LayerDesc::conv2d("c1", in_c, 4, 3, 1, 1, "c1.w", "c1.b"),
                  LayerDesc::activation("r1", LayerKind::relu),
                  LayerDesc::pool("p1", LayerKind::maxpool2d, 2, 2),
                  LayerDesc::conv2d("c2", 4, 6, 3, 1, 0, "c2.w", "c2.b"),
                  LayerDesc::activation("r2", LayerKind::relu),
                  LayerDesc::pool("p2", LayerKind::avgpool2d, 2, 2), LayerDesc::flatten("fl"),
                  LayerDesc::dense("fc", flat, classes, "fc.w", "fc.b")},
                 std::move(weights));
}

// ---- independent reference implementations ----

/// Straightforward IG transcription: mean of gradients at the M right-endpoint
/// interpolation points, times (x - z), everything in double.
inline std::vector<double> reference_ig(const Model& model, const Tensor& x, const Tensor& z,
                                        const ScoreTarget& target, std::size_t steps) {
    std::vector<double> mean(x.size(), 0.0);
    for (std::size_t m = 1; m <= steps; ++m) {
        const double alpha = static_cast<double>(m) / static_cast<double>(steps);
        std::vector<float> point(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            point[i] = static_cast<float>(z[i] + alpha * (static_cast<double>(x[i]) - z[i]));
        const Tensor g = gradient(model, Tensor(x.shape(), std::move(point)), target);
        for (std::size_t i = 0; i < x.size(); ++i) mean[i] += g[i];
    }
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = (static_cast<double>(x[i]) - static_cast<double>(z[i])) *
                 (mean[i] / static_cast<double>(steps));
    return out;
}

/// Noise-baseline averaged IG, replaying the library's baseline substreams.
inline std::vector<double> reference_ig_noise_avg(const Model& model, const Tensor& x,
                                                  const ScoreTarget& target, const IGConfig& cfg,
                                                  const ValueRange& range) {
    std::vector<double> acc(x.size(), 0.0);
    const std::size_t channels = channel_count(x);
    const std::size_t per = x.size() / channels;
    for (std::size_t n = 0; n < cfg.baseline_count; ++n) {
        Rng rng = Rng::substream(cfg.seed, {kStreamBaseline, n});
        std::vector<float> z(x.size());
        for (std::size_t c = 0; c < channels; ++c) {
            const auto [lo, hi] = range.channel(c);
            for (std::size_t i = 0; i < per; ++i)
                z[c * per + i] = static_cast<float>(rng.uniform(lo, hi));
        }
        const auto ig = reference_ig(model, x, Tensor(x.shape(), std::move(z)), target, cfg.steps);
        for (std::size_t i = 0; i < x.size(); ++i) acc[i] += ig[i];
    }
    for (double& v : acc) v /= static_cast<double>(cfg.baseline_count);
    return acc;
}

/// SmoothTaylor transcription over the library's noise substreams.
inline std::vector<double> reference_smooth_taylor(const Model& model, const Tensor& x,
                                                   const ScoreTarget& target,
                                                   const NoiseConfig& cfg) {
    std::vector<double> acc(x.size(), 0.0);
    for (std::size_t r = 0; r < cfg.count; ++r) {
        Rng rng = Rng::substream(cfg.seed, {kStreamNoise, r});
        std::vector<float> root(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            root[i] = static_cast<float>(static_cast<double>(x[i]) + cfg.sigma * rng.normal());
        const Tensor z(x.shape(), std::move(root));
        const Tensor g = gradient(model, z, target);
        for (std::size_t i = 0; i < x.size(); ++i)
            acc[i] += (static_cast<double>(x[i]) - static_cast<double>(z[i])) *
                      static_cast<double>(g[i]);
    }
    for (double& v : acc) v /= static_cast<double>(cfg.count);
    return acc;
}

inline double max_abs_diff(const Tensor& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
    return m;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    return m;
}

}  // namespace testutil
