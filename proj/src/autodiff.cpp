#include "attrib/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "attrib/kernels.hpp"
#include "attrib/rng.hpp"

namespace attrib {

namespace {

using kernels::Conv2dShape;
using kernels::Pool2dShape;

Conv2dShape conv_shape(const LayerDesc& l, const std::vector<std::size_t>& in) {
    return Conv2dShape{l.in_channels, in[1], in[2], l.out_channels, l.kernel_h, l.kernel_w,
                       l.stride_h,    l.stride_w, l.pad_h, l.pad_w};
}

Pool2dShape pool_shape(const LayerDesc& l, const std::vector<std::size_t>& in) {
    return Pool2dShape{in[0], in[1], in[2], l.kernel_h, l.kernel_w, l.stride_h, l.stride_w};
}

struct ForwardTrace {
    // acts[i] is the input to layer i; acts[layers.size()] is the model output.
    std::vector<Tensor> acts;
    std::map<std::size_t, std::vector<std::uint32_t>> pool_argmax;
};

void check_finite(const Tensor& t, const LayerDesc& l, const char* what) {
    if (!t.all_finite())
        throw numeric_error(std::string("layer '") + l.id + "' (" + layer_kind_name(l.kind) +
                            ") produced non-finite " + what);
}

ForwardTrace run_forward(const Model& model, const Tensor& x) {
    if (x.shape() != model.input_shape())
        throw config_error("input shape " + shape_to_string(x.shape()) + " does not match model input " +
                           shape_to_string(model.input_shape()));
    if (!x.all_finite()) throw numeric_error("model input contains non-finite values");

    ForwardTrace trace;
    trace.acts.reserve(model.layers().size() + 1);
    trace.acts.push_back(x);

    for (std::size_t li = 0; li < model.layers().size(); ++li) {
        const LayerDesc& l = model.layers()[li];
        const Tensor& in = trace.acts.back();
        std::vector<float> out(shape_product(model.layer_output_shape(li)));
        switch (l.kind) {
            case LayerKind::dense:
                kernels::dense_forward(model.weight(l.weight_name).data().data(),
                                       l.bias_name.empty() ? nullptr : model.weight(l.bias_name).data().data(),
                                       in.data().data(), out.data(), l.out_features, l.in_features);
                break;
            case LayerKind::conv2d:
                kernels::conv2d_forward(conv_shape(l, in.shape()),
                                        model.weight(l.weight_name).data().data(),
                                        l.bias_name.empty() ? nullptr : model.weight(l.bias_name).data().data(),
                                        in.data().data(), out.data());
                break;
            case LayerKind::relu:
                kernels::relu_forward(in.data().data(), out.data(), in.size());
                break;
            case LayerKind::softplus:
                kernels::softplus_forward(in.data().data(), out.data(), in.size());
                break;
            case LayerKind::maxpool2d: {
                const Pool2dShape s = pool_shape(l, in.shape());
                std::vector<std::uint32_t> argmax(out.size());
                kernels::maxpool2d_forward(s, in.data().data(), out.data(), argmax.data());
                trace.pool_argmax.emplace(li, std::move(argmax));
                break;
            }
            case LayerKind::avgpool2d:
                kernels::avgpool2d_forward(pool_shape(l, in.shape()), in.data().data(), out.data());
                break;
            case LayerKind::flatten:
                std::copy(in.data().begin(), in.data().end(), out.begin());
                break;
            case LayerKind::softmax:
                kernels::softmax_forward(in.data().data(), out.data(), in.size());
                break;
        }
        Tensor t = Tensor::wrap_unchecked(model.layer_output_shape(li), std::move(out));
        check_finite(t, l, "activations");
        trace.acts.push_back(std::move(t));
    }
    return trace;
}

// Index of the activation holding the pre-softmax vector the target indexes.
std::size_t logits_index(const Model& model) {
    const std::size_t n = model.layers().size();
    return model.ends_with_softmax() ? n - 1 : n;
}

void check_target(const Model& model, const ScoreTarget& target) {
    const std::size_t dim = model.logit_size();
    if (target.class_index >= dim)
        throw config_error("target class " + std::to_string(target.class_index) +
                           " out of range for output dimension " + std::to_string(dim));
}

double select_score(const Model& model, const ForwardTrace& trace, const ScoreTarget& target) {
    const Tensor& logits = trace.acts[logits_index(model)];
    if (target.kind == ScoreKind::logit) return static_cast<double>(logits[target.class_index]);
    if (model.ends_with_softmax()) return static_cast<double>(trace.acts.back()[target.class_index]);
    std::vector<float> probs(logits.size());
    kernels::softmax_forward(logits.data().data(), probs.data(), logits.size());
    return static_cast<double>(probs[target.class_index]);
}

Tensor run_backward(const Model& model, const ForwardTrace& trace, const ScoreTarget& target) {
    const std::size_t li = logits_index(model);
    const Tensor& logits = trace.acts[li];

    // Seed d(score)/d(logits).
    std::vector<float> grad(logits.size(), 0.0f);
    if (target.kind == ScoreKind::logit) {
        grad[target.class_index] = 1.0f;
    } else {
        std::vector<float> probs;
        if (model.ends_with_softmax()) {
            probs.assign(trace.acts.back().data().begin(), trace.acts.back().data().end());
        } else {
            probs.resize(logits.size());
            kernels::softmax_forward(logits.data().data(), probs.data(), logits.size());
        }
        std::vector<float> seed(probs.size(), 0.0f);
        seed[target.class_index] = 1.0f;
        kernels::softmax_backward(probs.data(), seed.data(), grad.data(), probs.size());
    }

    // Reverse through layers li-1 .. 0. A trailing softmax is already folded
    // into the seed (logit targets bypass it entirely).
    for (std::size_t step = li; step-- > 0;) {
        const LayerDesc& l = model.layers()[step];
        const Tensor& in = trace.acts[step];
        std::vector<float> dx(in.size(), 0.0f);
        switch (l.kind) {
            case LayerKind::dense:
                kernels::dense_backward_input(model.weight(l.weight_name).data().data(), grad.data(),
                                              dx.data(), l.out_features, l.in_features);
                break;
            case LayerKind::conv2d:
                kernels::conv2d_backward_input(conv_shape(l, in.shape()), model.weight(l.weight_name).data().data(),
                                               grad.data(), dx.data());
                break;
            case LayerKind::relu:
                kernels::relu_backward(in.data().data(), grad.data(), dx.data(), in.size());
                break;
            case LayerKind::softplus:
                kernels::softplus_backward(in.data().data(), grad.data(), dx.data(), in.size());
                break;
            case LayerKind::maxpool2d:
                kernels::maxpool2d_backward(pool_shape(l, in.shape()), trace.pool_argmax.at(step).data(),
                                            grad.data(), dx.data());
                break;
            case LayerKind::avgpool2d:
                kernels::avgpool2d_backward(pool_shape(l, in.shape()), grad.data(), dx.data());
                break;
            case LayerKind::flatten:
                std::copy(grad.begin(), grad.end(), dx.begin());
                break;
            case LayerKind::softmax:
                kernels::softmax_backward(trace.acts[step + 1].data().data(), grad.data(), dx.data(),
                                          grad.size());
                break;
        }
        for (float v : dx)
            if (!std::isfinite(v))
                throw numeric_error(std::string("layer '") + l.id + "' (" + layer_kind_name(l.kind) +
                                    ") produced non-finite gradients");
        grad = std::move(dx);
    }
    return Tensor::wrap_unchecked(model.input_shape(), std::move(grad));
}

// Double-precision mirror of the forward pass, used only by the
// finite-difference oracle so the central difference is limited by
// truncation error instead of f32 rounding. `signature`, when given,
// collects the ReLU activation pattern and pooling argmax choices; two probe
// points with different signatures straddle a kink, where a central
// difference is meaningless.
class DoubleForward {
public:
    explicit DoubleForward(const Model& model) : model_(model) {
        for (const auto& [name, t] : model.weights()) {
            std::vector<double>& w = weights_[name];
            w.assign(t.data().begin(), t.data().end());
        }
    }

    double score(const std::vector<double>& x, const ScoreTarget& target,
                 std::vector<std::uint32_t>* signature = nullptr) const {
        std::vector<double> cur = x;
        std::vector<double> logits;
        const std::size_t n = model_.layers().size();
        for (std::size_t li = 0; li < n; ++li) {
            const LayerDesc& l = model_.layers()[li];
            const auto& in_shape = li == 0 ? model_.input_shape() : model_.layer_output_shape(li - 1);
            std::vector<double> out(shape_product(model_.layer_output_shape(li)));
            switch (l.kind) {
                case LayerKind::dense:
                    kernels::serial::dense_forward(weights_.at(l.weight_name).data(),
                                                   l.bias_name.empty() ? nullptr : weights_.at(l.bias_name).data(),
                                                   cur.data(), out.data(), l.out_features, l.in_features);
                    break;
                case LayerKind::conv2d:
                    kernels::serial::conv2d_forward(conv_shape(l, in_shape), weights_.at(l.weight_name).data(),
                                                    l.bias_name.empty() ? nullptr : weights_.at(l.bias_name).data(),
                                                    cur.data(), out.data());
                    break;
                case LayerKind::relu:
                    kernels::serial::relu_forward(cur.data(), out.data(), cur.size());
                    if (signature) {
                        std::uint32_t bits = 0;
                        for (std::size_t i = 0; i < cur.size(); ++i) {
                            bits = (bits << 1) | (cur[i] > 0.0 ? 1u : 0u);
                            if (i % 31 == 30) {
                                signature->push_back(bits);
                                bits = 0;
                            }
                        }
                        signature->push_back(bits);
                    }
                    break;
                case LayerKind::softplus:
                    kernels::serial::softplus_forward(cur.data(), out.data(), cur.size());
                    break;
                case LayerKind::maxpool2d: {
                    std::vector<std::uint32_t> argmax(out.size());
                    kernels::serial::maxpool2d_forward(pool_shape(l, in_shape), cur.data(), out.data(),
                                                       argmax.data());
                    if (signature) signature->insert(signature->end(), argmax.begin(), argmax.end());
                    break;
                }
                case LayerKind::avgpool2d:
                    kernels::serial::avgpool2d_forward(pool_shape(l, in_shape), cur.data(), out.data());
                    break;
                case LayerKind::flatten:
                    out = cur;
                    break;
                case LayerKind::softmax:
                    kernels::serial::softmax_forward(cur.data(), out.data(), cur.size());
                    break;
            }
            if (li + 1 == n && model_.ends_with_softmax()) logits = cur;
            cur = std::move(out);
        }
        if (!model_.ends_with_softmax()) logits = cur;

        if (target.kind == ScoreKind::logit) return logits[target.class_index];
        if (model_.ends_with_softmax()) return cur[target.class_index];
        std::vector<double> probs(logits.size());
        kernels::serial::softmax_forward(logits.data(), probs.data(), logits.size());
        return probs[target.class_index];
    }

private:
    const Model& model_;
    std::map<std::string, std::vector<double>> weights_;
};

}  // namespace

Tensor forward(const Model& model, const Tensor& x) {
    return run_forward(model, x).acts.back();
}

double score(const Model& model, const Tensor& x, const ScoreTarget& target) {
    check_target(model, target);
    return select_score(model, run_forward(model, x), target);
}

Tensor gradient(const Model& model, const Tensor& x, const ScoreTarget& target) {
    check_target(model, target);
    const ForwardTrace trace = run_forward(model, x);
    return run_backward(model, trace, target);
}

double score_f64(const Model& model, const Tensor& x, const ScoreTarget& target) {
    check_target(model, target);
    if (x.shape() != model.input_shape())
        throw config_error("input shape " + shape_to_string(x.shape()) + " does not match model input " +
                           shape_to_string(model.input_shape()));
    const std::vector<double> xd(x.data().begin(), x.data().end());
    return DoubleForward(model).score(xd, target);
}

Tensor finite_diff_gradient(const Model& model, const Tensor& x, const ScoreTarget& target, double h) {
    if (h <= 0.0) throw config_error("finite difference step must be positive");
    check_target(model, target);
    const DoubleForward eval(model);
    std::vector<double> xd(x.data().begin(), x.data().end());
    std::vector<float> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = xd[i];
        xd[i] = xi + h;
        const double hi = eval.score(xd, target);
        xd[i] = xi - h;
        const double lo = eval.score(xd, target);
        xd[i] = xi;
        g[i] = static_cast<float>((hi - lo) / (2.0 * h));
    }
    return Tensor::wrap_unchecked(x.shape(), std::move(g));
}

Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double h) {
    if (h <= 0.0) throw config_error("finite difference step must be positive");
    std::vector<float> g(x.size());
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const float xi = probe[i];
        const float x_hi = static_cast<float>(xi + h);
        const float x_lo = static_cast<float>(xi - h);
        probe[i] = x_hi;
        const double hi = f(probe);
        probe[i] = x_lo;
        const double lo = f(probe);
        probe[i] = xi;
        // divide by the span actually realized in f32, not the nominal 2h
        g[i] = static_cast<float>((hi - lo) /
                                  (static_cast<double>(x_hi) - static_cast<double>(x_lo)));
    }
    return Tensor::wrap_unchecked(x.shape(), std::move(g));
}

ScoreOracle make_oracle(const Model& model, const ScoreTarget& target) {
    check_target(model, target);
    return ScoreOracle{
        [&model, target](const Tensor& x) { return score(model, x, target); },
        [&model, target](const Tensor& x) { return gradient(model, x, target); },
    };
}

std::size_t predicted_class(const Model& model, const Tensor& x) {
    const ForwardTrace trace = run_forward(model, x);
    const Tensor& logits = trace.acts[logits_index(model)];
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[best]) best = i;
    return best;
}

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo, double hi) {
    std::vector<float> data(shape_product(shape));
    for (float& v : data) v = static_cast<float>(rng.uniform(lo, hi));
    return Tensor(std::move(shape), std::move(data));
}

struct Probe {
    std::string name;
    Model model;
    ScoreTarget target;
};

// Small single-purpose nets that isolate one backward rule each. The dense
// reduction head is shared; a failure in it shows up in its own row.
std::vector<Probe> layer_probes(const Model& model, Rng& rng) {
    std::vector<Probe> probes;
    auto dense_head = [&rng](std::size_t in, const std::string& name) {
        std::vector<float> w(in);
        for (float& v : w) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        return std::pair<LayerDesc, Tensor>(LayerDesc::dense("head", in, 1, name),
                                            Tensor({1, in}, std::move(w)));
    };

    std::vector<LayerKind> kinds;
    for (const LayerDesc& l : model.layers())
        if (std::find(kinds.begin(), kinds.end(), l.kind) == kinds.end()) kinds.push_back(l.kind);

    for (LayerKind kind : kinds) {
        switch (kind) {
            case LayerKind::dense: {
                probes.push_back({"dense",
                                  Model({6}, {LayerDesc::dense("L", 6, 4, "w", "b")},
                                        {{"w", random_tensor({4, 6}, rng, -1.0, 1.0)},
                                         {"b", random_tensor({4}, rng, -0.5, 0.5)}}),
                                  {1, ScoreKind::logit}});
                break;
            }
            case LayerKind::conv2d: {
                auto [head, hw] = dense_head(3 * 4 * 4, "hw");
                probes.push_back({"conv2d",
                                  Model({2, 6, 6},
                                        {LayerDesc::conv2d("L", 2, 3, 3, 1, 0, "w", "b"),
                                         LayerDesc::flatten("f"), head},
                                        {{"w", random_tensor({3, 2, 3, 3}, rng, -0.6, 0.6)},
                                         {"b", random_tensor({3}, rng, -0.3, 0.3)},
                                         {"hw", hw}}),
                                  {0, ScoreKind::logit}});
                break;
            }
            case LayerKind::relu: {
                auto [head, hw] = dense_head(8, "hw");
                probes.push_back({"relu",
                                  Model({8}, {LayerDesc::activation("L", LayerKind::relu), head},
                                        {{"hw", hw}}),
                                  {0, ScoreKind::logit}});
                break;
            }
            case LayerKind::softplus: {
                auto [head, hw] = dense_head(8, "hw");
                probes.push_back({"softplus",
                                  Model({8}, {LayerDesc::activation("L", LayerKind::softplus), head},
                                        {{"hw", hw}}),
                                  {0, ScoreKind::logit}});
                break;
            }
            case LayerKind::maxpool2d: {
                auto [head, hw] = dense_head(2 * 3 * 3, "hw");
                probes.push_back({"maxpool2d",
                                  Model({2, 6, 6},
                                        {LayerDesc::pool("L", LayerKind::maxpool2d, 2, 2),
                                         LayerDesc::flatten("f"), head},
                                        {{"hw", hw}}),
                                  {0, ScoreKind::logit}});
                break;
            }
            case LayerKind::avgpool2d: {
                auto [head, hw] = dense_head(2 * 3 * 3, "hw");
                probes.push_back({"avgpool2d",
                                  Model({2, 6, 6},
                                        {LayerDesc::pool("L", LayerKind::avgpool2d, 2, 2),
                                         LayerDesc::flatten("f"), head},
                                        {{"hw", hw}}),
                                  {0, ScoreKind::logit}});
                break;
            }
            case LayerKind::flatten: {
                auto [head, hw] = dense_head(12, "hw");
                probes.push_back({"flatten",
                                  Model({3, 2, 2}, {LayerDesc::flatten("L"), head}, {{"hw", hw}}),
                                  {0, ScoreKind::logit}});
                break;
            }
            case LayerKind::softmax: {
                probes.push_back({"softmax",
                                  Model({5},
                                        {LayerDesc::dense("d", 5, 3, "w"), LayerDesc::softmax("L")},
                                        {{"w", random_tensor({3, 5}, rng, -1.0, 1.0)}}),
                                  {1, ScoreKind::probability}});
                break;
            }
        }
    }
    return probes;
}

GradCheckRow check_probe(const std::string& name, const Model& m, const ScoreTarget& target,
                         std::size_t samples, double h, Rng& rng, const GradientFn& grad_fn) {
    GradCheckRow row;
    row.layer_type = name;
    const DoubleForward eval(m);
    for (std::size_t s = 0; s < samples; ++s) {
        const Tensor x = random_tensor(m.input_shape(), rng, -1.0, 1.0);
        const Tensor ad = grad_fn(m, x, target);
        std::vector<double> xd(x.data().begin(), x.data().end());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double xi = xd[i];
            std::vector<std::uint32_t> sig_hi, sig_lo;
            xd[i] = xi + h;
            const double hi = eval.score(xd, target, &sig_hi);
            xd[i] = xi - h;
            const double lo = eval.score(xd, target, &sig_lo);
            xd[i] = xi;
            // The probe points straddle a ReLU/maxpool kink: a central
            // difference estimates nothing there, so the coordinate is
            // excluded (kink-adjacent inputs are outside the contract).
            if (sig_hi != sig_lo) {
                ++row.coords_skipped;
                continue;
            }
            const double f = (hi - lo) / (2.0 * h);
            const double err = std::abs(static_cast<double>(ad[i]) - f);
            const double rel = err / std::max(std::abs(f), 1e-5);
            row.max_rel_err = std::max(row.max_rel_err, rel);
            ++row.coords_checked;
            if (err > std::max(1e-3 * std::abs(f), 1e-5)) ++row.coords_failed;
        }
    }
    row.pass = row.coords_failed * 100 <= row.coords_checked;
    return row;
}

}  // namespace

GradCheckReport gradcheck(const Model& model, std::size_t samples, double h, std::uint64_t seed,
                          const GradientFn& grad_fn) {
    if (samples == 0) throw config_error("gradcheck needs at least 1 sample");
    const GradientFn fn = grad_fn ? grad_fn : [](const Model& m, const Tensor& x, const ScoreTarget& t) {
        return gradient(m, x, t);
    };
    Rng rng = Rng::substream(seed, {kStreamInput});

    GradCheckReport report;
    for (const Probe& p : layer_probes(model, rng))
        report.rows.push_back(check_probe(p.name, p.model, p.target, samples, h, rng, fn));

    const ScoreTarget whole{0, ScoreKind::logit};
    report.rows.push_back(check_probe("model", model, whole, samples, h, rng, fn));

    for (const GradCheckRow& r : report.rows)
        if (!r.pass) report.pass = false;
    return report;
}

}  // namespace attrib
