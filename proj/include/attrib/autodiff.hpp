#pragma once

#include <functional>
#include <string>
#include <vector>

#include "attrib/model.hpp"
#include "attrib/tensor.hpp"

namespace attrib {

/// Runs the full layer stack; returns the final layer output. A trailing
/// softmax layer yields a probability simplex. Throws a structured error
/// naming the offending layer on shape mismatch or non-finite activations.
Tensor forward(const Model& model, const Tensor& x);

/// The selected class's logit or probability. Scores are computed in f32
/// with 64-bit reduction accumulators and returned widened to double.
double score(const Model& model, const Tensor& x, const ScoreTarget& target);

/// d(score)/dx via reverse-mode accumulation through the layer stack.
/// Same shape as x.
Tensor gradient(const Model& model, const Tensor& x, const ScoreTarget& target);

/// Central finite differences of the score, step h in each coordinate.
/// The oracle evaluates the model's double-precision forward path so that
/// the estimate is limited by truncation error rather than f32 rounding.
Tensor finite_diff_gradient(const Model& model, const Tensor& x, const ScoreTarget& target, double h);

/// Generic central-difference core over any scalar field.
Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double h);

/// Double-precision forward score used by the finite-difference oracle.
double score_f64(const Model& model, const Tensor& x, const ScoreTarget& target);

/// The gradient oracle the attribution methods run against: any scalar field
/// with a gradient. make_oracle adapts a (model, target) pair.
struct ScoreOracle {
    std::function<double(const Tensor&)> value;
    std::function<Tensor(const Tensor&)> grad;
};

ScoreOracle make_oracle(const Model& model, const ScoreTarget& target);

std::size_t predicted_class(const Model& model, const Tensor& x);

/// Per-layer-kind autodiff-vs-finite-difference comparison. Each layer kind
/// present in the model is probed in isolation with random weights and
/// inputs, plus one end-to-end row for the whole stack. Coordinates whose
/// probe points straddle a ReLU/maxpool kink are excluded from the
/// comparison and counted in coords_skipped.
struct GradCheckRow {
    std::string layer_type;
    double max_rel_err = 0.0;
    std::size_t coords_checked = 0;
    std::size_t coords_failed = 0;
    std::size_t coords_skipped = 0;
    bool pass = true;
};

struct GradCheckReport {
    std::vector<GradCheckRow> rows;
    bool pass = true;
};

using GradientFn = std::function<Tensor(const Model&, const Tensor&, const ScoreTarget&)>;

GradCheckReport gradcheck(const Model& model, std::size_t samples, double h, std::uint64_t seed,
                          const GradientFn& grad_fn = {});

}  // namespace attrib
