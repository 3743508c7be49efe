#include "attrib/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "attrib/io.hpp"
#include "attrib/parallel.hpp"
#include "attrib/rng.hpp"

namespace attrib {

std::vector<float> spatial_relevance(const Tensor& values, std::size_t& height, std::size_t& width) {
    std::vector<float> out;
    if (values.rank() == 3) {
        height = values.dim(1);
        width = values.dim(2);
        out.assign(height * width, 0.0f);
        const std::size_t channels = values.dim(0);
        for (std::size_t i = 0; i < height * width; ++i) {
            double acc = 0.0;
            for (std::size_t c = 0; c < channels; ++c)
                acc += std::abs(static_cast<double>(values[c * height * width + i]));
            out[i] = static_cast<float>(acc / static_cast<double>(channels));
        }
    } else if (values.rank() == 2) {
        height = values.dim(0);
        width = values.dim(1);
        out.resize(height * width);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(values[i]);
    } else if (values.rank() == 1) {
        height = 1;
        width = values.dim(0);
        out.resize(width);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(values[i]);
    } else {
        throw config_error("attribution of rank " + std::to_string(values.rank()) +
                           " has no spatial layout for region ordering");
    }
    return out;
}

RegionSequence order_regions_grid(std::size_t height, std::size_t width,
                                  std::span<const float> relevance, const PerturbEvalConfig& cfg) {
    const std::size_t k = cfg.kernel;
    if (k < 1) throw config_error("region kernel must be >= 1");
    if (height < k || width < k)
        throw config_error("image " + std::to_string(height) + "x" + std::to_string(width) +
                           " smaller than kernel " + std::to_string(k));

    const std::size_t ah = height - k + 1, aw = width - k + 1;

    // Mean |attr| for every stride-1 anchor. Anchors are scored in parallel;
    // the greedy selection below is inherently sequential.
    std::vector<double> window_score(ah * aw);
    parallel_for(ah, [&](std::size_t r) {
        for (std::size_t c = 0; c < aw; ++c) {
            double acc = 0.0;
            for (std::size_t dr = 0; dr < k; ++dr)
                for (std::size_t dc = 0; dc < k; ++dc)
                    acc += static_cast<double>(relevance[(r + dr) * width + (c + dc)]);
            window_score[r * aw + c] = acc / static_cast<double>(k * k);
        }
    });

    std::vector<char> alive(ah * aw, 1);
    RegionSequence seq;
    seq.kernel = k;
    seq.regions.reserve(cfg.steps);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        // Best alive anchor; ties break to the row-major earliest.
        std::size_t best = ah * aw;
        for (std::size_t i = 0; i < ah * aw; ++i)
            if (alive[i] && (best == ah * aw || window_score[i] > window_score[best])) best = i;
        if (best == ah * aw)
            throw config_error("only " + std::to_string(step) + " non-overlapping regions available, " +
                               std::to_string(cfg.steps) + " requested");
        const std::size_t br = best / aw, bc = best % aw;
        seq.regions.push_back(Region{br, bc});
        // Two k x k windows overlap iff both anchor deltas are < k.
        const std::size_t r_lo = br >= k - 1 ? br - (k - 1) : 0;
        const std::size_t c_lo = bc >= k - 1 ? bc - (k - 1) : 0;
        for (std::size_t r = r_lo; r < std::min(br + k, ah); ++r)
            for (std::size_t c = c_lo; c < std::min(bc + k, aw); ++c) alive[r * aw + c] = 0;
    }
    return seq;
}

RegionSequence order_regions(const AttributionMap& attr, const PerturbEvalConfig& cfg) {
    std::size_t h = 0, w = 0;
    const std::vector<float> rel = spatial_relevance(attr.values, h, w);
    return order_regions_grid(h, w, rel, cfg);
}

RegionSequence order_regions(const SaliencyMap& s, const PerturbEvalConfig& cfg) {
    return order_regions_grid(s.height, s.width, s.values, cfg);
}

namespace {

struct SpatialLayout {
    std::size_t channels, height, width;
};

SpatialLayout spatial_layout(const Tensor& x) {
    if (x.rank() == 3) return {x.dim(0), x.dim(1), x.dim(2)};
    if (x.rank() == 2) return {1, x.dim(0), x.dim(1)};
    if (x.rank() == 1) return {1, 1, x.dim(0)};
    throw config_error("tensor of rank " + std::to_string(x.rank()) + " has no spatial layout");
}

}  // namespace

Tensor perturb_region(const Tensor& x, const Region& region, std::size_t kernel,
                      const ValueRange& range, Rng& rng) {
    const SpatialLayout lay = spatial_layout(x);
    if (region.row + kernel > lay.height || region.col + kernel > lay.width)
        throw config_error("perturbation region (" + std::to_string(region.row) + "," +
                           std::to_string(region.col) + ") size " + std::to_string(kernel) +
                           " exceeds image " + std::to_string(lay.height) + "x" +
                           std::to_string(lay.width));
    std::vector<float> data(x.data().begin(), x.data().end());
    for (std::size_t c = 0; c < lay.channels; ++c) {
        const auto [lo, hi] = range.channel(c);
        for (std::size_t dr = 0; dr < kernel; ++dr)
            for (std::size_t dc = 0; dc < kernel; ++dc)
                data[(c * lay.height + region.row + dr) * lay.width + region.col + dc] =
                    static_cast<float>(rng.uniform(lo, hi));
    }
    return Tensor::wrap_unchecked(x.shape(), std::move(data));
}

PerturbationCurve perturbation_game(const ScoreOracle& oracle, const Tensor& x,
                                    const AttributionMap& attr, const PerturbEvalConfig& cfg,
                                    const ValueRange& range) {
    if (cfg.samples < 1) throw config_error("perturbation sample size must be >= 1");
    {
        const SpatialLayout xl = spatial_layout(x);
        std::size_t ah = 0, aw = 0;
        spatial_relevance(attr.values, ah, aw);
        if (ah != xl.height || aw != xl.width)
            throw config_error("attribution spatial size " + std::to_string(ah) + "x" +
                               std::to_string(aw) + " does not match input " +
                               std::to_string(xl.height) + "x" + std::to_string(xl.width));
    }

    const double fx = oracle.value(x);
    if (std::abs(fx) < 1e-12)
        throw numeric_error("original score " + std::to_string(fx) +
                            " too close to zero to normalize the perturbation curve");

    const RegionSequence order = order_regions(attr, cfg);

    PerturbationCurve curve;
    curve.seed = cfg.seed;
    curve.points.reserve(cfg.steps + 1);
    curve.points.emplace_back(0, 1.0);

    Tensor current = x;
    for (std::size_t l = 1; l <= cfg.steps; ++l) {
        const Region& region = order.regions[l - 1];

        // P candidate perturbations of x^(l-1); substreams are indexed by
        // (step, sample) so concurrent evaluation cannot change the draws.
        std::vector<double> scores(cfg.samples);
        parallel_for(cfg.samples, [&](std::size_t p) {
            Rng rng = Rng::substream(cfg.seed, {kStreamPerturb, l, p});
            const Tensor candidate = perturb_region(current, region, order.kernel, range, rng);
            scores[p] = oracle.value(candidate);
        });

        double mean = 0.0;
        for (double s : scores) mean += s;
        mean /= static_cast<double>(cfg.samples);
        curve.points.emplace_back(l, mean / fx);

        // Commit the candidate with the median score (lower median when P is
        // even); ties break to the lowest sample index. The winner is
        // regenerated from its substream.
        std::vector<std::size_t> idx(cfg.samples);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
        const std::size_t median_rank = (cfg.samples + 1) / 2;  // ceil(P/2), 1-indexed
        const std::size_t chosen = idx[median_rank - 1];
        Rng rng = Rng::substream(cfg.seed, {kStreamPerturb, l, chosen});
        current = perturb_region(current, region, order.kernel, range, rng);
    }
    return curve;
}

PerturbationCurve perturbation_game(const Model& model, const Tensor& x, const AttributionMap& attr,
                                    const ScoreTarget& target, const PerturbEvalConfig& cfg,
                                    const ValueRange& range) {
    if (predicted_class(model, x) != target.class_index)
        throw config_error("perturbation game target class " + std::to_string(target.class_index) +
                           " is not the model's predicted class " +
                           std::to_string(predicted_class(model, x)));
    return perturbation_game(make_oracle(model, target), x, attr, cfg, range);
}

double simpson_auc(std::span<const double> ts, std::span<const double> vs) {
    if (ts.size() != vs.size()) throw config_error("simpson_auc: mismatched point arrays");
    if (ts.size() < 2) throw config_error("simpson_auc needs at least 2 points");
    const std::size_t intervals = ts.size() - 1;
    const double h = ts[1] - ts[0];
    if (h <= 0.0) throw config_error("simpson_auc: abscissae must be strictly increasing");
    for (std::size_t i = 0; i + 1 < ts.size(); ++i)
        if (std::abs((ts[i + 1] - ts[i]) - h) > 1e-9 * std::max(1.0, std::abs(h)))
            throw config_error("simpson_auc requires uniformly spaced points");

    double area = 0.0;
    std::size_t i = 0;
    for (; i + 2 <= intervals; i += 2)
        area += h * (vs[i] + 4.0 * vs[i + 1] + vs[i + 2]) / 3.0;
    if (i < intervals)  // odd interval count: trapezoid on the last one
        area += h * (vs[i] + vs[i + 1]) / 2.0;
    return area;
}

double aupc(const PerturbationCurve& curve) {
    std::vector<double> ts(curve.points.size()), vs(curve.points.size());
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        ts[i] = static_cast<double>(curve.points[i].first);
        vs[i] = curve.points[i].second;
    }
    return simpson_auc(ts, vs);
}

void write_perturbation_curve_csv(const std::filesystem::path& path, const PerturbationCurve& curve) {
    CsvWriter csv({"step", "normalized_score"});
    for (const auto& [step, value] : curve.points)
        csv.add_row({std::to_string(step), format_double(value)});
    csv.save(path);
}

}  // namespace attrib
