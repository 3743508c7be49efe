#include "attrib/saliency.hpp"

#include <algorithm>
#include <cmath>

#include "attrib/io.hpp"
#include "attrib/parallel.hpp"
#include "attrib/perturbation.hpp"

namespace attrib {

namespace {

// Exclusive linear interpolation between order statistics: rank (n+1)p,
// clamped to the extreme order statistics.
double percentile(std::vector<double> sorted, double p) {
    const std::size_t n = sorted.size();
    const double rank = (static_cast<double>(n) + 1.0) * p - 1.0;  // 0-indexed
    if (rank <= 0.0) return sorted.front();
    if (rank >= static_cast<double>(n - 1)) return sorted.back();
    const std::size_t lo = static_cast<std::size_t>(rank);
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

// |attr| reduced to a spatial grid: rank-3 maps sum across channels,
// rank-2 maps pass through, rank-1 maps read as 1 x N.
void abs_spatial(const Tensor& t, std::size_t& h, std::size_t& w, std::vector<double>& out) {
    if (t.rank() == 3) {
        h = t.dim(1);
        w = t.dim(2);
        out.assign(h * w, 0.0);
        for (std::size_t c = 0; c < t.dim(0); ++c)
            for (std::size_t i = 0; i < h * w; ++i)
                out[i] += std::abs(static_cast<double>(t[c * h * w + i]));
    } else if (t.rank() == 2) {
        h = t.dim(0);
        w = t.dim(1);
        out.resize(h * w);
        for (std::size_t i = 0; i < h * w; ++i) out[i] = std::abs(static_cast<double>(t[i]));
    } else if (t.rank() == 1) {
        h = 1;
        w = t.dim(0);
        out.resize(w);
        for (std::size_t i = 0; i < w; ++i) out[i] = std::abs(static_cast<double>(t[i]));
    } else {
        throw config_error("attribution map of rank " + std::to_string(t.rank()) +
                           " is not reducible to a 2-D saliency map");
    }
}

}  // namespace

SaliencyMap to_saliency(const Tensor& values) {
    SaliencyMap s;
    std::vector<double> v;
    abs_spatial(values, s.height, s.width, v);

    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const double clip = percentile(std::move(sorted), 0.99);
    for (double& x : v) x = std::min(x, clip);

    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it, hi = *hi_it;
    s.values.resize(v.size());
    if (hi <= lo) {
        std::fill(s.values.begin(), s.values.end(), 0.0f);
        s.degenerate = true;
        return s;
    }
    const double inv = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < v.size(); ++i)
        s.values[i] = static_cast<float>(std::clamp((v[i] - lo) * inv, 0.0, 1.0));
    return s;
}

SaliencyMap to_saliency(const AttributionMap& attr) { return to_saliency(attr.values); }

double average_total_variation(const SaliencyMap& s) {
    const std::size_t h = s.height, w = s.width;
    if (h < 1 || w < 1) throw config_error("empty saliency map");
    double sum = 0.0;
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c + 1 < w; ++c)
            sum += std::abs(static_cast<double>(s.at(r, c)) - static_cast<double>(s.at(r, c + 1)));
    for (std::size_t r = 0; r + 1 < h; ++r)
        for (std::size_t c = 0; c < w; ++c)
            sum += std::abs(static_cast<double>(s.at(r, c)) - static_cast<double>(s.at(r + 1, c)));
    return sum / static_cast<double>(h * w);
}

namespace {

std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
    const std::ptrdiff_t sn = static_cast<std::ptrdiff_t>(n);
    while (i < 0 || i >= sn) {
        if (i < 0) i = -i - 1;
        if (i >= sn) i = 2 * sn - i - 1;
    }
    return static_cast<std::size_t>(i);
}

}  // namespace

SaliencyMap gaussian_blur5(const SaliencyMap& s) {
    // Separable binomial (1,4,6,4,1)/16, reflect borders.
    static constexpr double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    const std::size_t h = s.height, w = s.width;
    std::vector<double> tmp(h * w, 0.0);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int d = -2; d <= 2; ++d)
                acc += k[d + 2] * static_cast<double>(s.values[r * w + reflect(static_cast<std::ptrdiff_t>(c) + d, w)]);
            tmp[r * w + c] = acc;
        }
    SaliencyMap out;
    out.height = h;
    out.width = w;
    out.values.resize(h * w);
    for (std::size_t c = 0; c < w; ++c)
        for (std::size_t r = 0; r < h; ++r) {
            double acc = 0.0;
            for (int d = -2; d <= 2; ++d)
                acc += k[d + 2] * tmp[reflect(static_cast<std::ptrdiff_t>(r) + d, h) * w + c];
            out.values[r * w + c] = static_cast<float>(std::clamp(acc, 0.0, 1.0));
        }
    return out;
}

namespace {

SaliencyMap bilinear_resample(const SaliencyMap& s, std::size_t nh, std::size_t nw) {
    SaliencyMap out;
    out.height = nh;
    out.width = nw;
    out.values.resize(nh * nw);
    const double sy_scale = static_cast<double>(s.height) / static_cast<double>(nh);
    const double sx_scale = static_cast<double>(s.width) / static_cast<double>(nw);
    for (std::size_t ty = 0; ty < nh; ++ty) {
        double sy = (static_cast<double>(ty) + 0.5) * sy_scale - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(s.height - 1));
        const std::size_t y0 = static_cast<std::size_t>(sy);
        const std::size_t y1 = std::min(y0 + 1, s.height - 1);
        const double fy = sy - static_cast<double>(y0);
        for (std::size_t tx = 0; tx < nw; ++tx) {
            double sx = (static_cast<double>(tx) + 0.5) * sx_scale - 0.5;
            sx = std::clamp(sx, 0.0, static_cast<double>(s.width - 1));
            const std::size_t x0 = static_cast<std::size_t>(sx);
            const std::size_t x1 = std::min(x0 + 1, s.width - 1);
            const double fx = sx - static_cast<double>(x0);
            const double top = (1.0 - fx) * s.at(y0, x0) + fx * s.at(y0, x1);
            const double bot = (1.0 - fx) * s.at(y1, x0) + fx * s.at(y1, x1);
            out.values[ty * nw + tx] =
                static_cast<float>(std::clamp((1.0 - fy) * top + fy * bot, 0.0, 1.0));
        }
    }
    return out;
}

}  // namespace

std::vector<SaliencyMap> gaussian_pyramid(const SaliencyMap& s, const PyramidOptions& opts) {
    std::vector<SaliencyMap> levels;
    levels.push_back(s);
    while (true) {
        const SaliencyMap& cur = levels.back();
        // floor(d / 1.5) == floor(2d / 3), kept integral.
        const std::size_t nh = 2 * cur.height / 3;
        const std::size_t nw = 2 * cur.width / 3;
        if (nh < 1 || nw < 1) break;
        const bool below = nh < opts.min_dim || nw < opts.min_dim;
        if (below && !opts.include_final_below_min) break;
        levels.push_back(bilinear_resample(gaussian_blur5(cur), nh, nw));
        if (below) break;
    }
    return levels;
}

TVCurve multiscale_tv_curve(const SaliencyMap& s, const PyramidOptions& opts) {
    const std::vector<SaliencyMap> levels = gaussian_pyramid(s, opts);
    TVCurve curve(levels.size());
    parallel_for(levels.size(), [&](std::size_t i) {
        curve[i] = TVCurveLevel{i, levels[i].height, levels[i].width,
                                average_total_variation(levels[i])};
    });
    return curve;
}

double autvc(const TVCurve& curve) {
    if (curve.size() < 2)
        throw config_error("AUTVC needs a curve with at least 2 levels, got " +
                           std::to_string(curve.size()));
    std::vector<double> ts(curve.size()), vs(curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        ts[i] = static_cast<double>(curve[i].level);
        vs[i] = curve[i].atv;
    }
    return simpson_auc(ts, vs);
}

std::vector<std::uint8_t> pgm_bytes(const SaliencyMap& s) {
    std::string header = "P5\n" + std::to_string(s.width) + " " + std::to_string(s.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + s.values.size());
    for (float v : s.values) {
        const double scaled = std::floor(static_cast<double>(v) * 255.0 + 0.5);  // round half up
        out.push_back(static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0)));
    }
    return out;
}

void write_pgm(const std::filesystem::path& path, const SaliencyMap& s) {
    write_file_atomic(path, pgm_bytes(s));
}

void write_tv_curve_csv(const std::filesystem::path& path, const TVCurve& curve) {
    CsvWriter csv({"level", "height", "width", "atv"});
    for (const TVCurveLevel& l : curve)
        csv.add_row({std::to_string(l.level), std::to_string(l.height), std::to_string(l.width),
                     format_double(l.atv)});
    csv.save(path);
}

Tensor saliency_to_tensor(const SaliencyMap& s) {
    return Tensor({s.height, s.width}, std::vector<float>(s.values));
}

}  // namespace attrib
