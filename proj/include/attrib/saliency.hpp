#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "attrib/attribution.hpp"

namespace attrib {

/// 2-D map normalized to [0, 1], row-major. `degenerate` flags maps whose
/// values were all equal after clipping (normalized to all zeros).
struct SaliencyMap {
    std::size_t height = 0, width = 0;
    std::vector<float> values;
    bool degenerate = false;

    float at(std::size_t r, std::size_t c) const { return values[r * width + c]; }
    float& at(std::size_t r, std::size_t c) { return values[r * width + c]; }
};

struct TVCurveLevel {
    std::size_t level = 0;
    std::size_t height = 0, width = 0;
    double atv = 0.0;
};

/// Multi-scaled ATV sequence; level 0 is the unscaled map, sizes strictly
/// decreasing.
using TVCurve = std::vector<TVCurveLevel>;

struct PyramidOptions {
    std::size_t min_dim = 30;
    /// Include the terminating level that fell below min_dim instead of
    /// stopping before it.
    bool include_final_below_min = false;
};

/// Channel dimension reduced by summing absolute values per location, values
/// above the 99th percentile clipped to it, then min-max rescaled to [0, 1].
/// Percentile uses linear interpolation between order statistics (exclusive
/// variant, rank (n+1)p clamped to the extremes).
SaliencyMap to_saliency(const AttributionMap& attr);
SaliencyMap to_saliency(const Tensor& values);

/// Sum of |S_i - S_j| over all unordered horizontally and vertically adjacent
/// pairs, divided by h*w.
double average_total_variation(const SaliencyMap& s);

/// 5x5 binomial blur (reflect borders), kept for pyramid construction and
/// exposed for the smoothing property tests.
SaliencyMap gaussian_blur5(const SaliencyMap& s);

/// Level 0 is s; each next level is blurred then bilinearly resampled to
/// (floor(h/1.5), floor(w/1.5)), re-clamped to [0, 1]. Generation stops
/// before emitting a level smaller than min_dim in either dimension.
std::vector<SaliencyMap> gaussian_pyramid(const SaliencyMap& s, const PyramidOptions& opts = {});

TVCurve multiscale_tv_curve(const SaliencyMap& s, const PyramidOptions& opts = {});

/// Simpson's-rule area over (level_index, atv) points. Errors on curves with
/// fewer than two levels.
double autvc(const TVCurve& curve);

/// 8-bit binary PGM, value*255 rounded half up.
void write_pgm(const std::filesystem::path& path, const SaliencyMap& s);
std::vector<std::uint8_t> pgm_bytes(const SaliencyMap& s);

void write_tv_curve_csv(const std::filesystem::path& path, const TVCurve& curve);

Tensor saliency_to_tensor(const SaliencyMap& s);

}  // namespace attrib
