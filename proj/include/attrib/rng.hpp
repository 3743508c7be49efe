#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace attrib {

/// PRNG algorithm identifier recorded in every run report. Streams are
/// mt19937_64 engines seeded through splitmix64 mixing; normal deviates come
/// from the trigonometric Box-Muller transform. Reproducibility contract:
/// bitwise within one build, not across implementations.
inline constexpr const char* kPrngId = "splitmix64/mt19937_64/box-muller";

/// Seedable random stream. Substreams derived from a (seed, path) pair are
/// independent of each other and of evaluation order, so concurrent samplers
/// can each own one without coordination.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

    /// Derives a stream from a root seed and an index path, e.g.
    /// substream(seed, {kStreamNoise, sample_index}).
    static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

    /// Derived 64-bit seed for handing to a sub-task that owns its own
    /// streams (same mixing as substream).
    static std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal deviate (Box-Muller, pair cached).
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    static std::uint64_t mix(std::uint64_t v);

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Stream tags keep unrelated draws from aliasing. smooth_grad and
// generate_roots intentionally share kStreamNoise: sample i of either method
// sees the identical noise vector, which is what makes the SmoothTaylor /
// SmoothGrad equivalence check exact under a shared seed.
inline constexpr std::uint64_t kStreamNoise = 1;
inline constexpr std::uint64_t kStreamBaseline = 2;
inline constexpr std::uint64_t kStreamPerturb = 3;
inline constexpr std::uint64_t kStreamInput = 4;

}  // namespace attrib
