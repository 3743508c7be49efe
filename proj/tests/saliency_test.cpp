#include <doctest.h>

#include <cmath>

#include "attrib/saliency.hpp"
#include "test_util.hpp"

using namespace attrib;
using namespace testutil;

namespace {

SaliencyMap make_map(std::size_t h, std::size_t w, std::vector<float> v) {
    SaliencyMap s;
    s.height = h;
    s.width = w;
    s.values = std::move(v);
    return s;
}

SaliencyMap checkerboard(std::size_t h, std::size_t w) {
    SaliencyMap s;
    s.height = h;
    s.width = w;
    s.values.resize(h * w);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) s.values[r * w + c] = static_cast<float>((r + c) % 2);
    return s;
}

}  // namespace

TEST_CASE("to_saliency: abs + min-max on a 1x3 map") {
    const SaliencyMap s = to_saliency(Tensor({1, 3}, {1.0f, -3.0f, 2.0f}));
    CHECK(s.height == 1);
    CHECK(s.width == 3);
    CHECK_FALSE(s.degenerate);
    CHECK(s.values[0] == doctest::Approx(0.0));
    CHECK(s.values[1] == doctest::Approx(1.0));
    CHECK(s.values[2] == doctest::Approx(0.5));
}

TEST_CASE("to_saliency: constant maps are degenerate all-zeros") {
    const SaliencyMap s = to_saliency(Tensor({4, 4}, std::vector<float>(16, 0.7f)));
    CHECK(s.degenerate);
    for (float v : s.values) CHECK(v == 0.0f);
}

TEST_CASE("to_saliency: 99th percentile clipping tames heavy outliers") {
    // 1000 zeros and ten values of 100: the ten spikes clip to the percentile
    // and normalize to exactly 1.
    std::vector<float> v(1010, 0.0f);
    for (std::size_t i = 0; i < 10; ++i) v[101 * i] = 100.0f;
    const SaliencyMap s = to_saliency(Tensor({10, 101}, std::move(v)));
    CHECK_FALSE(s.degenerate);
    std::size_t ones = 0, zeros = 0;
    for (float x : s.values) {
        if (x == 1.0f) ++ones;
        if (x == 0.0f) ++zeros;
    }
    CHECK(ones == 10);
    CHECK(zeros == 1000);
}

TEST_CASE("to_saliency: channels reduce by summed absolute values") {
    // channel 0: [1, 0], channel 1: [-1, 2] -> abs-sum [2, 2] over a 1x2 grid
    const SaliencyMap s = to_saliency(Tensor({2, 1, 2}, {1.0f, 0.0f, -1.0f, 2.0f}));
    CHECK(s.degenerate);  // both spatial cells equal after reduction
}

TEST_CASE("to_saliency is idempotent on already-normalized flat-tailed maps") {
    Rng rng(4);
    std::vector<float> v(64);
    for (float& x : v) x = static_cast<float>(rng.uniform(0.0, 1.0));
    v[0] = 0.0f;
    v[1] = 1.0f;
    // pull the upper tail down so nothing sits above the 99th percentile
    for (float& x : v)
        if (x > 0.9f && x < 1.0f) x = 0.5f;
    const SaliencyMap once = to_saliency(Tensor({8, 8}, std::vector<float>(v)));
    const SaliencyMap twice = to_saliency(saliency_to_tensor(once));
    for (std::size_t i = 0; i < once.values.size(); ++i)
        CHECK(std::abs(once.values[i] - twice.values[i]) < 1e-6);
}

TEST_CASE("ATV hand cases") {
    CHECK(average_total_variation(make_map(2, 2, {0, 1, 0, 1})) == doctest::Approx(0.5));
    CHECK(average_total_variation(make_map(1, 3, {0, 1, 0})) == doctest::Approx(2.0 / 3.0));
    CHECK(average_total_variation(make_map(3, 3, std::vector<float>(9, 0.42f))) == 0.0);
    CHECK(average_total_variation(make_map(1, 1, {0.5f})) == 0.0);
}

TEST_CASE("ATV is invariant under transpose and mirrors, and bounded") {
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t h = 3 + static_cast<std::size_t>(rng.uniform(0, 5));
        const std::size_t w = 3 + static_cast<std::size_t>(rng.uniform(0, 5));
        SaliencyMap s;
        s.height = h;
        s.width = w;
        s.values.resize(h * w);
        for (float& v : s.values) v = static_cast<float>(rng.uniform(0.0, 1.0));

        SaliencyMap t = make_map(w, h, std::vector<float>(h * w));
        SaliencyMap mh = make_map(h, w, std::vector<float>(h * w));
        SaliencyMap mv = make_map(h, w, std::vector<float>(h * w));
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c) {
                t.values[c * h + r] = s.at(r, c);
                mh.values[r * w + (w - 1 - c)] = s.at(r, c);
                mv.values[(h - 1 - r) * w + c] = s.at(r, c);
            }
        const double atv = average_total_variation(s);
        CHECK(average_total_variation(t) == doctest::Approx(atv).epsilon(1e-12));
        CHECK(average_total_variation(mh) == doctest::Approx(atv).epsilon(1e-12));
        CHECK(average_total_variation(mv) == doctest::Approx(atv).epsilon(1e-12));

        const double bound = static_cast<double>(h * (w - 1) + w * (h - 1)) / static_cast<double>(h * w);
        CHECK(atv <= bound);
    }
}

TEST_CASE("blur never increases ATV") {
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        SaliencyMap s;
        s.height = 16;
        s.width = 16;
        s.values.resize(256);
        for (float& v : s.values) v = static_cast<float>(rng.uniform(0.0, 1.0));
        CHECK(average_total_variation(gaussian_blur5(s)) <= average_total_variation(s) + 1e-9);
    }
    CHECK(average_total_variation(gaussian_blur5(checkerboard(24, 24))) <
          average_total_variation(checkerboard(24, 24)));
}

TEST_CASE("pyramid sizes follow the 1/1.5 ladder and stop below 30") {
    SaliencyMap s = make_map(224, 224, std::vector<float>(224 * 224, 0.0f));
    const auto levels = gaussian_pyramid(s);
    REQUIRE(levels.size() == 5);
    const std::size_t want[5] = {224, 149, 99, 66, 44};
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(levels[i].height == want[i]);
        CHECK(levels[i].width == want[i]);
    }

    // config flag: keep the terminating sub-30 level
    PyramidOptions keep;
    keep.include_final_below_min = true;
    const auto with_tail = gaussian_pyramid(s, keep);
    REQUIRE(with_tail.size() == 6);
    CHECK(with_tail[5].height == 29);
}

TEST_CASE("pyramid of a constant map stays constant with zero ATV") {
    const SaliencyMap s = make_map(70, 70, std::vector<float>(4900, 0.25f));
    for (const auto& level : gaussian_pyramid(s)) {
        for (float v : level.values) CHECK(v == doctest::Approx(0.25).epsilon(1e-6));
        CHECK(average_total_variation(level) == doctest::Approx(0.0).epsilon(1e-7));
    }
}

TEST_CASE("pyramid of a small input is a single level") {
    const SaliencyMap s = make_map(20, 20, std::vector<float>(400, 0.0f));
    CHECK(gaussian_pyramid(s).size() == 1);
}

TEST_CASE("multiscale TV curve structure and checkerboard decay") {
    const SaliencyMap cb = checkerboard(64, 96);
    const TVCurve curve = multiscale_tv_curve(cb);
    CHECK(curve.size() == gaussian_pyramid(cb).size());
    for (std::size_t i = 0; i < curve.size(); ++i) CHECK(curve[i].level == i);
    // exact neighbor count at level 0: every adjacent pair differs by 1
    const double expect = static_cast<double>(64 * 95 + 96 * 63) / (64.0 * 96.0);
    CHECK(curve[0].atv == doctest::Approx(expect).epsilon(1e-12));
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].atv < curve[i - 1].atv);

    // heights/widths strictly decrease
    for (std::size_t i = 1; i < curve.size(); ++i) {
        CHECK(curve[i].height < curve[i - 1].height);
        CHECK(curve[i].width < curve[i - 1].width);
    }

    const TVCurve zero = multiscale_tv_curve(make_map(45, 45, std::vector<float>(2025, 0.0f)));
    for (const auto& l : zero) CHECK(l.atv == 0.0);
}

TEST_CASE("autvc: Simpson over the level curve") {
    const auto level = [](std::size_t i, double atv) { return TVCurveLevel{i, 10 - i, 10 - i, atv}; };
    CHECK_THROWS_AS(autvc(TVCurve{level(0, 1.0)}), Error);
    CHECK(autvc(TVCurve{level(0, 0.0), level(1, 0.0), level(2, 0.0)}) == 0.0);
    CHECK(autvc(TVCurve{level(0, 1.0), level(1, 1.0), level(2, 1.0)}) == doctest::Approx(2.0));
    // atv(t) = t^2 sampled at 0,1,2: Simpson is exact, 8/3
    CHECK(autvc(TVCurve{level(0, 0.0), level(1, 1.0), level(2, 4.0)}) ==
          doctest::Approx(8.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("PGM bytes: header and round-half-up scaling") {
    const SaliencyMap s = make_map(1, 4, {0.0f, 0.5f, 1.0f, 0.998f});
    const auto bytes = pgm_bytes(s);
    const std::string header(bytes.begin(), bytes.begin() + 11);
    CHECK(header == "P5\n4 1\n255\n");
    REQUIRE(bytes.size() == 11 + 4);
    CHECK(bytes[11] == 0);
    CHECK(bytes[12] == 128);  // 127.5 rounds half up
    CHECK(bytes[13] == 255);
    CHECK(bytes[14] == 254);  // 254.49 rounds down
}

TEST_CASE("saliency output is always inside [0,1]") {
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const Tensor t = random_tensor({3, 6, 6}, rng, -50.0, 50.0);
        const SaliencyMap s = to_saliency(t);
        for (float v : s.values) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
}
