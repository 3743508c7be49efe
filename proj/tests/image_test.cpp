#include <doctest.h>

#include <cmath>
#include <string>

#include "attrib/image.hpp"
#include "png_fixtures.hpp"

using namespace attrib;
using namespace png_fixtures;

TEST_CASE("decode grayscale PNG (fixed-Huffman, filter 0)") {
    const Image8 img = decode_png(kGrayPng);
    CHECK(img.width == 5);
    CHECK(img.height == 2);
    CHECK(img.channels == 1);
    for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t x = 0; x < 5; ++x)
            CHECK(img.pixels[y * 5 + x] == static_cast<std::uint8_t>(x * 50 + y * 7));
}

TEST_CASE("decode RGB PNG with up-filtered rows") {
    const Image8 img = decode_png(kRgbPng);
    CHECK(img.width == 4);
    CHECK(img.height == 3);
    CHECK(img.channels == 3);
    for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 4; ++x) {
            const std::size_t i = (y * 4 + x) * 3;
            CHECK(img.pixels[i + 0] == static_cast<std::uint8_t>(x * 60));
            CHECK(img.pixels[i + 1] == static_cast<std::uint8_t>(y * 80));
            CHECK(img.pixels[i + 2] == static_cast<std::uint8_t>((x + y) * 30));
        }
}

TEST_CASE("decode PNG exercising all five filter types") {
    const Image8 img = decode_png(kAllFiltersPng);
    CHECK(img.width == 24);
    CHECK(img.height == 16);
    CHECK(img.channels == 3);
    for (std::size_t y = 0; y < 16; ++y)
        for (std::size_t x = 0; x < 24; ++x) {
            const unsigned v = static_cast<unsigned>((x * 37 + y * 91 + (x * y) % 17) % 256);
            const std::size_t i = (y * 24 + x) * 3;
            CHECK(img.pixels[i + 0] == static_cast<std::uint8_t>(v));
            CHECK(img.pixels[i + 1] == static_cast<std::uint8_t>((v * 3) % 256));
            CHECK(img.pixels[i + 2] == static_cast<std::uint8_t>((255 - v) % 256));
        }
}

TEST_CASE("decode PNG with stored deflate blocks") {
    const Image8 img = decode_png(kStoredPng);
    CHECK(img.width == 3);
    CHECK(img.height == 2);
    for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t x = 0; x < 3; ++x)
            CHECK(img.pixels[y * 3 + x] == static_cast<std::uint8_t>(x * 40 + y * 100));
}

TEST_CASE("inflate handles dynamic-Huffman streams") {
    const auto raw = zlib_inflate(kDynamicZlib.data(), kDynamicZlib.size());
    std::string want;
    for (int i = 0; i < 120; ++i)
        want += "sample line " + std::to_string(i) + " with some repeated words and digits 0123456789\n";
    CHECK(std::string(raw.begin(), raw.end()) == want);
}

TEST_CASE("corrupt streams are rejected") {
    CHECK_THROWS_AS(decode_png({0, 1, 2, 3}), Error);

    auto bad = kGrayPng;
    bad[bad.size() - 20] ^= 0xff;  // flip a byte inside IDAT
    CHECK_THROWS_AS(decode_png(bad), Error);

    auto truncated = kRgbPng;
    truncated.resize(truncated.size() / 2);
    CHECK_THROWS_AS(decode_png(truncated), Error);
}

TEST_CASE("image_to_tensor: CHW layout, normalization, alpha dropped") {
    const Image8 rgba = decode_png(kRgbaPng);
    CHECK(rgba.channels == 4);
    const Tensor plain = image_to_tensor(rgba, {}, {});
    REQUIRE(plain.shape() == std::vector<std::size_t>{3, 2, 2});
    // pixel (1,0) has red = 100
    CHECK(plain[0 * 4 + 1] == doctest::Approx(100.0 / 255.0));

    const Tensor normed = image_to_tensor(rgba, {0.5, 0.5, 0.5}, {0.25, 0.25, 0.25});
    CHECK(normed[0 * 4 + 1] == doctest::Approx((100.0 / 255.0 - 0.5) / 0.25));

    CHECK_THROWS_AS(image_to_tensor(rgba, {0.5}, {0.0}), Error);
}
