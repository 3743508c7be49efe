#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "attrib/tensor.hpp"

namespace attrib {

/// Decoded 8-bit image, channels x height x width would be the tensor form;
/// here pixels are interleaved row-major as they come out of the file.
struct Image8 {
    std::size_t width = 0, height = 0, channels = 0;
    std::vector<std::uint8_t> pixels;  // interleaved, row-major
};

/// Decodes an 8-bit, non-interlaced PNG (grayscale, gray+alpha, RGB or RGBA;
/// all five filter types; fixed, dynamic and stored deflate blocks).
Image8 decode_png(const std::vector<std::uint8_t>& bytes);
Image8 load_png(const std::filesystem::path& path);

/// CHW float tensor with value = (pixel/255 - mean[c]) / std[c]. Alpha
/// channels are dropped. mean/std of size 1 broadcast across channels;
/// empty means mean 0 / std 1.
Tensor image_to_tensor(const Image8& img, const std::vector<double>& mean,
                       const std::vector<double>& stddev);

/// Raw inflate of a zlib stream (exposed for tests).
std::vector<std::uint8_t> zlib_inflate(const std::uint8_t* data, std::size_t size);

}  // namespace attrib
