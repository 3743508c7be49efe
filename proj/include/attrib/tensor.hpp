#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "attrib/errors.hpp"

namespace attrib {

/// Dense n-dimensional array of 32-bit floats, row-major.
/// Immutable by convention once handed to a Model or attribution routine;
/// all elements are finite after checked construction.
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor of the given shape. Dims must be positive.
    explicit Tensor(std::vector<std::size_t> shape);

    /// Takes ownership of `data`; validates size and finiteness.
    Tensor(std::vector<std::size_t> shape, std::vector<float> data);

    static Tensor full(std::vector<std::size_t> shape, float value);
    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

    /// Wraps a buffer without the finiteness scan. For internal kernels whose
    /// outputs are validated at layer boundaries.
    static Tensor wrap_unchecked(std::vector<std::size_t> shape, std::vector<float> data);

    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }

    float operator[](std::size_t i) const { return data_[i]; }
    float& operator[](std::size_t i) { return data_[i]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    bool operator==(const Tensor& other) const = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<float> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_to_string(const std::vector<std::size_t>& shape);

}  // namespace attrib
