#include "attrib/tensor.hpp"

#include <cmath>
#include <sstream>

namespace attrib {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

namespace {

void check_shape(const std::vector<std::size_t>& shape) {
    if (shape.empty()) throw config_error("tensor shape must have at least one dimension");
    for (std::size_t d : shape)
        if (d == 0) throw config_error("tensor dimensions must be positive, got " + shape_to_string(shape));
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_product(shape_), 0.0f);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (shape_product(shape_) != data_.size())
        throw config_error("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_to_string(shape_));
    if (!all_finite()) throw numeric_error("tensor constructed with non-finite elements");
}

Tensor Tensor::full(std::vector<std::size_t> shape, float value) {
    check_shape(shape);
    if (!std::isfinite(value)) throw numeric_error("tensor fill value is non-finite");
    std::vector<float> data(shape_product(shape), value);
    return wrap_unchecked(std::move(shape), std::move(data));
}

Tensor Tensor::wrap_unchecked(std::vector<std::size_t> shape, std::vector<float> data) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
}

bool Tensor::all_finite() const {
    for (float v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace attrib
