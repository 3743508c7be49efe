#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace attrib::kernels {

// Layer compute kernels. The functions in this namespace are the production
// path and carry OpenMP pragmas; kernels::serial holds the plain-loop
// reference implementations used by the unit tests and the benchmark, and is
// templated on the scalar type so the finite-difference oracle can run the
// whole forward pass in double.
//
// Determinism contract: every output element is accumulated by exactly one
// thread in a fixed order, so results are bitwise identical for any thread
// count. Reductions use 64-bit accumulators.

struct Conv2dShape {
    std::size_t in_c, in_h, in_w;
    std::size_t out_c, k_h, k_w;
    std::size_t stride_h, stride_w;
    std::size_t pad_h, pad_w;

    std::size_t out_h() const { return (in_h + 2 * pad_h - k_h) / stride_h + 1; }
    std::size_t out_w() const { return (in_w + 2 * pad_w - k_w) / stride_w + 1; }
};

struct Pool2dShape {
    std::size_t channels, in_h, in_w;
    std::size_t k_h, k_w;
    std::size_t stride_h, stride_w;

    std::size_t out_h() const { return (in_h - k_h) / stride_h + 1; }
    std::size_t out_w() const { return (in_w - k_w) / stride_w + 1; }
};

// y = W x + b, W row-major [out_f x in_f]
void dense_forward(const float* w, const float* b, const float* x, float* y,
                   std::size_t out_f, std::size_t in_f);
// dx = W^T dy
void dense_backward_input(const float* w, const float* dy, float* dx,
                          std::size_t out_f, std::size_t in_f);

void conv2d_forward(const Conv2dShape& s, const float* w, const float* b,
                    const float* x, float* y);
void conv2d_backward_input(const Conv2dShape& s, const float* w, const float* dy, float* dx);

void relu_forward(const float* x, float* y, std::size_t n);
// Subgradient at exactly 0 is 0.
void relu_backward(const float* x, const float* dy, float* dx, std::size_t n);

void softplus_forward(const float* x, float* y, std::size_t n);
void softplus_backward(const float* x, const float* dy, float* dx, std::size_t n);

// argmax holds, per output element, the flat input index that won the window;
// ties go to the first maximal element in row-major scan order.
void maxpool2d_forward(const Pool2dShape& s, const float* x, float* y, std::uint32_t* argmax);
void maxpool2d_backward(const Pool2dShape& s, const std::uint32_t* argmax,
                        const float* dy, float* dx);

void avgpool2d_forward(const Pool2dShape& s, const float* x, float* y);
void avgpool2d_backward(const Pool2dShape& s, const float* dy, float* dx);

void softmax_forward(const float* x, float* y, std::size_t n);
void softmax_backward(const float* y, const float* dy, float* dx, std::size_t n);

namespace serial {

template <typename T>
void dense_forward(const T* w, const T* b, const T* x, T* y, std::size_t out_f, std::size_t in_f) {
    for (std::size_t o = 0; o < out_f; ++o) {
        double acc = b ? static_cast<double>(b[o]) : 0.0;
        const T* row = w + o * in_f;
        for (std::size_t i = 0; i < in_f; ++i) acc += static_cast<double>(row[i]) * static_cast<double>(x[i]);
        y[o] = static_cast<T>(acc);
    }
}

template <typename T>
void dense_backward_input(const T* w, const T* dy, T* dx, std::size_t out_f, std::size_t in_f) {
    for (std::size_t i = 0; i < in_f; ++i) {
        double acc = 0.0;
        for (std::size_t o = 0; o < out_f; ++o) acc += static_cast<double>(w[o * in_f + i]) * static_cast<double>(dy[o]);
        dx[i] = static_cast<T>(acc);
    }
}

template <typename T>
void conv2d_forward(const Conv2dShape& s, const T* w, const T* b, const T* x, T* y) {
    const std::size_t oh = s.out_h(), ow = s.out_w();
    for (std::size_t oc = 0; oc < s.out_c; ++oc)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = b ? static_cast<double>(b[oc]) : 0.0;
                for (std::size_t ic = 0; ic < s.in_c; ++ic)
                    for (std::size_t ky = 0; ky < s.k_h; ++ky)
                        for (std::size_t kx = 0; kx < s.k_w; ++kx) {
                            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s.stride_h + ky) - static_cast<std::ptrdiff_t>(s.pad_h);
                            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s.stride_w + kx) - static_cast<std::ptrdiff_t>(s.pad_w);
                            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(s.in_h) || ix >= static_cast<std::ptrdiff_t>(s.in_w)) continue;
                            acc += static_cast<double>(w[((oc * s.in_c + ic) * s.k_h + ky) * s.k_w + kx]) *
                                   static_cast<double>(x[(ic * s.in_h + iy) * s.in_w + ix]);
                        }
                y[(oc * oh + oy) * ow + ox] = static_cast<T>(acc);
            }
}

// Scatter formulation; the parallel kernel gathers. Summation order differs,
// which is the point of keeping an independent reference.
template <typename T>
void conv2d_backward_input(const Conv2dShape& s, const T* w, const T* dy, T* dx) {
    const std::size_t oh = s.out_h(), ow = s.out_w();
    std::vector<double> acc(s.in_c * s.in_h * s.in_w, 0.0);
    for (std::size_t oc = 0; oc < s.out_c; ++oc)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const double g = static_cast<double>(dy[(oc * oh + oy) * ow + ox]);
                for (std::size_t ic = 0; ic < s.in_c; ++ic)
                    for (std::size_t ky = 0; ky < s.k_h; ++ky)
                        for (std::size_t kx = 0; kx < s.k_w; ++kx) {
                            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s.stride_h + ky) - static_cast<std::ptrdiff_t>(s.pad_h);
                            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s.stride_w + kx) - static_cast<std::ptrdiff_t>(s.pad_w);
                            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(s.in_h) || ix >= static_cast<std::ptrdiff_t>(s.in_w)) continue;
                            acc[(ic * s.in_h + iy) * s.in_w + ix] +=
                                g * static_cast<double>(w[((oc * s.in_c + ic) * s.k_h + ky) * s.k_w + kx]);
                        }
            }
    for (std::size_t i = 0; i < acc.size(); ++i) dx[i] = static_cast<T>(acc[i]);
}

template <typename T>
void relu_forward(const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward(const T* x, const T* dy, T* dx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
}

template <typename T>
void softplus_forward(const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double v = static_cast<double>(x[i]);
        y[i] = static_cast<T>(v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)));
    }
}

template <typename T>
void softplus_backward(const T* x, const T* dy, T* dx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double v = static_cast<double>(x[i]);
        dx[i] = static_cast<T>(static_cast<double>(dy[i]) / (1.0 + std::exp(-v)));
    }
}

template <typename T>
void maxpool2d_forward(const Pool2dShape& s, const T* x, T* y, std::uint32_t* argmax) {
    const std::size_t oh = s.out_h(), ow = s.out_w();
    for (std::size_t c = 0; c < s.channels; ++c)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                std::size_t best = (c * s.in_h + oy * s.stride_h) * s.in_w + ox * s.stride_w;
                T best_v = x[best];
                for (std::size_t ky = 0; ky < s.k_h; ++ky)
                    for (std::size_t kx = 0; kx < s.k_w; ++kx) {
                        const std::size_t idx = (c * s.in_h + oy * s.stride_h + ky) * s.in_w + ox * s.stride_w + kx;
                        if (x[idx] > best_v) { best_v = x[idx]; best = idx; }
                    }
                const std::size_t o = (c * oh + oy) * ow + ox;
                y[o] = best_v;
                if (argmax) argmax[o] = static_cast<std::uint32_t>(best);
            }
}

template <typename T>
void maxpool2d_backward(const Pool2dShape& s, const std::uint32_t* argmax, const T* dy, T* dx) {
    const std::size_t n_out = s.channels * s.out_h() * s.out_w();
    for (std::size_t i = 0; i < s.channels * s.in_h * s.in_w; ++i) dx[i] = T(0);
    for (std::size_t o = 0; o < n_out; ++o) dx[argmax[o]] += dy[o];
}

template <typename T>
void avgpool2d_forward(const Pool2dShape& s, const T* x, T* y) {
    const std::size_t oh = s.out_h(), ow = s.out_w();
    const double inv = 1.0 / static_cast<double>(s.k_h * s.k_w);
    for (std::size_t c = 0; c < s.channels; ++c)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (std::size_t ky = 0; ky < s.k_h; ++ky)
                    for (std::size_t kx = 0; kx < s.k_w; ++kx)
                        acc += static_cast<double>(x[(c * s.in_h + oy * s.stride_h + ky) * s.in_w + ox * s.stride_w + kx]);
                y[(c * oh + oy) * ow + ox] = static_cast<T>(acc * inv);
            }
}

template <typename T>
void avgpool2d_backward(const Pool2dShape& s, const T* dy, T* dx) {
    const std::size_t oh = s.out_h(), ow = s.out_w();
    const double inv = 1.0 / static_cast<double>(s.k_h * s.k_w);
    for (std::size_t i = 0; i < s.channels * s.in_h * s.in_w; ++i) dx[i] = T(0);
    for (std::size_t c = 0; c < s.channels; ++c)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const T g = static_cast<T>(static_cast<double>(dy[(c * oh + oy) * ow + ox]) * inv);
                for (std::size_t ky = 0; ky < s.k_h; ++ky)
                    for (std::size_t kx = 0; kx < s.k_w; ++kx)
                        dx[(c * s.in_h + oy * s.stride_h + ky) * s.in_w + ox * s.stride_w + kx] += g;
            }
}

template <typename T>
void softmax_forward(const T* x, T* y, std::size_t n) {
    double mx = static_cast<double>(x[0]);
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, static_cast<double>(x[i]));
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = std::exp(static_cast<double>(x[i]) - mx);
        y[i] = static_cast<T>(e);
        sum += e;
    }
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<T>(static_cast<double>(y[i]) / sum);
}

// dx = y .* (dy - <y, dy>)
template <typename T>
void softmax_backward(const T* y, const T* dy, T* dx, std::size_t n) {
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += static_cast<double>(y[i]) * static_cast<double>(dy[i]);
    for (std::size_t i = 0; i < n; ++i)
        dx[i] = static_cast<T>(static_cast<double>(y[i]) * (static_cast<double>(dy[i]) - dot));
}

}  // namespace serial
}  // namespace attrib::kernels
