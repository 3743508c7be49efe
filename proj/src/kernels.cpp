#include "attrib/kernels.hpp"

#include <algorithm>
#include <utility>
#include <vector>

namespace attrib::kernels {

// Parallelization rule: one thread owns each output element (or channel for
// the pooling scatters), and every per-element accumulation runs in a fixed
// serial order. Results are bitwise identical for any thread count.

void dense_forward(const float* w, const float* b, const float* x, float* y,
                   std::size_t out_f, std::size_t in_f) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(out_f);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t o = 0; o < n; ++o) {
        double acc = b ? static_cast<double>(b[o]) : 0.0;
        const float* row = w + static_cast<std::size_t>(o) * in_f;
        for (std::size_t i = 0; i < in_f; ++i) acc += static_cast<double>(row[i]) * static_cast<double>(x[i]);
        y[o] = static_cast<float>(acc);
    }
}

void dense_backward_input(const float* w, const float* dy, float* dx,
                          std::size_t out_f, std::size_t in_f) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(in_f);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t o = 0; o < out_f; ++o)
            acc += static_cast<double>(w[o * in_f + static_cast<std::size_t>(i)]) * static_cast<double>(dy[o]);
        dx[i] = static_cast<float>(acc);
    }
}

void conv2d_forward(const Conv2dShape& s, const float* w, const float* b,
                    const float* x, float* y) {
    const std::size_t oh = s.out_h(), ow = s.out_w();
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(s.out_c * oh * ow);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t idx = 0; idx < n; ++idx) {
        const std::size_t oc = static_cast<std::size_t>(idx) / (oh * ow);
        const std::size_t oy = (static_cast<std::size_t>(idx) / ow) % oh;
        const std::size_t ox = static_cast<std::size_t>(idx) % ow;
        double acc = b ? static_cast<double>(b[oc]) : 0.0;
        for (std::size_t ic = 0; ic < s.in_c; ++ic)
            for (std::size_t ky = 0; ky < s.k_h; ++ky) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s.stride_h + ky) - static_cast<std::ptrdiff_t>(s.pad_h);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(s.in_h)) continue;
                for (std::size_t kx = 0; kx < s.k_w; ++kx) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s.stride_w + kx) - static_cast<std::ptrdiff_t>(s.pad_w);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(s.in_w)) continue;
                    acc += static_cast<double>(w[((oc * s.in_c + ic) * s.k_h + ky) * s.k_w + kx]) *
                           static_cast<double>(x[(ic * s.in_h + static_cast<std::size_t>(iy)) * s.in_w + static_cast<std::size_t>(ix)]);
                }
            }
        y[idx] = static_cast<float>(acc);
    }
}

namespace {

// Valid (kernel tap, output position) pairs for one input position along one
// axis: o*stride + k == i + pad with o in range.
std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> conv_taps(
    std::size_t in_n, std::size_t k_n, std::size_t stride, std::size_t pad, std::size_t out_n) {
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> taps(in_n);
    for (std::size_t i = 0; i < in_n; ++i)
        for (std::size_t k = 0; k < k_n; ++k) {
            const std::ptrdiff_t num = static_cast<std::ptrdiff_t>(i + pad) - static_cast<std::ptrdiff_t>(k);
            if (num < 0 || num % static_cast<std::ptrdiff_t>(stride) != 0) continue;
            const std::size_t o = static_cast<std::size_t>(num) / stride;
            if (o < out_n) taps[i].emplace_back(static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(o));
        }
    return taps;
}

}  // namespace

// Gather form: each input element sums the output gradients it contributed
// to. The valid tap tables are shared across channels and threads.
void conv2d_backward_input(const Conv2dShape& s, const float* w, const float* dy, float* dx) {
    const std::size_t oh = s.out_h(), ow = s.out_w();
    const auto row_taps = conv_taps(s.in_h, s.k_h, s.stride_h, s.pad_h, oh);
    const auto col_taps = conv_taps(s.in_w, s.k_w, s.stride_w, s.pad_w, ow);

    const std::ptrdiff_t n_rows = static_cast<std::ptrdiff_t>(s.in_c * s.in_h);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t row = 0; row < n_rows; ++row) {
        const std::size_t ic = static_cast<std::size_t>(row) / s.in_h;
        const std::size_t iy = static_cast<std::size_t>(row) % s.in_h;
        float* out = dx + (ic * s.in_h + iy) * s.in_w;
        for (std::size_t ix = 0; ix < s.in_w; ++ix) {
            double acc = 0.0;
            for (std::size_t oc = 0; oc < s.out_c; ++oc) {
                const float* w_base = w + (oc * s.in_c + ic) * s.k_h * s.k_w;
                const float* dy_base = dy + oc * oh * ow;
                for (const auto& [ky, oy] : row_taps[iy]) {
                    const float* w_row = w_base + ky * s.k_w;
                    const float* dy_row = dy_base + oy * ow;
                    for (const auto& [kx, ox] : col_taps[ix])
                        acc += static_cast<double>(w_row[kx]) * static_cast<double>(dy_row[ox]);
                }
            }
            out[ix] = static_cast<float>(acc);
        }
    }
}

void relu_forward(const float* x, float* y, std::size_t n) {
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < m; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(const float* x, const float* dy, float* dx, std::size_t n) {
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < m; ++i) dx[i] = x[i] > 0.0f ? dy[i] : 0.0f;
}

void softplus_forward(const float* x, float* y, std::size_t n) {
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < m; ++i) {
        const double v = static_cast<double>(x[i]);
        y[i] = static_cast<float>(v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)));
    }
}

void softplus_backward(const float* x, const float* dy, float* dx, std::size_t n) {
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < m; ++i) {
        const double v = static_cast<double>(x[i]);
        dx[i] = static_cast<float>(static_cast<double>(dy[i]) / (1.0 + std::exp(-v)));
    }
}

void maxpool2d_forward(const Pool2dShape& s, const float* x, float* y, std::uint32_t* argmax) {
    const std::size_t oh = s.out_h(), ow = s.out_w();
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(s.channels * oh * ow);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t idx = 0; idx < n; ++idx) {
        const std::size_t c = static_cast<std::size_t>(idx) / (oh * ow);
        const std::size_t oy = (static_cast<std::size_t>(idx) / ow) % oh;
        const std::size_t ox = static_cast<std::size_t>(idx) % ow;
        std::size_t best = (c * s.in_h + oy * s.stride_h) * s.in_w + ox * s.stride_w;
        float best_v = x[best];
        for (std::size_t ky = 0; ky < s.k_h; ++ky)
            for (std::size_t kx = 0; kx < s.k_w; ++kx) {
                const std::size_t i = (c * s.in_h + oy * s.stride_h + ky) * s.in_w + ox * s.stride_w + kx;
                if (x[i] > best_v) { best_v = x[i]; best = i; }
            }
        y[idx] = best_v;
        if (argmax) argmax[idx] = static_cast<std::uint32_t>(best);
    }
}

// Scatter per channel; windows can overlap within a channel when
// stride < kernel, so each channel's accumulation stays serial.
void maxpool2d_backward(const Pool2dShape& s, const std::uint32_t* argmax,
                        const float* dy, float* dx) {
    const std::size_t oh = s.out_h(), ow = s.out_w();
    const std::ptrdiff_t nc = static_cast<std::ptrdiff_t>(s.channels);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < nc; ++c) {
        float* dxc = dx + static_cast<std::size_t>(c) * s.in_h * s.in_w;
        std::fill(dxc, dxc + s.in_h * s.in_w, 0.0f);
        const std::size_t base = static_cast<std::size_t>(c) * oh * ow;
        for (std::size_t o = 0; o < oh * ow; ++o)
            dx[argmax[base + o]] += dy[base + o];
    }
}

void avgpool2d_forward(const Pool2dShape& s, const float* x, float* y) {
    const std::size_t oh = s.out_h(), ow = s.out_w();
    const double inv = 1.0 / static_cast<double>(s.k_h * s.k_w);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(s.channels * oh * ow);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t idx = 0; idx < n; ++idx) {
        const std::size_t c = static_cast<std::size_t>(idx) / (oh * ow);
        const std::size_t oy = (static_cast<std::size_t>(idx) / ow) % oh;
        const std::size_t ox = static_cast<std::size_t>(idx) % ow;
        double acc = 0.0;
        for (std::size_t ky = 0; ky < s.k_h; ++ky)
            for (std::size_t kx = 0; kx < s.k_w; ++kx)
                acc += static_cast<double>(x[(c * s.in_h + oy * s.stride_h + ky) * s.in_w + ox * s.stride_w + kx]);
        y[idx] = static_cast<float>(acc * inv);
    }
}

void avgpool2d_backward(const Pool2dShape& s, const float* dy, float* dx) {
    const std::size_t oh = s.out_h(), ow = s.out_w();
    const double inv = 1.0 / static_cast<double>(s.k_h * s.k_w);
    const std::ptrdiff_t nc = static_cast<std::ptrdiff_t>(s.channels);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < nc; ++c) {
        float* dxc = dx + static_cast<std::size_t>(c) * s.in_h * s.in_w;
        std::fill(dxc, dxc + s.in_h * s.in_w, 0.0f);
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const float g = static_cast<float>(
                    static_cast<double>(dy[(static_cast<std::size_t>(c) * oh + oy) * ow + ox]) * inv);
                for (std::size_t ky = 0; ky < s.k_h; ++ky)
                    for (std::size_t kx = 0; kx < s.k_w; ++kx)
                        dxc[(oy * s.stride_h + ky) * s.in_w + ox * s.stride_w + kx] += g;
            }
    }
}

// Softmax vectors are small; the serial form is the production form.
void softmax_forward(const float* x, float* y, std::size_t n) {
    serial::softmax_forward(x, y, n);
}

void softmax_backward(const float* y, const float* dy, float* dx, std::size_t n) {
    serial::softmax_backward(y, dy, dx, n);
}

}  // namespace attrib::kernels
