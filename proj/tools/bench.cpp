// Benchmark comparing the OpenMP kernels against the serial reference
// implementations, plus one end-to-end SmoothTaylor timing. Also reports the
// max elementwise deviation between the two paths.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "attrib/attribution.hpp"
#include "attrib/kernels.hpp"
#include "attrib/model.hpp"
#include "attrib/parallel.hpp"
#include "attrib/rng.hpp"

using namespace attrib;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const double t0 = now_ms();
        fn();
        best = std::min(best, now_ms() - t0);
    }
    return best;
}

std::vector<float> random_vec(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<float> v(n);
    for (float& x : v) x = static_cast<float>(rng.uniform(lo, hi));
    return v;
}

double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    return m;
}

void row(const char* name, double serial_ms, double parallel_ms, double diff) {
    std::printf("%-28s %10.3f %10.3f %8.2fx %12.3e\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms, diff);
}

}  // namespace

int main() {
    Rng rng(20240229);
    const int reps = 5;

    std::printf("workers: %zu\n", worker_count());
    std::printf("%-28s %10s %10s %9s %12s\n", "kernel", "serial/ms", "omp/ms", "speedup", "max|diff|");

    {
        kernels::Conv2dShape s{8, 96, 96, 16, 3, 3, 1, 1, 1, 1};
        const auto w = random_vec(s.out_c * s.in_c * s.k_h * s.k_w, rng);
        const auto b = random_vec(s.out_c, rng);
        const auto x = random_vec(s.in_c * s.in_h * s.in_w, rng);
        std::vector<float> y_ref(s.out_c * s.out_h() * s.out_w());
        std::vector<float> y_omp(y_ref.size());
        const double t_ref = time_best_of(reps, [&] {
            kernels::serial::conv2d_forward(s, w.data(), b.data(), x.data(), y_ref.data());
        });
        const double t_omp = time_best_of(reps, [&] {
            kernels::conv2d_forward(s, w.data(), b.data(), x.data(), y_omp.data());
        });
        row("conv2d_forward 8->16 96x96", t_ref, t_omp, max_abs_diff(y_ref, y_omp));

        const auto dy = random_vec(y_ref.size(), rng);
        std::vector<float> dx_ref(x.size()), dx_omp(x.size());
        const double tb_ref = time_best_of(reps, [&] {
            kernels::serial::conv2d_backward_input(s, w.data(), dy.data(), dx_ref.data());
        });
        const double tb_omp = time_best_of(reps, [&] {
            kernels::conv2d_backward_input(s, w.data(), dy.data(), dx_omp.data());
        });
        row("conv2d_backward 8->16 96x96", tb_ref, tb_omp, max_abs_diff(dx_ref, dx_omp));
    }

    {
        const std::size_t out_f = 2048, in_f = 2048;
        const auto w = random_vec(out_f * in_f, rng);
        const auto b = random_vec(out_f, rng);
        const auto x = random_vec(in_f, rng);
        std::vector<float> y_ref(out_f), y_omp(out_f);
        const double t_ref = time_best_of(reps, [&] {
            kernels::serial::dense_forward(w.data(), b.data(), x.data(), y_ref.data(), out_f, in_f);
        });
        const double t_omp = time_best_of(reps, [&] {
            kernels::dense_forward(w.data(), b.data(), x.data(), y_omp.data(), out_f, in_f);
        });
        row("dense_forward 2048x2048", t_ref, t_omp, max_abs_diff(y_ref, y_omp));
    }

    {
        // End to end: SmoothTaylor over a conv net, parallel across roots.
        const std::size_t c = 1, hw = 32;
        std::map<std::string, Tensor> weights;
        weights.emplace("c1.w", Tensor({4, c, 3, 3}, random_vec(4 * c * 9, rng, -0.5, 0.5)));
        weights.emplace("c1.b", Tensor({4}, random_vec(4, rng, -0.1, 0.1)));
        weights.emplace("fc.w", Tensor({3, 4 * 16 * 16}, random_vec(3 * 4 * 16 * 16, rng, -0.05, 0.05)));
        Model model({c, hw, hw},
                    {LayerDesc::conv2d("c1", c, 4, 3, 1, 1, "c1.w", "c1.b"),
                     LayerDesc::activation("r1", LayerKind::relu),
                     LayerDesc::pool("p1", LayerKind::maxpool2d, 2, 2), LayerDesc::flatten("f"),
                     LayerDesc::dense("fc", 4 * 16 * 16, 3, "fc.w")},
                    std::move(weights));
        const Tensor x({c, hw, hw}, random_vec(c * hw * hw, rng, 0.0, 1.0));
        const ScoreTarget target{0, ScoreKind::logit};
        const NoiseConfig cfg{0.3, 64, 7};

        Tensor serial_map, parallel_map;
        const std::size_t full = worker_count();
        set_worker_count(1);
        const double t1 = time_best_of(2, [&] {
            serial_map = smooth_taylor(model, x, target, cfg).values;
        });
        set_worker_count(full);
        const double tn = time_best_of(2, [&] {
            parallel_map = smooth_taylor(model, x, target, cfg).values;
        });
        double diff = 0.0;
        for (std::size_t i = 0; i < serial_map.size(); ++i)
            diff = std::max(diff, std::abs(static_cast<double>(serial_map[i]) -
                                           static_cast<double>(parallel_map[i])));
        row("smooth_taylor R=64 (1 thr vs n)", t1, tn, diff);
    }

    return 0;
}
