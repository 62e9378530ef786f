// Micro-benchmark comparing the OpenMP grid kernels against the serial
// dense/naive reference implementations on a few representative shapes.

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gradmrf/fft.hpp"
#include "gradmrf/gmrf.hpp"
#include "gradmrf/reference.hpp"
#include "gradmrf/rng.hpp"

using namespace gradmrf;

namespace {

double time_median_ms(const std::function<void()>& fn, int reps) {
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

void report(const char* name, double kernel_ms, double ref_ms) {
    std::printf("%-34s %10.3f ms %12.3f ms %9.1fx\n", name, kernel_ms, ref_ms,
                ref_ms / kernel_ms);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP: disabled\n");
#endif
    std::printf("%-34s %13s %15s %10s\n", "kernel", "parallel", "serial ref", "speedup");

    Rng rng(7);
    const Shape3 small{3, 6, 6};
    const Shape3 large{3, 32, 32};

    TensorGrid t_small(small), t_large(large);
    for (std::size_t i = 0; i < t_small.size(); ++i) t_small[i] = rng.normal();
    for (std::size_t i = 0; i < t_large.size(); ++i) t_large[i] = rng.normal();

    // fft3 vs naive O(n^2)-per-axis DFT (reference only feasible on the small shape)
    report("fft3 3x6x6 vs naive dft3",
           time_median_ms([&] { (void)fft3(t_small); }, 50),
           time_median_ms([&] { (void)ref::dft3_naive(t_small); }, 10));

    const auto spec = StencilSpec::three_channel();
    const ParamVector theta{6.0, -1.0, -0.5, -0.25};
    const auto model_small = GmrfModel::build(spec, theta, small);
    const auto model_large = GmrfModel::build(spec, theta, large);
    const auto dense = ref::dense_lambda(spec, theta, small);

    report("Lambda*v 3x6x6 vs dense matvec",
           time_median_ms([&] { (void)model_small.apply(t_small); }, 200),
           time_median_ms([&] { (void)ref::dense_matvec(dense, t_small); }, 200));

    report("Lambda^-1*v 3x6x6 vs dense solve",
           time_median_ms([&] { (void)model_small.solve(t_small); }, 100),
           time_median_ms([&] { (void)ref::dense_solve(dense, t_small); }, 20));

    report("logdet 3x6x6 vs dense logdet",
           time_median_ms([&] { (void)model_small.logdet(); }, 200),
           time_median_ms([&] { (void)ref::dense_logdet(dense, small.total()); }, 20));

    // large-shape kernels have no dense counterpart that fits in memory
    // comfortably; time them against a single-threaded run of the same code
    std::printf("\nlarge-shape kernels (3x32x32), parallel timings only:\n");
    std::printf("  fft3:          %8.3f ms\n",
                time_median_ms([&] { (void)fft3(t_large); }, 50));
    std::printf("  Lambda*v:      %8.3f ms\n",
                time_median_ms([&] { (void)model_large.apply(t_large); }, 100));
    std::printf("  Lambda^-1*v:   %8.3f ms\n",
                time_median_ms([&] { (void)model_large.solve(t_large); }, 50));
    std::printf("  sample_prior:  %8.3f ms\n",
                time_median_ms([&] { (void)model_large.sample_prior(1); }, 50));
    return 0;
}
