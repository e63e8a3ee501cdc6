// Compares the OpenMP kernels against the serial references at a few
// realistic sizes. Build with -DCOLAR_BUILD_BENCH=ON; not part of ctest.

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "colar/kernels.hpp"
#include "colar/rng.hpp"

using namespace colar;
using Clock = std::chrono::steady_clock;

namespace {

template <typename F>
double time_ms(F&& fn, int reps) {
    fn();  // warmup
    const auto start = Clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto stop = Clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void report(const char* name, double serial_ms, double parallel_ms) {
    std::printf("%-28s serial %9.3f ms   omp %9.3f ms   speedup %5.2fx\n", name, serial_ms,
                parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP\n");
#endif
    Rng rng(42);

    {
        const std::size_t h = 1024, d = 2048, len = 65;
        Tensor2D x(d, len), w(h, 3 * d), b(h, 1), y(h, len);
        x.fill_normal(rng);
        w.fill_normal(rng, 0.01);
        report("conv1d 2048->1024, L=65",
               time_ms([&] { serial::conv1d_forward(x, w, b, y); }, 5),
               time_ms([&] { kernels::conv1d_forward(x, w, b, y); }, 5));
    }
    {
        const std::size_t out = 4096, in = 2048;
        Tensor2D w(out, in), b(out, 1);
        std::vector<double> x(in), y(out);
        w.fill_normal(rng, 0.01);
        for (auto& v : x) v = rng.normal();
        report("matvec 4096x2048",
               time_ms([&] { serial::matvec(w, x.data(), b, y.data()); }, 20),
               time_ms([&] { kernels::matvec(w, x.data(), b, y.data()); }, 20));
    }
    {
        const std::size_t n = 20000, d = 128, m = 64;
        Tensor2D points(n, d), centroids(m, d);
        points.fill_normal(rng);
        centroids.fill_normal(rng);
        std::vector<std::size_t> assign;
        std::vector<double> sqdist;
        report("kmeans assign 20k x 128, M=64",
               time_ms([&] { serial::kmeans_assign(points, centroids, assign, sqdist); }, 5),
               time_ms([&] { kernels::kmeans_assign(points, centroids, assign, sqdist); }, 5));
    }
    return 0;
}
