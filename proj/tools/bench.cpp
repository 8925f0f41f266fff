// Kernel and run-level throughput comparison: the log/antilog serial
// reference vs the table kernels (with OpenMP splitting for large buffers),
// plus the sweep fan-out speedup across worker threads.

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tetrysim/gf256.hpp"
#include "tetrysim/rng.hpp"
#include "tetrysim/scenario.hpp"
#include "tetrysim/simcore.hpp"

using namespace tetrysim;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void bench_axpy() {
    std::printf("gf256 axpy: serial reference vs table kernel\n");
    std::printf("%12s %14s %14s %8s\n", "bytes", "ref MB/s", "kernel MB/s", "speedup");
    Xoshiro256ss rng(1);
    for (const std::size_t n : {512UL, 4096UL, 65536UL, 1UL << 20, 8UL << 20}) {
        std::vector<std::uint8_t> src(n), dst(n);
        for (auto& b : src) b = static_cast<std::uint8_t>(rng.next_below(256));
        const int reps = static_cast<int>(std::max<std::size_t>(4, (64UL << 20) / n));

        auto t0 = Clock::now();
        for (int r = 0; r < reps; ++r)
            gf::axpy_ref(dst, static_cast<std::uint8_t>(1 + (r % 255)), src);
        const double ref_s = seconds_since(t0);

        t0 = Clock::now();
        for (int r = 0; r < reps; ++r)
            gf::axpy(dst, static_cast<std::uint8_t>(1 + (r % 255)), src);
        const double ker_s = seconds_since(t0);

        const double mb = static_cast<double>(n) * reps / 1e6;
        std::printf("%12zu %14.0f %14.0f %7.2fx\n", n, mb / ref_s, mb / ker_s, ref_s / ker_s);
    }
}

void bench_runs() {
    auto cfg = preset("cbr");
    cfg.codec.adaptive = false;
    cfg.codec.fixed_n = 10;
    cfg.traffic.packets = 20000;
    cfg.apply_override("channel.loss=0 ge 0.03 3");

    std::printf("\nscenario runs (20k packets, GE 3%%/b=3, fixed 10%%)\n");
    auto t0 = Clock::now();
    const auto log = run_scenario(cfg);
    const double one = seconds_since(t0);
    std::printf("single run: %.2fs (%s)\n", one, log.summary_line().c_str());

    const int nruns = 8;
    t0 = Clock::now();
    for (int i = 0; i < nruns; ++i) {
        auto c = cfg;
        c.seed = i + 1;
        run_scenario(c);
    }
    const double serial = seconds_since(t0);

    t0 = Clock::now();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int i = 0; i < nruns; ++i) {
        auto c = cfg;
        c.seed = i + 1;
        run_scenario(c);
    }
    const double parallel = seconds_since(t0);
#ifdef _OPENMP
    std::printf("%d independent runs: serial %.2fs, %d threads %.2fs (%.2fx)\n", nruns, serial,
                omp_get_max_threads(), parallel, serial / parallel);
#else
    std::printf("%d independent runs: serial %.2fs (OpenMP disabled: parallel %.2fs)\n", nruns,
                serial, parallel);
#endif
}

} // namespace

int main() {
    bench_axpy();
    bench_runs();
    return 0;
}
