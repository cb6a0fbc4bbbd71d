// Timing comparison between the serial reference integrator and the
// OpenMP-parallel kernel, plus an amplitude-grid map.
#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cqed/observables.hpp"

using namespace cqed;
using Clock = std::chrono::steady_clock;

namespace {

double seconds(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class F>
double timed(F&& f) {
    auto t0 = Clock::now();
    f();
    return seconds(t0);
}

} // namespace

int main(int argc, char** argv) {
    std::uint64_t samples = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 400000;
    ProcessParams par;
    double sqrt_s = 3 * par.m_mu;

#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("openmp: not enabled\n");
#endif
    std::printf("%-34s %12s %14s\n", "kernel", "time [s]", "result");

    TotalResult serial{}, parallel{};
    double ts = timed([&] {
        serial = total_sigma_serial(ScatterProcess::EeToMuMu, par, sqrt_s, samples, 42);
    });
    std::printf("%-34s %12.3f %14.6e\n", "mc total (serial reference)", ts, serial.sigma);
    double tp = timed([&] {
        parallel = total_sigma(ScatterProcess::EeToMuMu, par, sqrt_s, samples, 42);
    });
    std::printf("%-34s %12.3f %14.6e\n", "mc total (openmp)", tp, parallel.sigma);
    std::printf("bitwise identical: %s   speedup: %.2fx\n",
                serial.sigma == parallel.sigma && serial.mc_error == parallel.mc_error ? "yes"
                                                                                       : "NO",
                ts / tp);

    const int grid = 400;
    std::vector<double> vals(grid);
    double tg_serial = timed([&] {
        for (int i = 0; i < grid; ++i) {
            double c = -0.999 + 1.998 * i / (grid - 1);
            vals[i] = dsigma_domega(ScatterProcess::EeToMuMu, par, sqrt_s, c).value;
        }
    });
    std::vector<double> vals_p(grid);
    double tg_par = timed([&] {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < grid; ++i) {
            double c = -0.999 + 1.998 * i / (grid - 1);
            vals_p[i] = dsigma_domega(ScatterProcess::EeToMuMu, par, sqrt_s, c).value;
        }
    });
    bool same = vals == vals_p;
    std::printf("%-34s %12.3f %14s\n", "angle grid (serial)", tg_serial, "-");
    std::printf("%-34s %12.3f %14s\n", "angle grid (openmp)", tg_par, same ? "identical" : "DIFF");
    return serial.sigma == parallel.sigma && same ? 0 : 1;
}
