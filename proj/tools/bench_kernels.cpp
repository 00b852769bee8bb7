// Serial-vs-OpenMP comparison for the hot loops: dense matmul at the
// transformer's working sizes, the pairwise Frechet distance matrix, and
// ensemble member training.

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "agebench/covariates.hpp"
#include "agebench/ingest.hpp"
#include "agebench/kernels.hpp"
#include "agebench/neural.hpp"
#include "agebench/rng.hpp"

using namespace agebench;

namespace {

double time_of(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count() / reps;
}

void bench_matmul(std::size_t n, int reps) {
    Rng rng(1);
    std::vector<double> a(n * n), b(n * n), c(n * n);
    for (auto& v : a) v = rng.uniform(-1, 1);
    for (auto& v : b) v = rng.uniform(-1, 1);

    const double serial = time_of(
        [&] { kernels::matmul_serial(a.data(), b.data(), c.data(), n, n, n); }, reps);
    const double parallel = time_of(
        [&] { kernels::matmul_omp(a.data(), b.data(), c.data(), n, n, n); }, reps);
    const double gflops = 2.0 * n * n * n / 1e9;
    std::printf("matmul %4zu x %-4zu  serial %8.3f ms (%5.2f GF/s)  omp %8.3f ms (%5.2f "
                "GF/s)  speedup %.2fx\n",
                n, n, serial * 1e3, gflops / serial, parallel * 1e3, gflops / parallel,
                serial / parallel);
}

void bench_frechet() {
    std::vector<ts::DegradationTrace> traces;
    for (int i = 0; i < 12; ++i) {
        ingest::SynthConfig cfg;
        cfg.alpha = 0.01 * (1.0 + 0.05 * i);
        cfg.duration = 400;
        cfg.noise_sigma = 1e-4;
        cfg.seed = 100 + i;
        traces.push_back(ingest::synthesize_trace(cfg, "t" + std::to_string(i)));
    }
    // The parallel path is the library default; the serial baseline runs the
    // same pair loop on one thread.
    const double parallel = time_of([&] { cov::distance_matrix(traces); }, 3);
    const double serial = time_of(
        [&] {
            for (std::size_t i = 0; i < traces.size(); ++i)
                for (std::size_t j = i + 1; j < traces.size(); ++j)
                    cov::frechet_distance(traces[i].values, traces[j].values);
        },
        3);
    std::printf("frechet 12x401pts    serial %8.3f ms                omp %8.3f ms      "
                "        speedup %.2fx\n",
                serial * 1e3, parallel * 1e3, serial / parallel);
}

void bench_ensemble() {
    ingest::SynthConfig cfg;
    cfg.duration = 120;
    cfg.noise_sigma = 2e-3;
    const auto trace = ingest::synthesize_trace(cfg);
    const auto lags = nn::select_lags(trace.values, 5);

    nn::EnsembleConfig ens;
    ens.hidden_count = 10;
    const double parallel = time_of(
        [&] { nn::train_ensemble(trace.values, lags, nn::MemberKind::Mlp, ens, 42); }, 3);
    const double serial = time_of(
        [&] {
            for (std::size_t i = 0; i < ens.member_count; ++i)
                nn::train_mlp_fixed(trace.values, lags, ens.hidden_count,
                                    Rng::derive(42, i));
        },
        3);
    std::printf("mlp ensemble (20)    serial %8.3f ms                omp %8.3f ms      "
                "        speedup %.2fx\n",
                serial * 1e3, parallel * 1e3, serial / parallel);
}

}  // namespace

int main() {
    std::printf("threads available: %d\n", kernels::max_threads());
    bench_matmul(64, 50);
    bench_matmul(128, 20);
    bench_matmul(256, 5);
    bench_frechet();
    bench_ensemble();
    return 0;
}
