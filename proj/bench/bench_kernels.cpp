// Serial reference vs OpenMP kernels for decay calibration.
//
//   ./hedgekit_bench --benchmark_filter=Pit
//   OMP_NUM_THREADS=4 ./hedgekit_bench

#include <benchmark/benchmark.h>

#include "hedgekit/kernels.hpp"
#include "hedgekit/rng.hpp"
#include "hedgekit/sampler.hpp"

namespace {

using namespace hedgekit;

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    const auto v = normals(static_cast<std::size_t>(rows * cols), 2);
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

void BM_PitSerial(benchmark::State& state) {
    const auto series = normals(static_cast<std::size_t>(state.range(0)), 1);
    const auto w = decay_weights(static_cast<std::size_t>(state.range(1)), 0.99);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::pit_serial(series, w));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PitParallel(benchmark::State& state) {
    const auto series = normals(static_cast<std::size_t>(state.range(0)), 1);
    const auto w = decay_weights(static_cast<std::size_t>(state.range(1)), 0.99);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::pit_parallel(series, w));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

// Full calibration workload: 11 component series x 61 grid points.
void BM_KsGridSerial(benchmark::State& state) {
    const Eigen::MatrixXd series = normal_matrix(state.range(0), 11);
    const auto grid = default_decay_grid();
    for (auto _ : state) benchmark::DoNotOptimize(kernels::ks_grid_serial(series, grid, 100));
}

void BM_KsGridParallel(benchmark::State& state) {
    const Eigen::MatrixXd series = normal_matrix(state.range(0), 11);
    const auto grid = default_decay_grid();
    for (auto _ : state) benchmark::DoNotOptimize(kernels::ks_grid_parallel(series, grid, 100));
    state.counters["threads"] = kernels::max_threads();
}

}  // namespace

BENCHMARK(BM_PitSerial)->Args({2200, 100})->Args({2200, 250})->Args({20000, 250})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PitParallel)->Args({2200, 100})->Args({2200, 250})->Args({20000, 250})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_KsGridSerial)->Arg(2200)->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KsGridParallel)->Arg(2200)->Arg(5000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
