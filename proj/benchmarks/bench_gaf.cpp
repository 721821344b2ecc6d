// Encoding throughput: PAA reduction and the O(n^2) GASF/GADF expansion.
#include <vector>

#include <benchmark/benchmark.h>
#include <nirsgaf/gaf.hpp>
#include <nirsgaf/rng.hpp>

using namespace nirsgaf;

namespace {

std::vector<double> random_series(std::size_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    return x;
}

void bm_gasf(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const gaf::RescaledSeries r = gaf::rescale(random_series(n, 1));
    for (auto _ : state) benchmark::DoNotOptimize(gaf::gasf(r));
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                            static_cast<int64_t>(n * n));
}

void bm_gadf(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const gaf::RescaledSeries r = gaf::rescale(random_series(n, 2));
    for (auto _ : state) benchmark::DoNotOptimize(gaf::gadf(r));
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                            static_cast<int64_t>(n * n));
}

void bm_paa(benchmark::State& state) {
    const std::vector<double> x = random_series(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) benchmark::DoNotOptimize(gaf::paa_downsample(x, 64));
}

void bm_full_encode(benchmark::State& state) {
    // the production path for one epoch: PAA to 64, rescale, GASF
    const std::vector<double> x = random_series(400, 4);
    for (auto _ : state) {
        const std::vector<double> reduced = gaf::paa_downsample(x, 64);
        benchmark::DoNotOptimize(gaf::gasf(gaf::rescale(reduced)));
    }
}

}  // namespace

BENCHMARK(bm_gasf)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(bm_gadf)->Arg(64)->Arg(128);
BENCHMARK(bm_paa)->Arg(400)->Arg(4000);
BENCHMARK(bm_full_encode);
