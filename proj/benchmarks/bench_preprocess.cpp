// Filtering cost at the production band (0.01-0.09 Hz, order 3, 13.3 Hz):
// the SOS cascade design, one causal pass, and full zero-phase filtfilt.
#include <vector>

#include <benchmark/benchmark.h>
#include <nirsgaf/preprocess.hpp>
#include <nirsgaf/rng.hpp>

using namespace nirsgaf;

namespace {

constexpr double kRateHz = 13.3;

std::vector<double> random_signal(std::size_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    return x;
}

void bm_design(benchmark::State& state) {
    const preprocess::FilterSpec spec;
    for (auto _ : state)
        benchmark::DoNotOptimize(preprocess::butterworth_bandpass(spec, kRateHz));
}

void bm_sos_filter(benchmark::State& state) {
    const preprocess::SosCascade cascade =
        preprocess::butterworth_bandpass(preprocess::FilterSpec{}, kRateHz);
    const std::vector<double> x = random_signal(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(preprocess::sos_filter(cascade, x));
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * state.range(0));
}

void bm_filtfilt(benchmark::State& state) {
    const preprocess::SosCascade cascade =
        preprocess::butterworth_bandpass(preprocess::FilterSpec{}, kRateHz);
    const std::vector<double> x = random_signal(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(preprocess::filtfilt(cascade, x));
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * state.range(0));
}

}  // namespace

BENCHMARK(bm_design);
BENCHMARK(bm_sos_filter)->Arg(1000)->Arg(10000)->Arg(40000);
BENCHMARK(bm_filtfilt)->Arg(1000)->Arg(10000)->Arg(40000);
