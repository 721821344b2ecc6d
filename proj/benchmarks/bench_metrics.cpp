// Metrics cost at pooled-evaluation sizes: one-vs-rest AUROC, the micro
// averages, and stratified fold planning.
#include <vector>

#include <benchmark/benchmark.h>
#include <nirsgaf/metrics.hpp>
#include <nirsgaf/rng.hpp>

using namespace nirsgaf;

namespace {

struct Scored {
    Tensor scores;
    std::vector<int> labels;
};

Scored random_scored(std::size_t n, uint64_t seed) {
    Rng rng(seed);
    Scored s;
    s.scores = Tensor({n, 3});
    for (auto& v : s.scores.data) v = rng.uniform01();
    s.labels.resize(n);
    for (auto& l : s.labels) l = static_cast<int>(rng.below(3));
    s.labels[0] = 0;
    s.labels[1] = 1;
    s.labels[2] = 2;
    return s;
}

void bm_auroc_ovr(benchmark::State& state) {
    const Scored s = random_scored(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(eval::auroc_ovr(s.scores, s.labels, 0));
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * state.range(0));
}

void bm_micro_auroc(benchmark::State& state) {
    const Scored s = random_scored(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(eval::micro_average_roc(s.scores, s.labels));
}

void bm_average_precision(benchmark::State& state) {
    const Scored s = random_scored(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state)
        benchmark::DoNotOptimize(eval::average_precision_micro(s.scores, s.labels));
}

void bm_make_folds(benchmark::State& state) {
    const Scored s = random_scored(static_cast<std::size_t>(state.range(0)), 4);
    for (auto _ : state) benchmark::DoNotOptimize(eval::make_folds(s.labels, 5, true, 7));
}

}  // namespace

BENCHMARK(bm_auroc_ovr)->Arg(1000)->Arg(10000);
BENCHMARK(bm_micro_auroc)->Arg(1000)->Arg(10000);
BENCHMARK(bm_average_precision)->Arg(1000)->Arg(10000);
BENCHMARK(bm_make_folds)->Arg(1620);
