// Forward-pass cost of the default network and its dominant layer, plus one
// full optimizer step (forward + backward + RMSprop update).
#include <vector>

#include <benchmark/benchmark.h>
#include <nirsgaf/nn_layers.hpp>
#include <nirsgaf/nn_network.hpp>
#include <nirsgaf/nn_train.hpp>
#include <nirsgaf/rng.hpp>

using namespace nirsgaf;

namespace {

Tensor random_batch(std::size_t n, std::size_t side, uint64_t seed) {
    Tensor x({n, 1, side, side});
    Rng rng(seed);
    for (auto& v : x.data) v = rng.normal();
    return x;
}

void bm_conv_forward(benchmark::State& state) {
    nn::Conv2d conv(8, 3, 1, nn::Conv2d::kSamePadding, true);
    conv.configure({1, 64, 64});
    Rng rng(1);
    conv.init_params(rng);
    const Tensor x = random_batch(static_cast<std::size_t>(state.range(0)), 64, 2);
    for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x, nn::Mode::kEval));
}

void bm_network_predict(benchmark::State& state) {
    nn::Network net(nn::NetworkSpec::default_spec(64), 3);
    const Tensor x = random_batch(static_cast<std::size_t>(state.range(0)), 64, 4);
    for (auto _ : state) benchmark::DoNotOptimize(net.predict_proba(x));
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * state.range(0));
}

void bm_train_step(benchmark::State& state) {
    nn::Network net(nn::NetworkSpec::default_spec(64), 5);
    const std::size_t batch = 8;
    const Tensor x = random_batch(batch, 64, 6);
    std::vector<int> y(batch);
    for (std::size_t i = 0; i < batch; ++i) y[i] = static_cast<int>(i % 3);
    const Tensor one_hot = nn::Network::one_hot(y, 3);

    const nn::RmspropConfig opt;
    std::vector<std::vector<double>> velocity;
    for (auto& p : net.params()) velocity.emplace_back(p.value->size(), 0.0);

    for (auto _ : state) {
        net.zero_grads();
        const Tensor probs = net.forward(x, nn::Mode::kTrain);
        benchmark::DoNotOptimize(net.loss(probs, one_hot));
        net.backward(probs, one_hot);
        std::size_t i = 0;
        for (auto& p : net.params()) {
            nn::rmsprop_step(*p.value, *p.grad, velocity[i], opt, opt.lr);
            ++i;
        }
    }
}

}  // namespace

BENCHMARK(bm_conv_forward)->Arg(1)->Arg(8);
BENCHMARK(bm_network_predict)->Arg(1)->Arg(8)->Arg(32);
BENCHMARK(bm_train_step);
