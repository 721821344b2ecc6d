#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include <doctest.h>
#include <nirsgaf/errors.hpp>
#include <nirsgaf/nn_network.hpp>
#include <nirsgaf/nn_train.hpp>
#include <nirsgaf/rng.hpp>

using namespace nirsgaf;
using namespace nirsgaf::nn;

namespace {

// flatten -> dense(3) -> softmax on 2x2 single-channel "images"
NetworkSpec toy_spec() {
    NetworkSpec spec;
    spec.input_shape = {1, 2, 2};
    spec.l2_strength = 1e-4;
    LayerSpec flat;
    flat.kind = "flatten";
    LayerSpec dense;
    dense.kind = "dense";
    dense.units = 3;
    LayerSpec sm;
    sm.kind = "softmax";
    spec.layers = {flat, dense, sm};
    return spec;
}

// class k lights up pixel k of the 2x2 image (pixel 3 unused)
void toy_data(std::size_t per_class, uint64_t seed, Tensor& x, std::vector<int>& y) {
    Rng rng(seed);
    x = Tensor({per_class * 3, 1, 2, 2});
    y.clear();
    for (std::size_t i = 0; i < per_class * 3; ++i) {
        const int k = static_cast<int>(i % 3);
        y.push_back(k);
        for (std::size_t p = 0; p < 4; ++p)
            x.at4(i, 0, p / 2, p % 2) =
                (static_cast<int>(p) == k ? 5.0 : 0.0) + 0.1 * rng.normal();
    }
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("rmsprop_step matches the hand-computed update") {
    RmspropConfig opt;  // rho 0.9, eps 1e-8; opt.lr is irrelevant here
    opt.lr = 999.0;     // the effective lr is the explicit argument

    std::vector<double> theta = {1.0};
    std::vector<double> grad = {1.0};
    std::vector<double> v = {0.0};

    rmsprop_step(theta, grad, v, opt, 0.01);
    // v = 0.9 * 0 + 0.1 * 1 = 0.1; theta -= 0.01 / (sqrt(0.1) + 1e-8)
    CHECK(v[0] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(theta[0] == doctest::Approx(0.96837722439831617).epsilon(1e-12));

    rmsprop_step(theta, grad, v, opt, 0.01);
    // v = 0.9 * 0.1 + 0.1 = 0.19; theta -= 0.01 / (sqrt(0.19) + 1e-8)
    CHECK(v[0] == doctest::Approx(0.19).epsilon(1e-12));
    CHECK(theta[0] == doctest::Approx(0.94543565153757577).epsilon(1e-12));
}

TEST_CASE("rmsprop_step handles zero gradients without division blowups") {
    RmspropConfig opt;
    std::vector<double> theta = {2.0};
    std::vector<double> grad = {0.0};
    std::vector<double> v = {0.0};
    rmsprop_step(theta, grad, v, opt, 0.1);
    CHECK(theta[0] == 2.0);
    CHECK(v[0] == 0.0);
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());

    TrainConfig bad = cfg;
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.max_epochs = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.optimizer.lr = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.optimizer.rho = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.plateau.factor = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.early_stop.patience = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("train config JSON: defaults, partial documents, round trip") {
    const TrainConfig partial = TrainConfig::from_json_text("{\"max_epochs\": 5}");
    CHECK(partial.max_epochs == 5);
    CHECK(partial.batch_size == 8);
    CHECK(partial.optimizer.lr == 1e-3);
    CHECK(partial.optimizer.rho == 0.9);
    CHECK(partial.plateau.patience == 5);
    CHECK(partial.early_stop.patience == 10);

    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.max_epochs = 17;
    cfg.optimizer.lr = 0.002;
    cfg.plateau.patience = 3;
    const TrainConfig back = TrainConfig::from_json_text(cfg.to_json_text());
    CHECK(back.to_json_text() == cfg.to_json_text());
    CHECK(back.batch_size == 4);
    CHECK(back.max_epochs == 17);

    CHECK_THROWS_AS(TrainConfig::from_json_text("not json"), ConfigError);
    CHECK_THROWS_AS(TrainConfig::from_json_text("{\"batch_size\": 0}"), ConfigError);
}

TEST_CASE("training learns a separable toy problem") {
    Tensor x_train, x_val;
    std::vector<int> y_train, y_val;
    toy_data(10, 1, x_train, y_train);
    toy_data(5, 2, x_val, y_val);

    Network net(toy_spec(), 42);
    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.max_epochs = 40;
    cfg.optimizer.lr = 0.05;
    cfg.seed = 3;

    const History h = train(net, x_train, y_train, x_val, y_val, cfg);
    REQUIRE(!h.epochs.empty());
    CHECK(h.stopped_epoch == h.epochs.size() - 1);
    CHECK(h.best_epoch <= h.stopped_epoch);

    const std::vector<int> pred = net.predict(x_val);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y_val.size(); ++i)
        if (pred[i] == y_val[i]) ++hits;
    CHECK(static_cast<double>(hits) / static_cast<double>(y_val.size()) >= 0.9);

    for (const auto& e : h.epochs) {
        CHECK(std::isfinite(e.train_loss));
        CHECK(std::isfinite(e.val_loss));
        CHECK(e.learning_rate > 0.0);
        CHECK(e.train_accuracy >= 0.0);
        CHECK(e.train_accuracy <= 1.0);
    }
}

TEST_CASE("training is deterministic given the seeds") {
    Tensor x_train, x_val;
    std::vector<int> y_train, y_val;
    toy_data(8, 5, x_train, y_train);
    toy_data(4, 6, x_val, y_val);

    TrainConfig cfg;
    cfg.max_epochs = 10;
    cfg.optimizer.lr = 0.03;
    cfg.seed = 11;

    Network a(toy_spec(), 9);
    const History ha = train(a, x_train, y_train, x_val, y_val, cfg);
    Network b(toy_spec(), 9);
    const History hb = train(b, x_train, y_train, x_val, y_val, cfg);

    REQUIRE(ha.epochs.size() == hb.epochs.size());
    for (std::size_t i = 0; i < ha.epochs.size(); ++i) {
        CHECK(std::bit_cast<uint64_t>(ha.epochs[i].train_loss) ==
              std::bit_cast<uint64_t>(hb.epochs[i].train_loss));
        CHECK(std::bit_cast<uint64_t>(ha.epochs[i].val_loss) ==
              std::bit_cast<uint64_t>(hb.epochs[i].val_loss));
    }
    CHECK(ha.best_epoch == hb.best_epoch);
}

TEST_CASE("plateau drops the lr and stalled training stops early") {
    Tensor x_train, x_val;
    std::vector<int> y_train, y_val;
    toy_data(8, 7, x_train, y_train);
    toy_data(4, 8, x_val, y_val);

    // an lr this small cannot move the val loss by min_delta, so the run
    // plateaus immediately: epoch 0 sets the best, the lr halves (clamped to
    // min_lr) after `plateau.patience` stalled epochs, and the run stops
    // after `early_stop.patience` stalled epochs
    TrainConfig cfg;
    cfg.max_epochs = 50;
    cfg.optimizer.lr = 2e-12;
    cfg.plateau.min_lr = 1e-12;
    cfg.plateau.patience = 2;
    cfg.early_stop.patience = 5;
    cfg.seed = 2;

    Network net(toy_spec(), 4);
    const History h = train(net, x_train, y_train, x_val, y_val, cfg);

    CHECK(h.early_stopped);
    CHECK(h.epochs.size() == 6);  // epoch 0 best + 5 stalled
    CHECK(h.stopped_epoch == 5);
    CHECK(h.best_epoch == 0);
    CHECK(h.lr_drops == std::vector<std::size_t>{2});
    CHECK(h.epochs.front().learning_rate == 2e-12);
    CHECK(h.epochs.back().learning_rate == 1e-12);  // clamped at min_lr
}

TEST_CASE("the best-validation weights are restored after training") {
    Tensor x_train, x_val;
    std::vector<int> y_train, y_val;
    toy_data(10, 3, x_train, y_train);
    toy_data(5, 4, x_val, y_val);

    Network net(toy_spec(), 21);
    TrainConfig cfg;
    cfg.max_epochs = 25;
    cfg.optimizer.lr = 0.05;
    cfg.seed = 13;
    const History h = train(net, x_train, y_train, x_val, y_val, cfg);

    // best_epoch is the last epoch that improved by >= min_delta, so it sits
    // within min_delta of the strict minimum
    double best = h.epochs[0].val_loss;
    for (const auto& e : h.epochs) best = std::min(best, e.val_loss);
    CHECK(h.epochs[h.best_epoch].val_loss >= best);
    CHECK(h.epochs[h.best_epoch].val_loss < best + cfg.plateau.min_delta);

    // recomputing the val loss on the returned network reproduces it
    const Tensor probs = net.forward(x_val, Mode::kEval);
    const double recomputed = net.loss(probs, Network::one_hot(y_val, 3));
    CHECK(recomputed == doctest::Approx(h.epochs[h.best_epoch].val_loss).epsilon(1e-9));
}

TEST_CASE("train rejects mismatched inputs") {
    Tensor x_train, x_val;
    std::vector<int> y_train, y_val;
    toy_data(4, 1, x_train, y_train);
    toy_data(2, 2, x_val, y_val);

    Network net(toy_spec(), 1);
    TrainConfig cfg;
    cfg.max_epochs = 2;

    std::vector<int> short_y(y_train.begin(), y_train.end() - 1);
    CHECK_THROWS_AS(train(net, x_train, short_y, x_val, y_val, cfg), Error);

    Tensor empty({0, 1, 2, 2});
    CHECK_THROWS_AS(train(net, empty, {}, x_val, y_val, cfg), Error);
}

}  // TEST_SUITE
