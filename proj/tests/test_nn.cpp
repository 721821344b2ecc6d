#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <vector>

#include <doctest.h>
#include <nirsgaf/errors.hpp>
#include <nirsgaf/model_io.hpp>
#include <nirsgaf/nn_layers.hpp>
#include <nirsgaf/nn_network.hpp>
#include <nirsgaf/rng.hpp>

#include "test_support.hpp"

using namespace nirsgaf;
using namespace nirsgaf::nn;
using testsupport::TempDir;

namespace {

// The kernel ParamView of a layer (is_kernel == true), by construction the
// L2-regularized one.
ParamView kernel_of(Layer& layer) {
    for (auto& p : layer.params())
        if (p.is_kernel) return p;
    REQUIRE(false);
    return {};
}

ParamView bias_of(Layer& layer) {
    for (auto& p : layer.params())
        if (!p.is_kernel) return p;
    REQUIRE(false);
    return {};
}

Tensor random_tensor(std::vector<std::size_t> shape, uint64_t seed) {
    Tensor t(std::move(shape));
    Rng rng(seed);
    for (auto& v : t.data) v = rng.normal();
    return t;
}

// Central-difference gradient check over the first `limit` elements of every
// parameter. Returns the max relative error, with the usual guarded
// denominator.
double gradient_check(Network& net, const Tensor& x, const std::vector<int>& y,
                      std::size_t limit = 6, double delta = 1e-5) {
    const Tensor one_hot = Network::one_hot(y, 3);

    net.zero_grads();
    const Tensor probs = net.forward(x, Mode::kTrain);
    net.loss(probs, one_hot);
    net.backward(probs, one_hot);

    // snapshot of analytic grads (recomputing forward invalidates them)
    std::vector<std::vector<double>> analytic;
    for (auto& p : net.params()) analytic.push_back(*p.grad);

    double max_rel = 0.0;
    std::size_t pi = 0;
    for (auto& p : net.params()) {
        const std::size_t n = std::min(limit, p.value->size());
        for (std::size_t i = 0; i < n; ++i) {
            const double saved = (*p.value)[i];
            (*p.value)[i] = saved + delta;
            const double up = net.loss(net.forward(x, Mode::kTrain), one_hot);
            (*p.value)[i] = saved - delta;
            const double down = net.loss(net.forward(x, Mode::kTrain), one_hot);
            (*p.value)[i] = saved;

            const double fd = (up - down) / (2.0 * delta);
            const double ga = analytic[pi][i];
            const double denom = std::max({std::abs(fd), std::abs(ga), 1e-6});
            max_rel = std::max(max_rel, std::abs(fd - ga) / denom);
        }
        ++pi;
    }
    return max_rel;
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("conv2d forward with hand-set all-ones kernel") {
    Conv2d conv(1, 3, 1, Conv2d::kSamePadding, false);
    const auto out_shape = conv.configure({1, 3, 3});
    CHECK(out_shape == std::vector<std::size_t>{1, 3, 3});

    auto w = kernel_of(conv);
    auto b = bias_of(conv);
    std::fill(w.value->begin(), w.value->end(), 1.0);
    (*b.value)[0] = 0.5;

    Tensor x({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    const Tensor y = conv.forward(x, Mode::kEval);
    REQUIRE(y.shape == std::vector<std::size_t>{1, 1, 3, 3});
    const double expected[9] = {12.5, 21.5, 16.5, 27.5, 45.5, 33.5, 24.5, 39.5, 28.5};
    for (std::size_t i = 0; i < 9; ++i)
        CHECK(y[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("conv2d fused relu clamps negative pre-activations") {
    Conv2d conv(1, 3, 1, Conv2d::kSamePadding, true);
    conv.configure({1, 3, 3});
    auto w = kernel_of(conv);
    std::fill(w.value->begin(), w.value->end(), -1.0);

    Tensor x({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    const Tensor y = conv.forward(x, Mode::kEval);
    for (double v : y.data) CHECK(v == 0.0);
}

TEST_CASE("conv2d shape arithmetic") {
    Conv2d strided(4, 3, 2, 0, false);
    CHECK(strided.configure({1, 7, 7}) == std::vector<std::size_t>{4, 3, 3});

    Conv2d same(8, 3, 1, Conv2d::kSamePadding, true);
    CHECK(same.configure({1, 64, 64}) == std::vector<std::size_t>{8, 64, 64});

    Conv2d padded(2, 5, 1, 2, false);
    CHECK(padded.configure({3, 10, 10}) == std::vector<std::size_t>{2, 10, 10});
}

TEST_CASE("maxpool forward picks block maxima; backward routes to argmax") {
    MaxPool pool(2, 2);
    CHECK(pool.configure({1, 4, 4}) == std::vector<std::size_t>{1, 2, 2});

    Tensor x({1, 1, 4, 4}, {1, 2, 0, 0,   //
                            3, 4, 0, 9,   //
                            5, 0, 7, 0,   //
                            0, 6, 0, 8});
    const Tensor y = pool.forward(x, Mode::kTrain);
    REQUIRE(y.shape == std::vector<std::size_t>{1, 1, 2, 2});
    CHECK(y[0] == 4.0);
    CHECK(y[1] == 9.0);
    CHECK(y[2] == 6.0);
    CHECK(y[3] == 8.0);

    Tensor dy({1, 1, 2, 2}, {1, 1, 1, 1});
    const Tensor dx = pool.backward(dy);
    REQUIRE(dx.shape == x.shape);
    double total = 0.0;
    for (std::size_t i = 0; i < dx.size(); ++i) {
        total += dx[i];
        CHECK((dx[i] == 0.0 || dx[i] == 1.0));
    }
    CHECK(total == 4.0);
    CHECK(dx.at4(0, 0, 1, 1) == 1.0);  // the "4" position
    CHECK(dx.at4(0, 0, 1, 3) == 1.0);  // the "9" position
}

TEST_CASE("batchnorm normalizes per channel in train mode") {
    BatchNorm bn;
    bn.configure({2, 3, 3});
    Rng unused(0);
    bn.init_params(unused);

    const Tensor x = random_tensor({8, 2, 3, 3}, 40);
    const Tensor y = bn.forward(x, Mode::kTrain);

    for (std::size_t c = 0; c < 2; ++c) {
        double mean = 0.0, var = 0.0;
        std::size_t n = 0;
        for (std::size_t b = 0; b < 8; ++b)
            for (std::size_t h = 0; h < 3; ++h)
                for (std::size_t w = 0; w < 3; ++w) {
                    mean += y.at4(b, c, h, w);
                    ++n;
                }
        mean /= static_cast<double>(n);
        for (std::size_t b = 0; b < 8; ++b)
            for (std::size_t h = 0; h < 3; ++h)
                for (std::size_t w = 0; w < 3; ++w)
                    var += (y.at4(b, c, h, w) - mean) * (y.at4(b, c, h, w) - mean);
        var /= static_cast<double>(n);
        CHECK(std::abs(mean) < 1e-9);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-3));  // off by eps only
    }
}

TEST_CASE("batchnorm eval mode uses running statistics") {
    BatchNorm bn;
    bn.configure({1, 2, 2});
    Rng unused(0);
    bn.init_params(unused);

    const Tensor x = random_tensor({16, 1, 2, 2}, 41);
    // train a few times so the running stats move off their init
    for (int i = 0; i < 20; ++i) bn.forward(x, Mode::kTrain);

    const Tensor train_out = bn.forward(x, Mode::kTrain);
    const Tensor eval_out = bn.forward(x, Mode::kEval);
    // same input, different statistics => different outputs
    bool differs = false;
    for (std::size_t i = 0; i < x.size(); ++i)
        differs = differs || std::abs(train_out[i] - eval_out[i]) > 1e-12;
    CHECK(differs);

    // eval mode must be deterministic and side-effect free
    const Tensor eval_again = bn.forward(x, Mode::kEval);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(std::bit_cast<uint64_t>(eval_out[i]) == std::bit_cast<uint64_t>(eval_again[i]));
}

TEST_CASE("flatten round trips shapes") {
    Flatten f;
    CHECK(f.configure({2, 3, 4}) == std::vector<std::size_t>{24});
    Tensor x = random_tensor({5, 2, 3, 4}, 77);
    const Tensor y = f.forward(x, Mode::kEval);
    REQUIRE(y.shape == std::vector<std::size_t>{5, 24});
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == x[i]);

    const Tensor dx = f.backward(y);
    CHECK(dx.shape == x.shape);
}

TEST_CASE("dense forward with hand-set weights") {
    Dense d(2, false);
    CHECK(d.configure({2}) == std::vector<std::size_t>{2});
    auto w = kernel_of(d);
    auto b = bias_of(d);
    *w.value = {1.0, 2.0, 3.0, 4.0};  // [units][in]
    *b.value = {0.5, -0.5};

    Tensor x({1, 2}, {1.0, 1.0});
    const Tensor y = d.forward(x, Mode::kEval);
    CHECK(y.at2(0, 0) == doctest::Approx(3.5).epsilon(1e-15));
    CHECK(y.at2(0, 1) == doctest::Approx(6.5).epsilon(1e-15));

    Dense r(2, true);
    r.configure({2});
    *kernel_of(r).value = {-1.0, -1.0, 1.0, 1.0};
    const Tensor yr = r.forward(x, Mode::kEval);
    CHECK(yr.at2(0, 0) == 0.0);  // relu clamps -2
    CHECK(yr.at2(0, 1) == 2.0);
}

TEST_CASE("dropout: identity in eval, scaled mask in train, reseedable") {
    Dropout drop(0.5);
    drop.configure({100});
    Tensor x({4, 100});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1.0;

    const Tensor eval_out = drop.forward(x, Mode::kEval);
    for (double v : eval_out.data) CHECK(v == 1.0);

    drop.reseed(5);
    const Tensor a = drop.forward(x, Mode::kTrain);
    std::size_t zeros = 0;
    for (double v : a.data) {
        CHECK((v == 0.0 || v == 2.0));  // 1 / (1 - rate) = 2
        zeros += v == 0.0;
    }
    CHECK(zeros > 100);  // ~200 of 400 expected
    CHECK(zeros < 300);

    drop.reseed(5);
    const Tensor b = drop.forward(x, Mode::kTrain);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("dropout backward kills the same positions") {
    Dropout drop(0.3);
    drop.configure({50});
    drop.reseed(8);
    Tensor x({2, 50});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 3.0;
    const Tensor y = drop.forward(x, Mode::kTrain);

    Tensor dy({2, 50});
    for (std::size_t i = 0; i < dy.size(); ++i) dy[i] = 1.0;
    const Tensor dx = drop.backward(dy);
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 0.0) CHECK(dx[i] == 0.0);
        else CHECK(dx[i] == doctest::Approx(1.0 / 0.7).epsilon(1e-12));
    }
}

TEST_CASE("softmax rows form a distribution with known values") {
    Softmax sm;
    CHECK(sm.configure({3}) == std::vector<std::size_t>{3});
    Tensor x({2, 3}, {0.0, 0.0, 0.0, std::log(2.0), 0.0, 0.0});
    const Tensor y = sm.forward(x, Mode::kEval);
    for (std::size_t k = 0; k < 3; ++k)
        CHECK(y.at2(0, k) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(y.at2(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(y.at2(1, 1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(y.at2(1, 2) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("default spec matches the published architecture") {
    const NetworkSpec spec = NetworkSpec::default_spec(64);
    CHECK(spec.input_shape == std::vector<std::size_t>{1, 64, 64});
    CHECK(spec.l2_strength == 0.3);
    REQUIRE(spec.layers.size() == 14);

    const std::vector<std::string> kinds = {
        "conv2d",    "maxpool", "conv2d",  "maxpool", "conv2d",  "maxpool", "conv2d",
        "maxpool",   "batchnorm", "flatten", "dense",  "dropout", "dense",   "softmax"};
    for (std::size_t i = 0; i < kinds.size(); ++i) CHECK(spec.layers[i].kind == kinds[i]);
    CHECK(spec.layers[0].out_channels == 8);
    CHECK(spec.layers[2].out_channels == 16);
    CHECK(spec.layers[4].out_channels == 32);
    CHECK(spec.layers[6].out_channels == 64);
    CHECK(spec.layers[10].units == 64);
    CHECK(spec.layers[10].activation == "relu");
    CHECK(spec.layers[11].rate == 0.5);
    CHECK(spec.layers[12].units == 3);
    CHECK_NOTHROW(spec.validate());
}

TEST_CASE("network forward produces probabilities; loss matches hand CE") {
    NetworkSpec spec = NetworkSpec::default_spec(16);
    spec.l2_strength = 0.01;
    Network net(spec, 123);
    CHECK(net.output_shape() == std::vector<std::size_t>{3});

    const Tensor x = random_tensor({4, 1, 16, 16}, 9);
    const std::vector<int> y = {0, 1, 2, 1};
    const Tensor probs = net.forward(x, Mode::kEval);
    REQUIRE(probs.shape == std::vector<std::size_t>{4, 3});
    for (std::size_t i = 0; i < 4; ++i) {
        double sum = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(probs.at2(i, k) >= 0.0);
            sum += probs.at2(i, k);
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }

    // loss = mean CE + l2 * sum of squared kernels
    double ce = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        ce -= std::log(probs.at2(i, static_cast<std::size_t>(y[i])) + Network::kLogEpsilon);
    ce /= 4.0;
    double l2 = 0.0;
    for (auto& p : net.params())
        if (p.is_kernel)
            for (double w : *p.value) l2 += w * w;
    const double expected = ce + spec.l2_strength * l2;
    const double got = net.loss(probs, Network::one_hot(y, 3));
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("predict returns the argmax class") {
    NetworkSpec spec = NetworkSpec::default_spec(16);
    Network net(spec, 5);
    const Tensor x = random_tensor({3, 1, 16, 16}, 6);
    const Tensor p = net.predict_proba(x);
    const std::vector<int> pred = net.predict(x);
    for (std::size_t i = 0; i < 3; ++i) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < 3; ++k)
            if (p.at2(i, k) > p.at2(i, best)) best = k;
        CHECK(pred[i] == static_cast<int>(best));
    }
}

TEST_CASE("one_hot encodes and rejects bad labels") {
    const Tensor oh = Network::one_hot({2, 0}, 3);
    REQUIRE(oh.shape == std::vector<std::size_t>{2, 3});
    CHECK(oh.at2(0, 2) == 1.0);
    CHECK(oh.at2(0, 0) == 0.0);
    CHECK(oh.at2(1, 0) == 1.0);
    CHECK_THROWS_AS(Network::one_hot({3}, 3), DataError);
}

TEST_CASE("analytic gradients agree with central differences (small net)") {
    NetworkSpec spec;
    spec.input_shape = {1, 6, 6};
    spec.l2_strength = 0.01;
    LayerSpec conv;
    conv.kind = "conv2d";
    conv.out_channels = 2;
    conv.kernel = 3;
    LayerSpec pool;
    pool.kind = "maxpool";
    LayerSpec flat;
    flat.kind = "flatten";
    LayerSpec dense;
    dense.kind = "dense";
    dense.units = 3;
    LayerSpec sm;
    sm.kind = "softmax";
    spec.layers = {conv, pool, flat, dense, sm};
    spec.validate();

    Network net(spec, 2024);
    const Tensor x = random_tensor({3, 1, 6, 6}, 31);
    const std::vector<int> y = {0, 1, 2};
    CHECK(gradient_check(net, x, y) < 1e-4);
}

TEST_CASE("spec JSON round trip is exact") {
    const NetworkSpec spec = NetworkSpec::default_spec(32);
    const std::string text = spec.to_json_text();
    const NetworkSpec back = NetworkSpec::from_json_text(text);
    CHECK(back.to_json_text() == text);
    CHECK(back.input_shape == spec.input_shape);
    CHECK(back.l2_strength == spec.l2_strength);
    CHECK(back.layers.size() == spec.layers.size());
}

TEST_CASE("spec validation rejects malformed stacks") {
    NetworkSpec no_softmax = NetworkSpec::default_spec(16);
    no_softmax.layers.pop_back();
    CHECK_THROWS_AS(no_softmax.validate(), ConfigError);

    NetworkSpec wrong_units = NetworkSpec::default_spec(16);
    wrong_units.layers[12].units = 4;
    CHECK_THROWS_AS(wrong_units.validate(), ConfigError);

    NetworkSpec empty;
    empty.layers.clear();
    CHECK_THROWS_AS(empty.validate(), ConfigError);

    CHECK_THROWS_AS(NetworkSpec::from_json_text("{\"layers\": 5}"), ConfigError);
    CHECK_THROWS_AS(NetworkSpec::from_json_text("not json"), ConfigError);
}

TEST_CASE("model save/load round trip preserves outputs bit-exactly") {
    TempDir tmp;
    NetworkSpec spec = NetworkSpec::default_spec(16);
    spec.l2_strength = 0.05;
    Network net(spec, 77);

    // move batchnorm running stats off init so state serialization matters
    const Tensor warm = random_tensor({4, 1, 16, 16}, 1);
    net.forward(warm, Mode::kTrain);

    const Tensor x = random_tensor({2, 1, 16, 16}, 2);
    const Tensor before = net.predict_proba(x);

    const std::string path = tmp.file("model.gnn1");
    save_model(path, net);
    Network loaded = load_model(path);
    CHECK(loaded.spec().to_json_text() == spec.to_json_text());

    const Tensor after = loaded.predict_proba(x);
    REQUIRE(after.shape == before.shape);
    for (std::size_t i = 0; i < before.size(); ++i)
        CHECK(std::bit_cast<uint64_t>(after[i]) == std::bit_cast<uint64_t>(before[i]));
}

TEST_CASE("corrupted model files are rejected") {
    TempDir tmp;
    Network net(NetworkSpec::default_spec(16), 3);
    const std::string path = tmp.file("model.gnn1");
    save_model(path, net);

    // truncation
    const std::string full = testsupport::read_file(path);
    testsupport::write_file(tmp.file("short.gnn1"), full.substr(0, full.size() / 2));
    testsupport::write_file(tmp.file("short.gnn1.json"),
                            testsupport::read_file(path + ".json"));
    CHECK_THROWS_AS(load_model(tmp.file("short.gnn1")), CorruptModel);

    // bad magic
    std::string mangled = full;
    mangled[0] = 'X';
    testsupport::write_file(tmp.file("bad.gnn1"), mangled);
    testsupport::write_file(tmp.file("bad.gnn1.json"), testsupport::read_file(path + ".json"));
    CHECK_THROWS_AS(load_model(tmp.file("bad.gnn1")), CorruptModel);

    // missing manifest
    testsupport::write_file(tmp.file("lone.gnn1"), full);
    CHECK_THROWS_AS(load_model(tmp.file("lone.gnn1")), CorruptModel);
}

}  // TEST_SUITE
