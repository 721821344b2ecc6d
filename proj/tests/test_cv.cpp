#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include <doctest.h>
#include <nirsgaf/cv.hpp>
#include <nirsgaf/errors.hpp>
#include <nirsgaf/rng.hpp>

using namespace nirsgaf;
using namespace nirsgaf::eval;

namespace {

struct Clusters {
    Tensor X;
    std::vector<int> y;
};

Clusters gaussian_clusters(std::size_t per_class, double spread, uint64_t seed) {
    const double centers[3][2] = {{0.0, 0.0}, {8.0, 0.0}, {0.0, 8.0}};
    Rng rng(seed);
    Clusters c;
    c.X = Tensor({per_class * 3, 2});
    for (std::size_t i = 0; i < per_class * 3; ++i) {
        const int k = static_cast<int>(i % 3);
        c.y.push_back(k);
        c.X.at2(i, 0) = centers[k][0] + spread * rng.normal();
        c.X.at2(i, 1) = centers[k][1] + spread * rng.normal();
    }
    return c;
}

// Fixed-probability stub to pin down the pooling / bookkeeping logic.
class ConstantClassifier final : public ProbClassifier {
public:
    void fit(const Tensor&, const std::vector<int>&, uint64_t) override {}
    Tensor predict_proba(const Tensor& x) const override {
        Tensor p({x.dim(0), 3});
        for (std::size_t i = 0; i < x.dim(0); ++i) {
            p.at2(i, 0) = 0.6;
            p.at2(i, 1) = 0.3;
            p.at2(i, 2) = 0.1;
        }
        return p;
    }
};

}  // namespace

TEST_SUITE("cv") {

TEST_CASE("pooled scores land at their original sample positions") {
    const Clusters c = gaussian_clusters(5, 0.5, 17);
    const FoldPlan folds = make_folds(c.y, 3, true, 5);

    const CvResult r = run_cv_detailed(
        c.X, c.y, [] { return std::make_unique<ConstantClassifier>(); }, folds, 1);

    REQUIRE(r.scores.shape == std::vector<std::size_t>{15, 3});
    REQUIRE(r.predictions.size() == 15);
    for (std::size_t i = 0; i < 15; ++i) {
        CHECK(r.scores.at2(i, 0) == 0.6);
        CHECK(r.scores.at2(i, 1) == 0.3);
        CHECK(r.predictions[i] == 0);  // argmax of the constant distribution
    }

    // all predictions are class 0, so accuracy is the class-0 share
    CHECK(r.report.accuracy == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    REQUIRE(r.report.per_fold.size() == 3);
    std::size_t total_test = 0;
    for (const auto& f : r.report.per_fold) total_test += f.n_test;
    CHECK(total_test == 15);
}

TEST_CASE("logreg classifier generalizes across folds") {
    const Clusters c = gaussian_clusters(10, 0.8, 23);
    const FoldPlan folds = make_folds(c.y, 5, true, 9);
    const MetricsReport report = run_cv(
        c.X, c.y, [] { return std::make_unique<LogregClassifier>(); }, folds, 2);

    CHECK(report.accuracy >= 0.9);
    CHECK(report.micro_auroc >= 0.95);
    for (int k = 0; k < 3; ++k)
        CHECK(report.per_class_auroc[static_cast<std::size_t>(k)] >= 0.9);
    int64_t diag = 0, total = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            total += report.confusion[i][j];
            if (i == j) diag += report.confusion[i][j];
        }
    CHECK(total == 30);
    CHECK(diag >= 27);
}

TEST_CASE("knn classifier behaves on the same task") {
    const Clusters c = gaussian_clusters(10, 0.8, 29);
    const FoldPlan folds = make_folds(c.y, 5, true, 3);
    const MetricsReport report = run_cv(
        c.X, c.y, [] { return std::make_unique<KnnClassifier>(5, 3); }, folds, 4);
    CHECK(report.accuracy >= 0.9);
}

TEST_CASE("cv is deterministic for a fixed seed") {
    const Clusters c = gaussian_clusters(8, 1.5, 31);
    const FoldPlan folds = make_folds(c.y, 4, true, 7);
    const auto factory = [] { return std::make_unique<LogregClassifier>(); };

    const CvResult a = run_cv_detailed(c.X, c.y, factory, folds, 11);
    const CvResult b = run_cv_detailed(c.X, c.y, factory, folds, 11);
    CHECK(a.predictions == b.predictions);
    for (std::size_t i = 0; i < a.scores.size(); ++i)
        CHECK(std::bit_cast<uint64_t>(a.scores[i]) == std::bit_cast<uint64_t>(b.scores[i]));
    CHECK(a.report.accuracy == b.report.accuracy);
}

TEST_CASE("cnn classifier trains end to end on tiny images") {
    // class k = bright quadrant k of an 8x8 image
    Rng rng(63);
    const std::size_t per_class = 8, n = per_class * 3;
    Tensor x({n, 1, 8, 8});
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
        const int k = static_cast<int>(i % 3);
        y.push_back(k);
        for (std::size_t h = 0; h < 8; ++h)
            for (std::size_t w = 0; w < 8; ++w) {
                const int quadrant = (h < 4 ? 0 : 1) * 2 + (w < 4 ? 0 : 1);
                x.at4(i, 0, h, w) = (quadrant == k ? 2.0 : 0.0) + 0.1 * rng.normal();
            }
    }

    nn::NetworkSpec spec;
    spec.input_shape = {1, 8, 8};
    spec.l2_strength = 1e-4;
    nn::LayerSpec conv;
    conv.kind = "conv2d";
    conv.out_channels = 4;
    conv.kernel = 3;
    conv.relu = true;
    nn::LayerSpec pool;
    pool.kind = "maxpool";
    nn::LayerSpec flat;
    flat.kind = "flatten";
    nn::LayerSpec dense;
    dense.kind = "dense";
    dense.units = 3;
    nn::LayerSpec sm;
    sm.kind = "softmax";
    spec.layers = {conv, pool, flat, dense, sm};

    nn::TrainConfig tc;
    tc.batch_size = 8;
    tc.max_epochs = 15;
    tc.optimizer.lr = 0.01;

    CnnClassifier model(spec, tc, 4);
    model.fit(x, y, 99);
    CHECK(!model.history().epochs.empty());

    const Tensor p = model.predict_proba(x);
    REQUIRE(p.shape == std::vector<std::size_t>{n, 3});
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        std::size_t best = 0;
        for (std::size_t k = 0; k < 3; ++k) {
            sum += p.at2(i, k);
            if (p.at2(i, k) > p.at2(i, best)) best = k;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
        hits += static_cast<int>(best) == y[i];
    }
    CHECK(static_cast<double>(hits) / static_cast<double>(n) >= 0.75);
}

TEST_CASE("fold errors carry the fold index") {
    struct Exploder final : ProbClassifier {
        void fit(const Tensor&, const std::vector<int>&, uint64_t) override {
            throw NumericalInstability("boom");
        }
        Tensor predict_proba(const Tensor& x) const override { return Tensor({x.dim(0), 3}); }
    };

    const Clusters c = gaussian_clusters(4, 1.0, 3);
    const FoldPlan folds = make_folds(c.y, 2, true, 1);
    try {
        run_cv(c.X, c.y, [] { return std::make_unique<Exploder>(); }, folds, 0);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("fold 0") != std::string::npos);
        CHECK(e.error_class() == ErrorClass::numeric);
    }
}

}  // TEST_SUITE
