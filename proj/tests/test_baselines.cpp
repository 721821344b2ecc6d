#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include <doctest.h>
#include <nirsgaf/baselines.hpp>
#include <nirsgaf/rng.hpp>

using namespace nirsgaf;
using namespace nirsgaf::baselines;

namespace {

struct Clusters {
    Tensor X;
    std::vector<int> y;
};

Clusters gaussian_clusters(std::size_t per_class, double spread, uint64_t seed) {
    const double centers[3][2] = {{0.0, 0.0}, {10.0, 0.0}, {0.0, 10.0}};
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

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("logreg separates clean Gaussian clusters") {
    const Clusters c = gaussian_clusters(30, 0.5, 404);
    const LogregModel model = train_logreg(c.X, c.y);

    const std::vector<int> pred = model.predict(c.X);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < c.y.size(); ++i)
        if (pred[i] == c.y[i]) ++hits;
    CHECK(static_cast<double>(hits) / static_cast<double>(c.y.size()) >= 0.95);
}

TEST_CASE("logreg probabilities are a proper distribution") {
    const Clusters c = gaussian_clusters(10, 1.0, 7);
    const LogregModel model = train_logreg(c.X, c.y);
    const Tensor p = model.predict_proba(c.X);
    REQUIRE(p.shape == std::vector<std::size_t>{30, 3});
    for (std::size_t i = 0; i < 30; ++i) {
        double sum = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(p.at2(i, k) >= 0.0);
            CHECK(p.at2(i, k) <= 1.0);
            sum += p.at2(i, k);
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("logreg predict agrees with argmax of predict_proba") {
    const Clusters c = gaussian_clusters(15, 2.0, 99);
    const LogregModel model = train_logreg(c.X, c.y);
    const Tensor p = model.predict_proba(c.X);
    const std::vector<int> pred = model.predict(c.X);
    for (std::size_t i = 0; i < c.y.size(); ++i) {
        int best = 0;
        for (int k = 1; k < 3; ++k)
            if (p.at2(i, static_cast<std::size_t>(k)) >
                p.at2(i, static_cast<std::size_t>(best)))
                best = k;
        CHECK(pred[i] == best);
    }
}

TEST_CASE("logreg training is deterministic (no RNG involved)") {
    const Clusters c = gaussian_clusters(10, 1.5, 21);
    const LogregModel a = train_logreg(c.X, c.y);
    const LogregModel b = train_logreg(c.X, c.y);
    REQUIRE(a.w.size() == b.w.size());
    for (std::size_t i = 0; i < a.w.size(); ++i)
        CHECK(std::bit_cast<uint64_t>(a.w[i]) == std::bit_cast<uint64_t>(b.w[i]));
    for (std::size_t i = 0; i < a.b.size(); ++i)
        CHECK(std::bit_cast<uint64_t>(a.b[i]) == std::bit_cast<uint64_t>(b.b[i]));
}

TEST_CASE("knn majority vote") {
    const Tensor X({3, 1}, {0.0, 0.1, 5.0});
    const std::vector<int> y = {0, 0, 1};
    CHECK(knn_predict(X, y, {0.05}, 3) == 0);
    CHECK(knn_predict(X, y, {4.9}, 1) == 1);
}

TEST_CASE("knn vote ties fall to the smaller mean distance") {
    const Tensor X({2, 1}, {0.0, 2.0});
    const std::vector<int> y = {0, 1};
    CHECK(knn_predict(X, y, {0.9}, 2) == 0);  // dist 0.9 vs 1.1
    CHECK(knn_predict(X, y, {1.1}, 2) == 1);  // dist 1.1 vs 0.9
}

TEST_CASE("knn full ties fall to the lowest class index") {
    const Tensor X({2, 1}, {-1.0, 1.0});
    const std::vector<int> y = {2, 1};
    // both neighbours at distance 1, one vote each, equal mean distance
    CHECK(knn_predict(X, y, {0.0}, 2) == 1);
}

TEST_CASE("knn distance ties prefer the lower training index") {
    const Tensor X({3, 1}, {0.0, 0.0, 0.0});
    const std::vector<int> y = {1, 0, 0};
    CHECK(knn_predict(X, y, {0.0}, 1) == 1);  // index 0 wins the 3-way tie
}

TEST_CASE("knn vote fractions") {
    const Tensor X({3, 1}, {0.0, 1.0, 2.0});
    const std::vector<int> y = {0, 1, 1};
    const Tensor p = knn_predict_proba(X, y, Tensor({1, 1}, {1.0}), 3, 3);
    REQUIRE(p.shape == std::vector<std::size_t>{1, 3});
    CHECK(p.at2(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(p.at2(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(p.at2(0, 2) == 0.0);
}

}  // TEST_SUITE
