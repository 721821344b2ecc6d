#include <bit>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include <doctest.h>
#include <nirsgaf/errors.hpp>
#include <nirsgaf/gaf.hpp>
#include <nirsgaf/rng.hpp>

#include "test_support.hpp"

using namespace nirsgaf;
using namespace nirsgaf::gaf;
using testsupport::TempDir;

namespace {

std::vector<double> random_series(Rng& rng, std::size_t n) {
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal() * 3.0 + rng.uniform(-2.0, 2.0);
    return x;
}

}  // namespace

TEST_SUITE("gaf") {

TEST_CASE("rescale maps extremes to the interval ends") {
    const RescaledSeries s = rescale({2.0, 4.0});
    CHECK(s.values == std::vector<double>{-1.0, 1.0});
    CHECK(s.original_min == 2.0);
    CHECK(s.original_max == 4.0);

    const RescaledSeries mid = rescale({0.0, 5.0, 10.0});
    CHECK(mid.values[0] == -1.0);
    CHECK(std::abs(mid.values[1]) < 1e-15);
    CHECK(mid.values[2] == 1.0);
}

TEST_CASE("constant series rescale to all zeros") {
    const RescaledSeries s = rescale({5.0, 5.0, 5.0});
    CHECK(s.values == std::vector<double>(3, 0.0));
}

TEST_CASE("rescale is invariant under positive affine maps") {
    Rng rng(21);
    const std::vector<double> x = random_series(rng, 40);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = 2.5 * x[i] - 7.0;

    const RescaledSeries sx = rescale(x);
    const RescaledSeries sy = rescale(y);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(sx.values[i] == doctest::Approx(sy.values[i]).epsilon(1e-12));
}

TEST_CASE("rescale rejects empty and non-finite input") {
    CHECK_THROWS_AS(rescale({}), EmptySeries);
    try {
        rescale({1.0, std::nan(""), 2.0});
        FAIL("expected NonFiniteValue");
    } catch (const NonFiniteValue& e) {
        CHECK(e.index == 1);
    }
}

TEST_CASE("polar angles of [-1, 0, 1]") {
    RescaledSeries s;
    s.values = {-1.0, 0.0, 1.0};
    const std::vector<double> phi = polar_angles(s);
    CHECK(phi[0] == doctest::Approx(M_PI).epsilon(1e-15));
    CHECK(phi[1] == doctest::Approx(M_PI / 2.0).epsilon(1e-15));
    CHECK(phi[2] == 0.0);
}

TEST_CASE("GASF / GADF of the canonical three-point series") {
    RescaledSeries s;
    s.values = {-1.0, 0.0, 1.0};

    const GafImage sum = gasf(s);
    REQUIRE(sum.n == 3);
    const double expect_sum[3][3] = {{1, 0, -1}, {0, -1, 0}, {-1, 0, 1}};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(sum.at(i, j) == doctest::Approx(expect_sum[i][j]).epsilon(1e-12));

    const GafImage diff = gadf(s);
    const double expect_diff[3][3] = {{0, 1, 0}, {-1, 0, 1}, {0, -1, 0}};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(diff.at(i, j) == doctest::Approx(expect_diff[i][j]).epsilon(1e-12));
}

TEST_CASE("GASF identities on random series") {
    Rng rng(1234);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.below(63);
        const RescaledSeries s = rescale(random_series(rng, n));
        const GafImage img = gasf(s);
        REQUIRE(img.n == n);

        const std::vector<double> phi = polar_angles(s);
        for (std::size_t i = 0; i < n; ++i) {
            // diagonal: cos(2 phi_i) = 2 x_i^2 - 1
            const double x = s.values[i];
            CHECK(std::abs(img.at(i, i) - (2.0 * x * x - 1.0)) < 1e-12);
            for (std::size_t j = 0; j <= i; ++j) {
                // exact symmetry (both triangles from one computation)
                CHECK(img.at(i, j) == img.at(j, i));
                CHECK(img.at(i, j) >= -1.0);
                CHECK(img.at(i, j) <= 1.0);
                // cos form vs product form
                const double xi = s.values[i], xj = s.values[j];
                const double product =
                    xi * xj - std::sqrt(1.0 - xi * xi) * std::sqrt(1.0 - xj * xj);
                CHECK(std::abs(std::cos(phi[i] + phi[j]) - product) < 1e-12);
                CHECK(std::abs(img.at(i, j) - product) < 1e-12);
            }
        }
    }
}

TEST_CASE("GADF is exactly antisymmetric with a zero diagonal") {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.below(40);
        const GafImage img = gadf(rescale(random_series(rng, n)));
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(img.at(i, i) == 0.0);
            for (std::size_t j = 0; j < i; ++j) CHECK(img.at(i, j) == -img.at(j, i));
        }
    }
}

TEST_CASE("GASF of a constant series is uniformly -1") {
    const GafImage img = gasf(rescale({3.0, 3.0, 3.0, 3.0}));
    for (double v : img.matrix) CHECK(v == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("PAA segment means") {
    CHECK(paa_downsample({1, 1, 2, 2}, 2) == std::vector<double>{1.0, 2.0});
    CHECK(paa_downsample({1, 2, 3, 4, 5, 6}, 3) == std::vector<double>{1.5, 3.5, 5.5});

    // n = 5, m = 2: segments [0, 2) and [2, 5)
    const std::vector<double> out = paa_downsample({1, 3, 2, 4, 9}, 2);
    REQUIRE(out.size() == 2);
    CHECK(out[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("PAA with target n is the identity") {
    Rng rng(8);
    const std::vector<double> x = random_series(rng, 17);
    const std::vector<double> out = paa_downsample(x, 17);
    REQUIRE(out.size() == x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(std::bit_cast<uint64_t>(out[i]) == std::bit_cast<uint64_t>(x[i]));
}

TEST_CASE("PAA preserves the global mean") {
    // equal segment lengths => mean of segment means equals the series mean
    Rng rng(9);
    std::vector<double> x = random_series(rng, 64);
    const std::vector<double> out = paa_downsample(x, 16);
    double mx = 0, mo = 0;
    for (double v : x) mx += v;
    for (double v : out) mo += v;
    CHECK(std::abs(mx / 64.0 - mo / 16.0) < 1e-12);
}

TEST_CASE("PAA rejects bad targets") {
    CHECK_THROWS_AS(paa_downsample({1, 2, 3}, 4), TargetTooLarge);
    CHECK_THROWS_AS(paa_downsample({1, 2, 3}, 0), ConfigError);
}

TEST_CASE("kind names round trip") {
    CHECK(std::string(gaf_kind_name(GafKind::GASF)) == "gasf");
    CHECK(std::string(gaf_kind_name(GafKind::GADF)) == "gadf");
    CHECK(gaf_kind_from_name("gasf") == GafKind::GASF);
    CHECK(gaf_kind_from_name("GADF") == GafKind::GADF);
    CHECK_THROWS_AS(gaf_kind_from_name("giraffe"), ConfigError);
}

TEST_CASE("export_image writes a readable CSV and a correct PGM") {
    TempDir tmp;
    RescaledSeries s;
    s.values = {-1.0, 0.0, 1.0};
    GafImage img = gasf(s);
    img.channel_id = "ch01";
    img.task = Task::MA;
    export_image(img, tmp.file("img.csv"), tmp.file("img.pgm"));

    const GafImage back = import_image_csv(tmp.file("img.csv"));
    REQUIRE(back.n == 3);
    for (std::size_t i = 0; i < 9; ++i)
        CHECK(std::bit_cast<uint64_t>(back.matrix[i]) == std::bit_cast<uint64_t>(img.matrix[i]));

    // PGM: [-1, 1] -> [0, 255] with half-up rounding, so -1 -> 0, 0 -> 128,
    // 1 -> 255. Parse by tokens to stay independent of line layout.
    std::istringstream pgm(testsupport::read_file(tmp.file("img.pgm")));
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    pgm >> magic >> w >> h >> maxval;
    CHECK(magic == "P2");
    CHECK(w == 3);
    CHECK(h == 3);
    CHECK(maxval == 255);
    const int expected[9] = {255, 128, 0, 128, 0, 128, 0, 128, 255};
    for (int i = 0; i < 9; ++i) {
        int v = -1;
        pgm >> v;
        CHECK(v == expected[i]);
    }
}

TEST_CASE("import_image_csv round trips a larger random image") {
    TempDir tmp;
    Rng rng(55);
    GafImage img = gasf(rescale(random_series(rng, 32)));
    export_image(img, tmp.file("big.csv"), tmp.file("big.pgm"));
    const GafImage back = import_image_csv(tmp.file("big.csv"));
    REQUIRE(back.n == 32);
    for (std::size_t i = 0; i < back.matrix.size(); ++i)
        CHECK(std::bit_cast<uint64_t>(back.matrix[i]) == std::bit_cast<uint64_t>(img.matrix[i]));
}

}  // TEST_SUITE
