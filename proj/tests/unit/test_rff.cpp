#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "qsgauc/error.hpp"
#include "qsgauc/random.hpp"
#include "qsgauc/rff.hpp"
#include "support/oracles.hpp"

using namespace qsgauc;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

} // namespace

TEST_CASE("sample_frequencies is a pure function of its arguments") {
    const FrequencyBlock a = sample_frequencies(123, 5, 64, 0.7);
    const FrequencyBlock b = sample_frequencies(123, 5, 64, 0.7);
    CHECK(a.frequencies == b.frequencies);
    CHECK(sample_frequencies(124, 5, 64, 0.7).frequencies != a.frequencies);
}

TEST_CASE("frequency block shape") {
    const FrequencyBlock b = sample_frequencies(9, 3, 4, 1.0);
    CHECK(b.count == 4u);
    CHECK(b.dim == 3u);
    REQUIRE(b.frequencies.size() == 12u);
    for (double w : b.frequencies)
        CHECK(std::isfinite(w));
    for (std::size_t k = 0; k < 4; ++k) {
        const std::vector<double> row = b.row(k);
        REQUIRE(row.size() == 3u);
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(row[c] == b.at(k, c));
    }
}

TEST_CASE("frequency variance is 2 sigma") {
    std::vector<double> draws;
    for (std::uint64_t seed = 0; seed < 1000; ++seed)
        draws.push_back(sample_frequencies(seed, 1, 1, 0.5).frequencies[0]);
    const auto [mean, sd] = ref::mean_sd(draws);
    CHECK(std::abs(sd * sd - 1.0) <= 0.15);
    CHECK(std::abs(mean) < 0.15);

    const FrequencyBlock big = sample_frequencies(77, 4, 5000, 2.0);
    const auto [m2, sd2] = ref::mean_sd(big.frequencies);
    CHECK(std::abs(sd2 * sd2 - 4.0) < 0.15);
    CHECK(std::abs(m2) < 0.05);
}

TEST_CASE("sample_frequencies rejects bad parameters") {
    CHECK_THROWS_AS(sample_frequencies(0, 2, 4, 0.0), InvalidParameter);
    CHECK_THROWS_AS(sample_frequencies(0, 2, 4, -1.0), InvalidParameter);
    CHECK_THROWS_AS(sample_frequencies(0, 2, 0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(sample_frequencies(0, 0, 4, 1.0), InvalidParameter);
}

TEST_CASE("feature map at the origin") {
    const FrequencyBlock b = sample_frequencies(5, 3, 16, 1.0);
    const FeatureVector phi = feature_map(std::vector<double>(3, 0.0), b);
    REQUIRE(phi.values.size() == 32u);
    CHECK(phi.count == 16u);
    for (std::size_t k = 0; k < 16; ++k) {
        CHECK(phi.values[k] == std::sqrt(1.0 / 16.0));
        CHECK(phi.values[16 + k] == 0.0);
    }
}

TEST_CASE("feature map has unit norm and matches the naive map") {
    const PointSet xs = ref::random_points(50, 6, -3.0, 3.0, 8);
    const FrequencyBlock b = sample_frequencies(31, 6, 100, 1.3);
    for (const auto& x : xs) {
        const FeatureVector phi = feature_map(x, b);
        CHECK(std::abs(std::sqrt(dot(phi.values, phi.values)) - 1.0) <= 1e-12);
        const std::vector<double> naive = ref::naive_feature_map(x, b);
        for (std::size_t i = 0; i < naive.size(); ++i)
            CHECK(std::abs(phi.values[i] - naive[i]) <= 1e-14);
    }
}

TEST_CASE("feature_dot equals the inner product with the feature vector") {
    const PointSet xs = ref::random_points(20, 4, 0.0, 1.0, 3);
    const FrequencyBlock b = sample_frequencies(2, 4, 37, 0.8);
    const PointSet coeffs = ref::random_points(1, 74, -1.0, 1.0, 4);
    for (const auto& x : xs) {
        const FeatureVector phi = feature_map(x, b);
        std::vector<double> out(74);
        feature_map_into(x, b, out);
        CHECK(out == phi.values);
        CHECK(feature_dot(coeffs[0], b, x) ==
              doctest::Approx(dot(coeffs[0], phi.values)).epsilon(1e-13));
    }
}

TEST_CASE("dimension mismatches are rejected") {
    const FrequencyBlock b = sample_frequencies(2, 4, 8, 0.8);
    const std::vector<double> x(3, 0.0);
    CHECK_THROWS_AS(feature_map(x, b), InvalidInput);
    std::vector<double> out(16);
    CHECK_THROWS_AS(feature_map_into(x, b, out), InvalidInput);
    CHECK_THROWS_AS(feature_dot(std::vector<double>(16), b, x), InvalidInput);
    CHECK_THROWS_AS(kernel_exact(x, std::vector<double>(4), 1.0), InvalidInput);
}

TEST_CASE("kernel_exact") {
    const std::vector<double> x{0.1, 0.2, 0.3};
    CHECK(kernel_exact(x, x, 2.0) == 1.0);
    CHECK(kernel_exact(std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, 0.0}, 1.0) ==
          doctest::Approx(0.36787944117144233).epsilon(1e-15));
    const PointSet xs = ref::random_points(40, 3, -2.0, 2.0, 1);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double k = kernel_exact(xs[i], xs[i + 1], 0.6);
        CHECK(k == kernel_exact(xs[i + 1], xs[i], 0.6));
        CHECK(k > 0.0);
        CHECK(k <= 1.0);
        CHECK(k == doctest::Approx(ref::gaussian_kernel(xs[i], xs[i + 1], 0.6)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(kernel_exact(x, x, 0.0), InvalidParameter);
}

TEST_CASE("D = 2048 features approximate the kernel within 0.05") {
    const PointSet a = ref::random_points(100, 8, 0.0, 1.0, 100);
    const PointSet b = ref::random_points(100, 8, 0.0, 1.0, 200);
    const FrequencyBlock block = sample_frequencies(feature_seed(0, 1), 8, 2048, 1.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < 100; ++i) {
        const double approx = dot(feature_map(a[i], block).values, feature_map(b[i], block).values);
        worst = std::max(worst, std::abs(approx - kernel_exact(a[i], b[i], 1.0)));
    }
    CHECK(worst <= 0.05);
}

TEST_CASE("single-feature estimates are unbiased") {
    const PointSet a = ref::random_points(5, 3, 0.0, 1.0, 10);
    const PointSet b = ref::random_points(5, 3, 0.0, 1.0, 11);
    const std::size_t reps = 10000;
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::vector<double> est(reps);
        for (std::size_t r = 0; r < reps; ++r) {
            const FrequencyBlock block = sample_frequencies(derive_seed(i, r), 3, 1, 1.0);
            est[r] = dot(feature_map(a[i], block).values, feature_map(b[i], block).values);
        }
        const auto [mean, sd] = ref::mean_sd(est);
        CHECK(std::abs(mean - kernel_exact(a[i], b[i], 1.0)) <= 4.0 * sd / std::sqrt(double(reps)));
    }
}

TEST_CASE("sin_cos accuracy") {
    std::mt19937_64 engine(6);
    const double spans[] = {1e-8, 1.0, 10.0, 1e3, 5e5};
    for (double span : spans) {
        std::uniform_real_distribution<double> dist(-span, span);
        for (int i = 0; i < 20000; ++i) {
            const double x = dist(engine);
            double s = 0.0, c = 0.0;
            sin_cos(x, s, c);
            CHECK(std::abs(s - std::sin(x)) <= 2.3e-16);
            CHECK(std::abs(c - std::cos(x)) <= 2.3e-16);
        }
    }
    double s = 1.0, c = 0.0;
    sin_cos(0.0, s, c);
    CHECK(s == 0.0);
    CHECK(c == 1.0);
    sin_cos(1e300, s, c);
    CHECK(s == std::sin(1e300));
    CHECK(c == std::cos(1e300));
    sin_cos(std::numeric_limits<double>::quiet_NaN(), s, c);
    CHECK(std::isnan(s));
    CHECK(std::isnan(c));
}
