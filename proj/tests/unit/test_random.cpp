#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "qsgauc/error.hpp"
#include "qsgauc/random.hpp"

using namespace qsgauc;

TEST_CASE("mix64 matches the SplitMix64 reference output") {
    // First output of SplitMix64 seeded with 0 and with 1.
    CHECK(mix64(0) == 0xe220a8397b1dcdafULL);
    CHECK(mix64(1) == 0x910a2dec89025cc1ULL);
}

TEST_CASE("the engine is the standard mt19937_64") {
    RandomStream stream(5489u);
    for (int i = 0; i < 9999; ++i)
        stream.next_u64();
    CHECK(stream.next_u64() == 9981545732273789042ULL);
}

TEST_CASE("derived seeds are distinct across streams and masters") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t master = 0; master < 20; ++master)
        for (std::uint64_t it = 1; it <= 500; ++it)
            seen.insert(feature_seed(master, it));
    CHECK(seen.size() == 20u * 500u);
    CHECK(sampling_seed(3) != feature_seed(3, 0));
    CHECK(derive_seed(1, 2) != derive_seed(2, 1));
}

TEST_CASE("uniform variates stay in range") {
    RandomStream s(42);
    for (int i = 0; i < 100000; ++i) {
        const double u = s.uniform01();
        const double v = s.uniform_open01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
    }
}

TEST_CASE("gaussian moments") {
    RandomStream s(7);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = s.gaussian();
        REQUIRE(std::isfinite(g));
        sum += g;
        sq += g * g;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("index is uniform and rejects zero") {
    RandomStream s(11);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i)
        ++counts[s.index(7)];
    for (int c : counts)
        CHECK(std::abs(c - 10000) < 500);
    CHECK(s.index(1) == 0u);
    CHECK_THROWS_AS(s.index(0), InvalidParameter);
}

TEST_CASE("same seed, same sequence") {
    RandomStream a(99), b(99);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.gaussian() == b.gaussian());
        CHECK(a.index(13) == b.index(13));
    }
}
