#include <doctest.h>

#include <atomic>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "qsgauc/error.hpp"
#include "qsgauc/eval.hpp"
#include "support/oracles.hpp"

using namespace qsgauc;

namespace {

Hyperparams cheap_hp() {
    Hyperparams hp;
    hp.feature_count = 16;
    hp.iterations = 60;
    hp.batch_p = hp.batch_n = hp.batch_u = 4;
    return hp;
}

SemiSupervisedDataset synth_train(double separation, std::size_t n, std::uint64_t seed) {
    SynthOptions o;
    o.n_p = o.n_n = n;
    o.n_u = 4 * n;
    o.n_test = 10;
    o.separation = separation;
    o.seed = seed;
    return synth_gaussian(o).train;
}

} // namespace

TEST_CASE("auc examples") {
    CHECK(auc(std::vector<double>{2, 3, 0, 1}, std::vector<int>{1, 1, -1, -1}) == 1.0);
    CHECK(auc(std::vector<double>(6, 0.4), std::vector<int>{1, -1, 1, -1, 1, -1}) == 0.5);
    CHECK(auc(std::vector<double>{1, 3, 2, 2}, std::vector<int>{1, 1, -1, -1}) == 0.5);
    CHECK_THROWS_AS(auc(std::vector<double>{1, 2}, std::vector<int>{1, 1}), InvalidInput);
    CHECK_THROWS_AS(auc(std::vector<double>{1, 2}, std::vector<int>{1}), InvalidInput);
}

TEST_CASE("auc matches brute-force pair counting") {
    std::mt19937_64 engine(1);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t m = 2 + engine() % 199;
        std::vector<double> scores(m);
        std::vector<int> labels(m);
        const int levels = trial % 2 ? 5 : 1000000;
        for (std::size_t i = 0; i < m; ++i) {
            scores[i] = double(engine() % levels) / 7.0;
            labels[i] = engine() % 2 ? 1 : -1;
        }
        labels[0] = 1;
        labels[1] = -1;
        CHECK(auc(scores, labels) == doctest::Approx(ref::brute_auc(scores, labels)).epsilon(1e-14));
    }
}

TEST_CASE("auc invariances") {
    std::mt19937_64 engine(2);
    std::uniform_real_distribution<double> dist(-3, 3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> s(80), t(80), neg(80);
        std::vector<int> y(80);
        for (std::size_t i = 0; i < 80; ++i) {
            s[i] = dist(engine);
            t[i] = std::exp(2.0 * s[i]) + 5.0;
            neg[i] = -s[i];
            y[i] = i % 3 == 0 ? 1 : -1;
        }
        CHECK(auc(s, y) == auc(t, y));
        CHECK(auc(s, y) + auc(neg, y) == 1.0);
    }
}

TEST_CASE("cv grid defaults and validation") {
    const CvGrid g = CvGrid::defaults();
    CHECK(g.lambda_values.size() == 7u);
    CHECK(g.lambda_values.front() == 0.125);
    CHECK(g.lambda_values.back() == 8.0);
    CHECK(g.sigma_values == g.lambda_values);
    REQUIRE(g.gamma_values.size() == 11u);
    CHECK(g.gamma_values[3] == doctest::Approx(0.3));
    CHECK(g.gamma_values.back() == 1.0);
    CHECK(g.folds == 5u);
    CHECK_NOTHROW(g.validate());

    CvGrid bad = g;
    bad.folds = 1;
    CHECK_THROWS_AS(bad.validate(), InvalidParameter);
    bad = g;
    bad.gamma_values = {1.2};
    CHECK_THROWS_AS(bad.validate(), InvalidParameter);
    bad = g;
    bad.sigma_values.clear();
    CHECK_THROWS_AS(bad.validate(), InvalidParameter);
    bad = g;
    bad.lambda_values = {0.0};
    CHECK_THROWS_AS(bad.validate(), InvalidParameter);
}

TEST_CASE("cross-validation on a single cell") {
    const SemiSupervisedDataset ds = synth_train(2.0, 20, 3);
    CvGrid grid{{0.5}, {1.0}, {0.3}, 4};
    Hyperparams base = cheap_hp();
    const CvResult r = cross_validate(ds, grid, base, 7);
    REQUIRE(r.cells.size() == 1u);
    CHECK(r.best.lambda == 0.5);
    CHECK(r.best.sigma == 1.0);
    CHECK(r.best.gamma == 0.3);
    CHECK(r.best.theta * r.best.lambda == doctest::Approx(base.theta * base.lambda));
    CHECK(r.cells[0].folds_used == 4u);

    std::ostringstream out;
    r.write(out, false);
    std::istringstream lines(out.str());
    std::string line;
    std::size_t rows = 0;
    while (std::getline(lines, line))
        ++rows;
    CHECK(rows == 2u);
}

TEST_CASE("cross-validation determinism and duplicate cells") {
    const SemiSupervisedDataset ds = synth_train(2.0, 15, 4);
    CvGrid grid{{1.0, 1.0}, {0.5, 2.0}, {0.0, 0.5}, 3};
    const CvResult a = cross_validate(ds, grid, cheap_hp(), 11);
    const CvResult b = cross_validate(ds, grid, cheap_hp(), 11, {}, 3);
    REQUIRE(a.cells.size() == 8u);
    for (std::size_t c = 0; c < 8; ++c)
        CHECK(a.cells[c].mean_auc == b.cells[c].mean_auc);
    for (std::size_t c = 0; c < 4; ++c)
        CHECK(a.cells[c].mean_auc == a.cells[c + 4].mean_auc);
    std::ostringstream wa, wb;
    a.write(wa, false);
    b.write(wb, false);
    CHECK(wa.str() == wb.str());
}

TEST_CASE("cross-validation tie-break prefers strong regularization") {
    const SemiSupervisedDataset ds = synth_train(40.0, 10, 5);
    CvGrid grid{{0.5, 2.0}, {0.25, 1.0}, {0.2, 0.8}, 2};
    const CvResult r = cross_validate(ds, grid, cheap_hp(), 3);
    for (const auto& cell : r.cells)
        REQUIRE(cell.mean_auc == 1.0);
    CHECK(r.best.lambda == 2.0);
    CHECK(r.best.sigma == 1.0);
    CHECK(r.best.gamma == 0.2);
}

TEST_CASE("cross-validation selects a useful sigma") {
    const SemiSupervisedDataset ds = synth_train(4.0, 40, 6);
    CvGrid grid{{1.0}, {0.125, 1.0, 64.0}, {0.5}, 5};
    Hyperparams base = cheap_hp();
    base.iterations = 150;
    const CvResult r = cross_validate(ds, grid, base, 9);
    double worst = 1.0, chosen = 0.0;
    for (const auto& cell : r.cells) {
        worst = std::min(worst, cell.mean_auc);
        if (cell.sigma == r.best.sigma)
            chosen = cell.mean_auc;
    }
    CHECK(chosen >= worst + 0.01);
}

TEST_CASE("degenerate folds") {
    SemiSupervisedDataset ds = synth_train(2.0, 10, 7);
    ds.positives.resize(2);
    CvGrid grid{{1.0}, {1.0}, {0.5}, 3};
    const CvResult r = cross_validate(ds, grid, cheap_hp(), 1);
    CHECK(r.cells[0].folds_used == 2u);

    ds.positives.resize(1);
    grid.folds = 2;
    CHECK_THROWS_AS(cross_validate(ds, grid, cheap_hp(), 1), InvalidInput);

    ds.positives.clear();
    ds.negatives.resize(1);
    grid.folds = 5;
    CHECK_THROWS_AS(cross_validate(ds, grid, cheap_hp(), 1), InvalidInput);
}

TEST_CASE("log-spaced iterations") {
    const auto it = log_spaced_iterations(100, 10000, 5);
    REQUIRE(it.size() == 11u);
    CHECK(it.front() == 100u);
    CHECK(it[5] == 1000u);
    CHECK(it.back() == 10000u);
    for (std::size_t i = 1; i < it.size(); ++i)
        CHECK(it[i] > it[i - 1]);
    CHECK(log_spaced_iterations(7, 7, 3) == std::vector<std::size_t>{7});
    const auto dense = log_spaced_iterations(1, 10, 50);
    CHECK(dense.size() == 10u);
    CHECK_THROWS_AS(log_spaced_iterations(0, 10, 2), InvalidParameter);
    CHECK_THROWS_AS(log_spaced_iterations(20, 10, 2), InvalidParameter);
}

TEST_CASE("log-log fit recovers a power law") {
    const std::vector<std::size_t> x{10, 20, 50, 100, 1000};
    std::vector<double> y;
    for (std::size_t v : x)
        y.push_back(3.0 * std::pow(double(v), -1.25));
    const auto [slope, intercept] = loglog_fit(x, y);
    CHECK(slope == doctest::Approx(-1.25).epsilon(1e-12));
    CHECK(intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("convergence study with T = 0") {
    const SemiSupervisedDataset ds = synth_train(2.0, 5, 8);
    Hyperparams hp = cheap_hp();
    hp.iterations = 0;
    KernelModel zero;
    zero.support = {{0.0, 0.0}};
    zero.beta = {0.0};
    const PointSet probes = ref::random_points(4, 2, 0.0, 1.0, 1);
    const ConvergenceReport r = convergence_study(ds, hp, zero, probes, 3);
    REQUIRE(r.iterations == std::vector<std::size_t>{0});
    CHECK(r.mse_vs_fstar[0] == 0.0);
    CHECK_FALSE(r.slope_defined);
    CHECK(std::isnan(r.fitted_slope));

    KernelModel one = zero;
    one.beta = {1.0};
    const ConvergenceReport s = convergence_study(ds, hp, one, probes, 2);
    double mean_sq = 0.0;
    for (const auto& p : probes)
        mean_sq += one.predict(p) * one.predict(p) / 4.0;
    CHECK(s.mse_vs_fstar[0] == doctest::Approx(mean_sq).epsilon(1e-14));

    std::ostringstream out;
    r.write(out);
    CHECK(out.str() == "iteration\tmse_vs_fstar\n0\t0\n# slope\tnan\n# intercept\tnan\n");
}

TEST_CASE("convergence study bookkeeping") {
    const SemiSupervisedDataset ds = synth_train(2.0, 10, 9);
    Hyperparams hp = cheap_hp();
    hp.iterations = 100;
    const KernelModel fstar = solve_kernel_closed_form(ds, hp.gamma, hp.lambda, hp.sigma);
    const PointSet probes = ref::random_points(5, 2, -1.0, 1.0, 2);
    ConvergenceOptions opt;
    opt.t_min = 10;
    opt.points_per_decade = 4;
    const ConvergenceReport a = convergence_study(ds, hp, fstar, probes, 3, opt);
    opt.threads = 3;
    const ConvergenceReport b = convergence_study(ds, hp, fstar, probes, 3, opt);
    CHECK(a.iterations == log_spaced_iterations(10, 100, 4));
    CHECK(a.mse_vs_fstar == b.mse_vs_fstar);
    CHECK(a.mse_per_repeat.size() == 3u);
    CHECK(a.slope_defined);

    // Repeat 1 is a plain training run under its derived seed.
    Hyperparams r1 = hp;
    r1.master_seed = derive_seed(hp.master_seed, 1);
    r1.iterations = a.iterations[2];
    const CoefficientHistory m = train(ds, r1).model;
    double mse = 0.0;
    for (const auto& p : probes) {
        const double d = predict(m, p) - fstar.predict(p);
        mse += d * d / 5.0;
    }
    CHECK(a.mse_per_repeat[1][2] == doctest::Approx(mse).epsilon(1e-12));

    const ConvergenceReport first = first_repeats(a, 1);
    CHECK(first.mse_vs_fstar == a.mse_per_repeat[0]);
    CHECK_THROWS_AS(first_repeats(a, 4), InvalidParameter);
    CHECK_THROWS_AS(convergence_study(ds, hp, fstar, {}, 1), InvalidInput);
    CHECK_THROWS_AS(convergence_study(ds, hp, fstar, probes, 0), InvalidParameter);
}

TEST_CASE("parallel_for runs every index and propagates failures") {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, 4, [&](std::size_t i) { hits[i] += 1; });
    for (auto& h : hits)
        CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::size_t i) {
                                     if (i == 6)
                                         throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
    parallel_for(0, 2, [](std::size_t) { FAIL("no work expected"); });
}
