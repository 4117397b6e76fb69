#include <benchmark/benchmark.h>

#include <vector>

#include "qsgauc/data.hpp"
#include "qsgauc/oracle.hpp"
#include "qsgauc/random.hpp"
#include "qsgauc/rff.hpp"
#include "qsgauc/trainer.hpp"

namespace {

using namespace qsgauc;

std::vector<double> point(std::size_t dim) {
    std::vector<double> x(dim);
    for (std::size_t k = 0; k < dim; ++k)
        x[k] = 0.1 * double(k % 10);
    return x;
}

void BM_SampleFrequencies(benchmark::State& state) {
    const auto count = std::size_t(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(sample_frequencies(seed++, 30, count, 1.0));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleFrequencies)->Arg(64)->Arg(256)->Arg(1024);

void BM_FeatureMap(benchmark::State& state) {
    const auto count = std::size_t(state.range(0));
    const FrequencyBlock block = sample_frequencies(1, 30, count, 1.0);
    const auto x = point(30);
    std::vector<double> out(2 * count);
    for (auto _ : state) {
        feature_map_into(x, block, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FeatureMap)->Arg(64)->Arg(256)->Arg(1024);

void BM_FeatureDot(benchmark::State& state) {
    const auto count = std::size_t(state.range(0));
    const FrequencyBlock block = sample_frequencies(2, 30, count, 1.0);
    const std::vector<double> coeffs(2 * count, 0.5);
    const auto x = point(30);
    for (auto _ : state)
        benchmark::DoNotOptimize(feature_dot(coeffs, block, x));
}
BENCHMARK(BM_FeatureDot)->Arg(64)->Arg(256)->Arg(1024);

// Whole training runs: cost grows quadratically in T, so report per-T totals.
void BM_Train(benchmark::State& state) {
    SynthOptions so;
    so.n_u = 500;
    so.n_test = 1;
    so.seed = 3;
    const SemiSupervisedDataset ds = synth_gaussian(so).train;
    Hyperparams hp;
    hp.feature_count = 64;
    hp.iterations = std::size_t(state.range(0));
    hp.batch_p = hp.batch_n = hp.batch_u = 8;
    for (auto _ : state)
        benchmark::DoNotOptimize(train(ds, hp).model.size());
}
BENCHMARK(BM_Train)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_ExactSolver(benchmark::State& state) {
    SynthOptions so;
    so.n_u = std::size_t(state.range(0));
    so.n_test = 1;
    so.seed = 4;
    const SemiSupervisedDataset ds = synth_gaussian(so).train;
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_kernel_closed_form(ds, 0.5, 1.0, 1.0));
}
BENCHMARK(BM_ExactSolver)->Arg(300)->Arg(600)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
