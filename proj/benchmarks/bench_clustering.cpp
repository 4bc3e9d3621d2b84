#include <benchmark/benchmark.h>

#include <vector>

#include "pointadapt/clustering.hpp"
#include "pointadapt/rng.hpp"

using namespace pointadapt;

static std::vector<FeatureVector> random_features(int n, int dim, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<FeatureVector> f(n, FeatureVector(dim));
    for (auto& v : f) {
        double norm2 = 0.0;
        for (auto& x : v) {
            x = rng.normal();
            norm2 += x * x;
        }
        if (norm2 < 1e-9) v[0] = 1.0;
    }
    return f;
}

static void BM_finch(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto f = random_features(n, 16, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(finch_partition(f));
    }
    state.SetComplexityN(n);
}
BENCHMARK(BM_finch)->RangeMultiplier(2)->Range(16, 512)->Complexity();

static void BM_first_neighbors(benchmark::State& state) {
    const auto f = random_features(static_cast<int>(state.range(0)), 16, 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(first_neighbors(f));
    }
}
BENCHMARK(BM_first_neighbors)->Arg(128)->Arg(512);
