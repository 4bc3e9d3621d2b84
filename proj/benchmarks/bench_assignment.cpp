#include <benchmark/benchmark.h>

#include "pointadapt/assignment.hpp"
#include "pointadapt/rng.hpp"

using namespace pointadapt;

static DistanceMatrix random_matrix(int n, std::uint64_t seed) {
    Rng rng(seed);
    DistanceMatrix d(n, n);
    for (auto& v : d.entries) v = rng.uniform(0.0, 2.0);
    return d;
}

static void BM_hungarian(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto d = random_matrix(n, 7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(hungarian_match(d));
    }
    state.SetComplexityN(n);
}
BENCHMARK(BM_hungarian)->RangeMultiplier(2)->Range(4, 64)->Complexity();

static void BM_hungarian_rectangular(benchmark::State& state) {
    Rng rng(9);
    DistanceMatrix d(8, 64);
    for (auto& v : d.entries) v = rng.uniform(0.0, 2.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(hungarian_match(d));
    }
}
BENCHMARK(BM_hungarian_rectangular);
