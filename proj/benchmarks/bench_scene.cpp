#include <benchmark/benchmark.h>

#include "pointadapt/npc.hpp"
#include "pointadapt/scene.hpp"
#include "pointadapt/segmenter.hpp"

using namespace pointadapt;

static void BM_generate_scene(benchmark::State& state) {
    GeneratorSpec spec;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate_scene(spec, seed++));
    }
}
BENCHMARK(BM_generate_scene);

static void BM_calibrate_scene(benchmark::State& state) {
    GeneratorSpec spec;
    spec.points_per_instance = 3;
    const Scene scene = generate_scene(spec, 11);
    const auto params = init_segmenter(SegmenterConfig{}, 1);
    const auto features = encode(scene.image, params);
    std::vector<InstancePromptSet> prompts;
    for (const auto& inst : scene.instances) prompts.push_back(inst.prompts);
    for (auto _ : state) {
        Rng rng(3);
        benchmark::DoNotOptimize(calibrate(features, prompts, params, 0.1, 1, rng));
    }
}
BENCHMARK(BM_calibrate_scene);
