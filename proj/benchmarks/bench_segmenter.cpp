#include <benchmark/benchmark.h>

#include <vector>

#include "pointadapt/rng.hpp"
#include "pointadapt/scene.hpp"
#include "pointadapt/segmenter.hpp"

using namespace pointadapt;

namespace {

struct Setup {
    Scene scene;
    SegmenterParams params;
    FeatureMap features;
    std::vector<PointPrompt> prompts;

    Setup()
        : scene(generate_scene(GeneratorSpec{}, 7)),
          params(init_segmenter(SegmenterConfig{}, 1)),
          features(encode(scene.image, params)) {
        const auto& p = scene.instances[0].prompts.positives;
        prompts.assign(p.begin(), p.end());
    }
};

Setup& setup() {
    static Setup s;
    return s;
}

}  // namespace

static void BM_encode(benchmark::State& state) {
    auto& s = setup();
    for (auto _ : state) {
        benchmark::DoNotOptimize(encode(s.scene.image, s.params));
    }
}
BENCHMARK(BM_encode);

static void BM_predict_mask(benchmark::State& state) {
    auto& s = setup();
    for (auto _ : state) {
        benchmark::DoNotOptimize(predict_mask(s.features, s.prompts, s.params));
    }
}
BENCHMARK(BM_predict_mask);

static void BM_backward(benchmark::State& state) {
    auto& s = setup();
    std::vector<std::vector<PointPrompt>> prompts = {s.prompts};
    MaskLogits dl(s.scene.image.height, s.scene.image.width);
    Rng rng(5);
    for (auto& v : dl.values) v = rng.uniform(-1e-3, 1e-3);
    std::vector<MaskLogits> dlogits = {dl};
    for (auto _ : state) {
        benchmark::DoNotOptimize(backward(s.scene.image, s.params, prompts, dlogits));
    }
}
BENCHMARK(BM_backward);
