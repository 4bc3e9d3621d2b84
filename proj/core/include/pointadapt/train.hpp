#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pointadapt/losses.hpp"
#include "pointadapt/optimizer.hpp"
#include "pointadapt/prototypes.hpp"
#include "pointadapt/rng.hpp"
#include "pointadapt/scene.hpp"
#include "pointadapt/segmenter.hpp"

namespace pointadapt {

struct TrainToggles {
    bool self_training = true;
    bool pbr = true;
    bool npc = true;
};

struct TrainConfig {
    std::uint64_t seed = 0;
    int steps = 240;
    double lr = 5e-4;
    double weight_decay = 1e-4;
    double lambda_focal = 20.0;
    double lambda_match = 0.1;
    double tau_iou = 0.1;
    int npc_k = 1;
    int bank_capacity = 512;
    int max_instances_per_image = 50;
    int points_per_instance = 1;
    int lora_rank = 4;
    TrainToggles toggles;
};

// Everything one optimization step mutates, bundled so steps can be driven
// one at a time from tests.
struct TrainState {
    SegmenterParams params;
    AdamState opt;
    MemoryBank bank;
    PrototypeSet targets;
    TrainConfig cfg;
    Rng rng_augment;
    Rng rng_npc;
};

TrainState make_train_state(const TrainConfig& cfg, SegmenterParams params,
                            PrototypeSet targets);

// One teacher/student update on one scene (batch size 1). The scene's stored
// prompts are the training prompts; instances beyond max_instances_per_image
// are dropped in stored order.
LossBreakdown train_step(TrainState& state, const Scene& scene);

struct InstanceEval {
    int scene_id = 0;
    int instance_id = 0;
    double iou = 0.0;
    double dice = 0.0;
};

// Prompt-based evaluation: per instance, points positive prompts drawn from
// the ground truth via the eval-prompts substream of seed, decoded and
// binarized at logit 0.
std::vector<InstanceEval> evaluate_per_instance(std::span<const Scene> scenes,
                                                const SegmenterParams& params,
                                                int points, std::uint64_t seed);

EvalResult summarize(std::span<const InstanceEval> rows);

struct EpochRow {
    int epoch = 0;  // 0 is the pre-training baseline
    double miou = 0.0;
    double f1 = 0.0;
    LossBreakdown mean_losses;
};

struct AdaptationResult {
    SegmenterParams params;
    PrototypeSet targets;
    std::vector<EpochRow> history;
    int train_scenes = 0;
    int eval_scenes = 0;
};

// Full self-training run: deterministic 80/20 split by ascending scene id
// (both sides at least one scene; a single-scene dataset trains and
// evaluates on that scene), target prototypes from the source weights, then
// cfg.steps single-scene updates in reshuffled epoch order. History row 0 is
// the untrained baseline; with self_training off, training is skipped and
// the result is the source model.
AdaptationResult run_adaptation(std::span<const Scene> dataset, const TrainConfig& cfg);

}  // namespace pointadapt
