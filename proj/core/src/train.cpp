#include "pointadapt/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pointadapt/augment.hpp"
#include "pointadapt/npc.hpp"

namespace pointadapt {

namespace {

double vec_norm(const FeatureVector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

Scene truncate_instances(const Scene& scene, int max_instances) {
    Scene out = scene;
    if (static_cast<int>(out.instances.size()) > max_instances) {
        out.instances.resize(static_cast<std::size_t>(max_instances));
    }
    return out;
}

// Matching gradient routed into the teacher feature map. Only the features
// pushed this step (the tail of the queue) carry gradient; bank residents
// from earlier steps are constants.
void matching_backward(const MatchingLoss& ml, const ClusterAssignment& assignment,
                       const std::vector<std::pair<int, int>>& kept_cells,
                       std::size_t queue_size, double lambda_match, FeatureMap& dft) {
    std::vector<std::size_t> cluster_size(static_cast<std::size_t>(assignment.k), 0);
    for (int label : assignment.labels) ++cluster_size[static_cast<std::size_t>(label)];

    const std::size_t tail = std::min(kept_cells.size(), queue_size);
    for (std::size_t t = 0; t < tail; ++t) {
        const std::size_t qi = queue_size - tail + t;
        const std::size_t ci = kept_cells.size() - tail + t;
        const int label = assignment.labels[qi];
        const FeatureVector& g = ml.grad_predicted[static_cast<std::size_t>(label)];
        const double scale =
            lambda_match / static_cast<double>(cluster_size[static_cast<std::size_t>(label)]);
        const auto& [r, c] = kept_cells[ci];
        for (int ch = 0; ch < dft.channels; ++ch) {
            dft.at(ch, r, c) += scale * g[static_cast<std::size_t>(ch)];
        }
    }
}

}  // namespace

TrainState make_train_state(const TrainConfig& cfg, SegmenterParams params,
                            PrototypeSet targets) {
    if (cfg.bank_capacity < 1) {
        throw std::invalid_argument("make_train_state: bank_capacity < 1");
    }
    AdamState opt(params.cfg);
    return TrainState{
        std::move(params),
        std::move(opt),
        MemoryBank(static_cast<std::size_t>(cfg.bank_capacity)),
        std::move(targets),
        cfg,
        Rng::substream(cfg.seed, "augment"),
        Rng::substream(cfg.seed, "npc-select"),
    };
}

LossBreakdown train_step(TrainState& state, const Scene& scene) {
    const TrainConfig& cfg = state.cfg;
    const Scene working = truncate_instances(scene, cfg.max_instances_per_image);
    if (working.instances.empty()) {
        throw std::invalid_argument("train_step: scene has no instances");
    }

    const SceneView weak = augment_weak(working, state.rng_augment);
    const SceneView strong = augment_strong(working, weak.flipped, state.rng_augment);
    const std::size_t n_inst = working.instances.size();

    const FeatureMap teacher = encode(weak.image, state.params);

    std::vector<BinaryMask> pseudo;
    if (cfg.toggles.npc) {
        pseudo = calibrate(teacher, weak.prompts, state.params, cfg.tau_iou, cfg.npc_k,
                           state.rng_npc)
                     .refined;
    } else {
        pseudo = initial_masks(teacher, weak.prompts, state.params);
    }

    ParamGrads grads(state.params.cfg);
    double match_value = 0.0;
    if (cfg.toggles.pbr) {
        std::vector<PointPrompt> positives;
        for (const InstancePromptSet& set : weak.prompts) {
            positives.insert(positives.end(), set.positives.begin(), set.positives.end());
        }
        std::vector<FeatureVector> feats =
            extract_point_features(teacher, positives, state.params.cfg.stride);
        std::vector<std::pair<int, int>> kept_cells;
        for (std::size_t i = 0; i < feats.size(); ++i) {
            if (vec_norm(feats[i]) == 0.0) continue;  // no direction to cluster on
            kept_cells.emplace_back(positives[i].y / state.params.cfg.stride,
                                    positives[i].x / state.params.cfg.stride);
            state.bank.push(std::move(feats[i]));
        }
        if (state.bank.size() >= 2) {
            const std::vector<FeatureVector> bank_feats(state.bank.queue().begin(),
                                                        state.bank.queue().end());
            const ClusterAssignment assignment = finch_partition(bank_feats);
            PrototypeSet predicted;
            predicted.dim = static_cast<int>(bank_feats.front().size());
            predicted.prototypes = cluster_means(bank_feats, assignment);
            predicted.source_tag = "predicted";
            const MatchingLoss ml = matching_loss(state.targets, predicted);
            match_value = ml.value;

            FeatureMap dteacher(teacher.channels, teacher.rows, teacher.cols);
            matching_backward(ml, assignment, kept_cells, state.bank.size(),
                              cfg.lambda_match, dteacher);
            encode_backward(weak.image, state.params, dteacher, grads);
        }
    }

    const FeatureMap student = encode(strong.image, state.params);
    FeatureMap dstudent(student.channels, student.rows, student.cols);
    LossBreakdown breakdown;
    const double inv_n = 1.0 / static_cast<double>(n_inst);
    for (std::size_t i = 0; i < n_inst; ++i) {
        const std::vector<PointPrompt> prompt_seq = strong.prompts[i].all();
        const MaskLogits logits = predict_mask(student, prompt_seq, state.params);
        const LossGrad fl = focal_loss(logits, pseudo[i]);
        const LossGrad dl = dice_loss(logits, pseudo[i]);
        const LossGrad il = soft_iou_loss(logits, pseudo[i]);
        breakdown.focal += fl.value * inv_n;
        breakdown.dice += dl.value * inv_n;
        breakdown.iou += il.value * inv_n;

        MaskLogits dlogits(logits.height, logits.width);
        for (std::size_t px = 0; px < dlogits.values.size(); ++px) {
            dlogits.values[px] = (cfg.lambda_focal * fl.grad.values[px] +
                                  dl.grad.values[px] + il.grad.values[px]) *
                                 inv_n;
        }
        decode_backward(student, prompt_seq, state.params, dlogits, grads, dstudent);
    }
    encode_backward(strong.image, state.params, dstudent, grads);

    breakdown.match = match_value;
    breakdown.total = cfg.lambda_focal * breakdown.focal + breakdown.dice +
                      breakdown.iou + cfg.lambda_match * breakdown.match;

    adam_step(state.params, grads, state.opt, cfg.lr, cfg.weight_decay);
    return breakdown;
}

std::vector<InstanceEval> evaluate_per_instance(std::span<const Scene> scenes,
                                                const SegmenterParams& params,
                                                int points, std::uint64_t seed) {
    if (scenes.empty()) throw std::invalid_argument("evaluate_per_instance: no scenes");
    if (points < 1) throw std::invalid_argument("evaluate_per_instance: points < 1");
    std::vector<InstanceEval> rows;
    for (const Scene& scene : scenes) {
        const FeatureMap f = encode(scene.image, params);
        Rng rng = Rng::substream(seed, "eval-prompts", static_cast<std::uint64_t>(scene.id));
        for (const SceneInstance& inst : scene.instances) {
            const InstancePromptSet prompts = sample_prompts(inst.gt_mask, points, rng);
            const BinaryMask pred = binarize(predict_mask(f, prompts.all(), params));
            rows.push_back({scene.id, inst.id, mask_iou(pred, inst.gt_mask),
                            dice_score(pred, inst.gt_mask)});
        }
    }
    return rows;
}

EvalResult summarize(std::span<const InstanceEval> rows) {
    if (rows.empty()) throw std::invalid_argument("summarize: no rows");
    EvalResult r;
    for (const InstanceEval& row : rows) {
        r.miou += row.iou;
        r.f1 += row.dice;
    }
    r.miou /= static_cast<double>(rows.size());
    r.f1 /= static_cast<double>(rows.size());
    return r;
}

AdaptationResult run_adaptation(std::span<const Scene> dataset, const TrainConfig& cfg) {
    if (dataset.empty()) throw std::invalid_argument("run_adaptation: empty dataset");
    if (cfg.steps < 0) throw std::invalid_argument("run_adaptation: negative steps");

    std::vector<Scene> scenes(dataset.begin(), dataset.end());
    std::sort(scenes.begin(), scenes.end(),
              [](const Scene& a, const Scene& b) { return a.id < b.id; });

    std::size_t n_train = scenes.size();
    if (scenes.size() > 1) {
        n_train = std::max<std::size_t>(1, scenes.size() * 8 / 10);
        if (n_train == scenes.size()) n_train = scenes.size() - 1;
    }

    std::vector<Scene> train(scenes.begin(), scenes.begin() + n_train);
    const std::span<const Scene> heldout =
        scenes.size() > 1 ? std::span<const Scene>(scenes).subspan(n_train)
                          : std::span<const Scene>(scenes);

    // Training prompts are redrawn from the config seed so the stored
    // (generation-time) prompts never leak the generator's randomness into
    // the run.
    for (Scene& scene : train) {
        Rng rng = Rng::substream(cfg.seed, "train-prompts",
                                 static_cast<std::uint64_t>(scene.id));
        for (SceneInstance& inst : scene.instances) {
            inst.prompts = sample_prompts(inst.gt_mask, cfg.points_per_instance, rng);
            inst.prompts.instance_id = inst.id;
        }
    }

    SegmenterConfig scfg;
    scfg.lora_rank = cfg.lora_rank;
    SegmenterParams params = init_segmenter(scfg, cfg.seed);
    PrototypeSet targets = build_target_prototypes(train, params);

    AdaptationResult result;
    result.train_scenes = static_cast<int>(train.size());
    result.eval_scenes = static_cast<int>(heldout.size());

    const EvalResult baseline = summarize(
        evaluate_per_instance(heldout, params, cfg.points_per_instance, cfg.seed));
    result.history.push_back({0, baseline.miou, baseline.f1, LossBreakdown{}});

    if (!cfg.toggles.self_training || cfg.steps == 0) {
        result.params = std::move(params);
        result.targets = std::move(targets);
        return result;
    }

    TrainState state = make_train_state(cfg, std::move(params), std::move(targets));

    int step = 0;
    int epoch = 0;
    while (step < cfg.steps) {
        ++epoch;
        std::vector<std::size_t> order(train.size());
        std::iota(order.begin(), order.end(), 0);
        Rng order_rng =
            Rng::substream(cfg.seed, "data-order", static_cast<std::uint64_t>(epoch));
        order_rng.shuffle(order);

        LossBreakdown epoch_mean;
        int epoch_steps = 0;
        for (std::size_t idx : order) {
            if (step >= cfg.steps) break;
            const LossBreakdown b = train_step(state, train[idx]);
            epoch_mean.focal += b.focal;
            epoch_mean.dice += b.dice;
            epoch_mean.iou += b.iou;
            epoch_mean.match += b.match;
            epoch_mean.total += b.total;
            ++step;
            ++epoch_steps;
        }
        const double inv = 1.0 / static_cast<double>(epoch_steps);
        epoch_mean.focal *= inv;
        epoch_mean.dice *= inv;
        epoch_mean.iou *= inv;
        epoch_mean.match *= inv;
        epoch_mean.total *= inv;

        const EvalResult ev = summarize(evaluate_per_instance(
            heldout, state.params, cfg.points_per_instance, cfg.seed));
        result.history.push_back({epoch, ev.miou, ev.f1, epoch_mean});
    }

    result.params = std::move(state.params);
    result.targets = std::move(state.targets);
    return result;
}

}  // namespace pointadapt
