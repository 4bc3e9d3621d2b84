#include "pointadapt/npc.hpp"

#include <stdexcept>

namespace pointadapt {

std::vector<BinaryMask> initial_masks(const FeatureMap& features,
                                      std::span<const InstancePromptSet> prompts,
                                      const SegmenterParams& params) {
    std::vector<BinaryMask> masks;
    masks.reserve(prompts.size());
    for (const InstancePromptSet& set : prompts) {
        masks.push_back(binarize(predict_mask(features, set.all(), params)));
    }
    return masks;
}

std::vector<std::vector<PointPrompt>> candidate_negatives(
    const IoUMatrix& overlap, std::span<const InstancePromptSet> prompts, double tau) {
    if (overlap.n != static_cast<int>(prompts.size())) {
        throw std::invalid_argument("candidate_negatives: matrix/prompt count mismatch");
    }
    if (tau < 0.0) throw std::invalid_argument("candidate_negatives: negative tau");
    std::vector<std::vector<PointPrompt>> candidates(prompts.size());
    for (int i = 0; i < overlap.n; ++i) {
        for (int j = 0; j < overlap.n; ++j) {
            if (j == i || overlap.at(i, j) < tau) continue;
            for (const PointPrompt& p : prompts[j].positives) {
                candidates[i].push_back(p);
            }
        }
    }
    return candidates;
}

std::vector<PointPrompt> select_negatives(const std::vector<PointPrompt>& candidates,
                                          int k, Rng& rng) {
    if (k < 0) throw std::invalid_argument("select_negatives: negative k");
    std::vector<PointPrompt> out;
    for (std::size_t idx : rng.sample_indices(candidates.size(), static_cast<std::size_t>(k))) {
        PointPrompt p = candidates[idx];
        p.polarity = Polarity::negative;
        out.push_back(p);
    }
    return out;
}

CalibrationResult calibrate(const FeatureMap& features,
                            std::span<const InstancePromptSet> prompts,
                            const SegmenterParams& params, double tau, int k, Rng& rng) {
    CalibrationResult result;
    result.initial = initial_masks(features, prompts, params);
    const IoUMatrix overlap = iou_matrix(result.initial);
    const auto candidates = candidate_negatives(overlap, prompts, tau);

    result.refined.reserve(prompts.size());
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        result.candidate_counts.push_back(candidates[i].size());
        if (candidates[i].empty()) {
            result.selected_negatives.emplace_back();
            result.refined.push_back(result.initial[i]);
            continue;
        }
        std::vector<PointPrompt> negatives = select_negatives(candidates[i], k, rng);
        std::vector<PointPrompt> combined = prompts[i].positives;
        combined.insert(combined.end(), negatives.begin(), negatives.end());
        result.refined.push_back(binarize(predict_mask(features, combined, params)));
        result.selected_negatives.push_back(std::move(negatives));
    }
    return result;
}

namespace {

struct OverlapAccum {
    double sum = 0.0;
    std::size_t pairs = 0;

    void add(const IoUMatrix& m) {
        for (int i = 0; i < m.n; ++i) {
            for (int j = 0; j < m.n; ++j) {
                if (i == j) continue;
                sum += m.at(i, j);
                ++pairs;
            }
        }
    }
    double mean() const { return pairs == 0 ? 0.0 : sum / static_cast<double>(pairs); }
};

}  // namespace

DatasetCalibration calibrate_dataset(std::span<const Scene> scenes,
                                     const SegmenterParams& params, double tau, int k,
                                     std::uint64_t seed) {
    if (scenes.empty()) throw std::invalid_argument("calibrate_dataset: no scenes");
    DatasetCalibration agg;
    double iou_init = 0.0, iou_ref = 0.0, dice_init = 0.0, dice_ref = 0.0;
    OverlapAccum ov_init, ov_ref;

    for (const Scene& scene : scenes) {
        const FeatureMap f = encode(scene.image, params);
        std::vector<InstancePromptSet> prompts;
        for (const SceneInstance& inst : scene.instances) prompts.push_back(inst.prompts);
        Rng rng = Rng::substream(seed, "npc-select", static_cast<std::uint64_t>(scene.id));
        const CalibrationResult cal = calibrate(f, prompts, params, tau, k, rng);

        for (std::size_t i = 0; i < scene.instances.size(); ++i) {
            const BinaryMask& gt = scene.instances[i].gt_mask;
            iou_init += mask_iou(cal.initial[i], gt);
            iou_ref += mask_iou(cal.refined[i], gt);
            dice_init += dice_score(cal.initial[i], gt);
            dice_ref += dice_score(cal.refined[i], gt);
            ++agg.instances;
        }
        if (scene.instances.size() > 1) {
            ov_init.add(iou_matrix(cal.initial));
            ov_ref.add(iou_matrix(cal.refined));
        }
    }

    const double inv = 1.0 / static_cast<double>(agg.instances);
    agg.miou_initial = iou_init * inv;
    agg.miou_refined = iou_ref * inv;
    agg.f1_initial = dice_init * inv;
    agg.f1_refined = dice_ref * inv;
    agg.mean_overlap_initial = ov_init.mean();
    agg.mean_overlap_refined = ov_ref.mean();
    return agg;
}

}  // namespace pointadapt
