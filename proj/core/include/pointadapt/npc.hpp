#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pointadapt/mask.hpp"
#include "pointadapt/rng.hpp"
#include "pointadapt/scene.hpp"
#include "pointadapt/segmenter.hpp"

namespace pointadapt {

// Decode+binarize every instance with its current prompt set.
std::vector<BinaryMask> initial_masks(const FeatureMap& features,
                                      std::span<const InstancePromptSet> prompts,
                                      const SegmenterParams& params);

// For each instance i: the positive prompts of every other instance j whose
// initial masks overlap with IoU >= tau, concatenated in (j, prompt) order.
std::vector<std::vector<PointPrompt>> candidate_negatives(
    const IoUMatrix& overlap, std::span<const InstancePromptSet> prompts, double tau);

// Uniform k-subset of the candidates, kept in candidate order and flipped to
// negative polarity.
std::vector<PointPrompt> select_negatives(const std::vector<PointPrompt>& candidates,
                                          int k, Rng& rng);

struct CalibrationResult {
    std::vector<BinaryMask> initial;
    std::vector<BinaryMask> refined;
    std::vector<std::size_t> candidate_counts;
    std::vector<std::vector<PointPrompt>> selected_negatives;
};

// Full calibration pass. Instances without overlap candidates keep their
// original prompts, so their refined mask is the initial mask bit for bit.
CalibrationResult calibrate(const FeatureMap& features,
                            std::span<const InstancePromptSet> prompts,
                            const SegmenterParams& params, double tau, int k, Rng& rng);

struct DatasetCalibration {
    double miou_initial = 0.0;
    double miou_refined = 0.0;
    double f1_initial = 0.0;
    double f1_refined = 0.0;
    double mean_overlap_initial = 0.0;  // mean off-diagonal pairwise IoU
    double mean_overlap_refined = 0.0;
    std::size_t instances = 0;
};

// Calibrates every scene with its stored prompts and aggregates accuracy and
// cross-instance overlap before and after.
DatasetCalibration calibrate_dataset(std::span<const Scene> scenes,
                                     const SegmenterParams& params, double tau, int k,
                                     std::uint64_t seed);

}  // namespace pointadapt
