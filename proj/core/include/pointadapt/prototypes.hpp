#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "pointadapt/assignment.hpp"
#include "pointadapt/clustering.hpp"
#include "pointadapt/scene.hpp"
#include "pointadapt/segmenter.hpp"

namespace pointadapt {

struct PrototypeSet {
    int dim = 0;
    std::vector<FeatureVector> prototypes;
    std::string source_tag;
};

// FIFO feature store. Pushing beyond capacity evicts the oldest entry.
class MemoryBank {
  public:
    explicit MemoryBank(std::size_t capacity = 512);

    void push(FeatureVector feature);
    const std::deque<FeatureVector>& queue() const { return queue_; }
    std::size_t size() const { return queue_.size(); }
    std::size_t capacity() const { return capacity_; }

  private:
    std::size_t capacity_;
    std::deque<FeatureVector> queue_;
};

// Feature vectors at the prompted cells, in prompt order. Prompts are taken
// as given; callers pick which polarity to pass.
std::vector<FeatureVector> extract_point_features(const FeatureMap& features,
                                                  std::span<const PointPrompt> prompts,
                                                  int stride);

// Offline stage: encode every scene with the source weights (LoRA factors
// zeroed), gather features at the stored positive prompts, cluster, and keep
// the cluster means. The set is never updated afterwards.
PrototypeSet build_target_prototypes(std::span<const Scene> scenes,
                                     const SegmenterParams& params);

PrototypeSet predicted_prototypes(const MemoryBank& bank);

// D[i][j] = cosine distance between target i and predicted j.
DistanceMatrix prototype_distances(const PrototypeSet& targets,
                                   const PrototypeSet& predicted);

struct MatchingLoss {
    double value = 0.0;
    Assignment assignment;
    // One gradient per predicted prototype; zero for unmatched ones. The
    // assignment is treated as fixed (envelope differentiation).
    std::vector<FeatureVector> grad_predicted;
};

MatchingLoss matching_loss(const PrototypeSet& targets, const PrototypeSet& predicted);

}  // namespace pointadapt
