#include "pointadapt/prototypes.hpp"

#include <cmath>
#include <stdexcept>

namespace pointadapt {

namespace {

double vec_norm(const FeatureVector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

PrototypeSet cluster_prototypes(std::span<const FeatureVector> features,
                                std::string source_tag) {
    const ClusterAssignment assignment = finch_partition(features);
    PrototypeSet set;
    set.dim = static_cast<int>(features.front().size());
    set.prototypes = cluster_means(features, assignment);
    set.source_tag = std::move(source_tag);
    return set;
}

}  // namespace

MemoryBank::MemoryBank(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("MemoryBank: zero capacity");
}

void MemoryBank::push(FeatureVector feature) {
    queue_.push_back(std::move(feature));
    if (queue_.size() > capacity_) queue_.pop_front();
}

std::vector<FeatureVector> extract_point_features(const FeatureMap& features,
                                                  std::span<const PointPrompt> prompts,
                                                  int stride) {
    if (stride < 1) throw std::invalid_argument("extract_point_features: bad stride");
    std::vector<FeatureVector> out;
    out.reserve(prompts.size());
    for (const PointPrompt& p : prompts) {
        const int r = p.y / stride;
        const int c = p.x / stride;
        if (p.x < 0 || p.y < 0 || r >= features.rows || c >= features.cols) {
            throw std::invalid_argument("extract_point_features: prompt outside grid");
        }
        out.push_back(features.cell(r, c));
    }
    return out;
}

PrototypeSet build_target_prototypes(std::span<const Scene> scenes,
                                     const SegmenterParams& params) {
    if (scenes.empty()) {
        throw std::invalid_argument("build_target_prototypes: empty dataset");
    }
    SegmenterParams source(params);
    source.a1.assign(source.a1.size(), 0.0);
    source.b1.assign(source.b1.size(), 0.0);

    std::vector<FeatureVector> features;
    for (const Scene& scene : scenes) {
        const FeatureMap f = encode(scene.image, source);
        for (const SceneInstance& inst : scene.instances) {
            for (FeatureVector& v : extract_point_features(
                     f, inst.prompts.positives, source.cfg.stride)) {
                if (vec_norm(v) > 0.0) features.push_back(std::move(v));
            }
        }
    }
    if (features.empty()) {
        throw std::invalid_argument(
            "build_target_prototypes: no nonzero point features in dataset");
    }
    return cluster_prototypes(features, "target");
}

PrototypeSet predicted_prototypes(const MemoryBank& bank) {
    if (bank.size() == 0) {
        throw std::invalid_argument("predicted_prototypes: empty bank");
    }
    const std::vector<FeatureVector> features(bank.queue().begin(), bank.queue().end());
    return cluster_prototypes(features, "predicted");
}

DistanceMatrix prototype_distances(const PrototypeSet& targets,
                                   const PrototypeSet& predicted) {
    if (targets.prototypes.empty() || predicted.prototypes.empty()) {
        throw std::invalid_argument("prototype_distances: empty prototype set");
    }
    if (targets.dim != predicted.dim) {
        throw std::invalid_argument("prototype_distances: dimension mismatch");
    }
    DistanceMatrix d(static_cast<int>(targets.prototypes.size()),
                     static_cast<int>(predicted.prototypes.size()));
    for (int i = 0; i < d.rows; ++i) {
        for (int j = 0; j < d.cols; ++j) {
            d.at(i, j) = cosine_distance(targets.prototypes[i], predicted.prototypes[j]);
        }
    }
    return d;
}

MatchingLoss matching_loss(const PrototypeSet& targets, const PrototypeSet& predicted) {
    MatchingLoss loss;
    const DistanceMatrix d = prototype_distances(targets, predicted);
    loss.assignment = hungarian_match(d);
    loss.value = loss.assignment.cost;
    loss.grad_predicted.assign(predicted.prototypes.size(),
                               FeatureVector(predicted.dim, 0.0));

    for (const auto& [i, j] : loss.assignment.pairs) {
        const FeatureVector& t = targets.prototypes[i];
        const FeatureVector& p = predicted.prototypes[j];
        const double nt = vec_norm(t);
        const double np = vec_norm(p);
        double dot = 0.0;
        for (int k = 0; k < predicted.dim; ++k) dot += t[k] * p[k];
        // d(1 - cos)/dp = -t/(|t||p|) + (t.p) p/(|t||p|^3)
        FeatureVector& g = loss.grad_predicted[j];
        for (int k = 0; k < predicted.dim; ++k) {
            g[k] = -t[k] / (nt * np) + dot * p[k] / (nt * np * np * np);
        }
    }
    return loss;
}

}  // namespace pointadapt
