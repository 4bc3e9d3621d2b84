#pragma once

#include <span>
#include <vector>

namespace pointadapt {

using FeatureVector = std::vector<double>;

// Partition of n feature vectors into k clusters. Labels are canonical:
// cluster 0 contains input index 0, and labels increase in order of each
// cluster's smallest member index.
struct ClusterAssignment {
    std::vector<int> labels;
    int k = 0;
};

// 1 - cos(u, v), in [0, 2]. Throws on dimension mismatch or a zero-norm input;
// a zero-norm feature has no direction and indicates an upstream bug.
double cosine_distance(const FeatureVector& u, const FeatureVector& v);

// nn[i] = argmin over j != i of cosine_distance(f_i, f_j), ties broken by the
// smallest index. Requires n >= 2.
std::vector<int> first_neighbors(std::span<const FeatureVector> features);

// Parameter-free clustering: i and j belong to one cluster iff they are
// connected through the first-neighbor relation (nn(i)=j, nn(j)=i, or
// nn(i)=nn(j)). `depth` > 1 recursively re-clusters the cluster means to
// produce coarser partitions; depth 1 (the finest level) is what prototype
// generation uses.
ClusterAssignment finch_partition(std::span<const FeatureVector> features, int depth = 1);

// Per-cluster mean vectors, ordered by cluster label.
std::vector<FeatureVector> cluster_means(std::span<const FeatureVector> features,
                                         const ClusterAssignment& assignment);

}  // namespace pointadapt
