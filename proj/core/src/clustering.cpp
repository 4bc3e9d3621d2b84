#include "pointadapt/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pointadapt {

namespace {

double norm(const FeatureVector& v) {
    double s = 0.0;
    for (const double x : v) s += x * x;
    return std::sqrt(s);
}

struct UnionFind {
    std::vector<int> parent;

    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

// Relabel so clusters appear in order of their smallest member index. This
// makes the partition invariant to input permutation up to member order.
ClusterAssignment canonicalize(const std::vector<int>& raw, int n) {
    ClusterAssignment out;
    out.labels.assign(n, -1);
    std::vector<int> remap(n, -1);
    int next = 0;
    for (int i = 0; i < n; ++i) {
        if (remap[raw[i]] < 0) remap[raw[i]] = next++;
        out.labels[i] = remap[raw[i]];
    }
    out.k = next;
    return out;
}

}  // namespace

double cosine_distance(const FeatureVector& u, const FeatureVector& v) {
    if (u.size() != v.size()) {
        throw std::invalid_argument("cosine_distance: dimension mismatch (" +
                                    std::to_string(u.size()) + " vs " + std::to_string(v.size()) +
                                    ")");
    }
    const double nu = norm(u);
    const double nv = norm(v);
    if (nu == 0.0 || nv == 0.0) {
        throw std::invalid_argument("cosine_distance: zero-norm feature vector");
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
    const double c = std::clamp(dot / (nu * nv), -1.0, 1.0);
    return 1.0 - c;
}

std::vector<int> first_neighbors(std::span<const FeatureVector> features) {
    const int n = static_cast<int>(features.size());
    if (n < 2) {
        throw std::invalid_argument("first_neighbors: need at least 2 features");
    }
    std::vector<int> nn(n, -1);
    for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d = cosine_distance(features[i], features[j]);
            if (d < best) {
                best = d;
                nn[i] = j;
            }
        }
    }
    return nn;
}

ClusterAssignment finch_partition(std::span<const FeatureVector> features, int depth) {
    const int n = static_cast<int>(features.size());
    if (n < 1) {
        throw std::invalid_argument("finch_partition: empty feature set");
    }
    if (depth < 1) {
        throw std::invalid_argument("finch_partition: depth must be >= 1");
    }
    if (n == 1) {
        return ClusterAssignment{{0}, 1};
    }

    // Linking every point to its first neighbor already yields the connected
    // components of the full relation: shared and reciprocal neighbors meet
    // through the common target.
    const std::vector<int> nn = first_neighbors(features);
    UnionFind uf(n);
    for (int i = 0; i < n; ++i) uf.unite(i, nn[i]);

    std::vector<int> raw(n);
    for (int i = 0; i < n; ++i) raw[i] = uf.find(i);
    ClusterAssignment level = canonicalize(raw, n);

    if (depth == 1 || level.k < 3) {
        return level;
    }

    // Coarser level: cluster the means, then compose the label maps.
    const std::vector<FeatureVector> means =
        cluster_means(features, level);
    const ClusterAssignment coarser = finch_partition(means, depth - 1);
    std::vector<int> composed(n);
    for (int i = 0; i < n; ++i) composed[i] = coarser.labels[level.labels[i]];
    return canonicalize(composed, n);
}

std::vector<FeatureVector> cluster_means(std::span<const FeatureVector> features,
                                         const ClusterAssignment& assignment) {
    if (assignment.labels.size() != features.size()) {
        throw std::invalid_argument("cluster_means: assignment does not cover the feature set");
    }
    if (features.empty()) {
        throw std::invalid_argument("cluster_means: empty feature set");
    }
    const std::size_t dim = features[0].size();
    std::vector<FeatureVector> sums(assignment.k, FeatureVector(dim, 0.0));
    std::vector<std::size_t> counts(assignment.k, 0);
    for (std::size_t i = 0; i < features.size(); ++i) {
        const int label = assignment.labels[i];
        if (label < 0 || label >= assignment.k) {
            throw std::invalid_argument("cluster_means: label " + std::to_string(label) +
                                        " out of range [0, " + std::to_string(assignment.k) + ")");
        }
        if (features[i].size() != dim) {
            throw std::invalid_argument("cluster_means: inconsistent feature dimensions");
        }
        for (std::size_t d = 0; d < dim; ++d) sums[label][d] += features[i][d];
        ++counts[label];
    }
    for (int c = 0; c < assignment.k; ++c) {
        if (counts[c] == 0) {
            throw std::invalid_argument("cluster_means: cluster " + std::to_string(c) +
                                        " has no members");
        }
        for (std::size_t d = 0; d < dim; ++d) sums[c][d] /= static_cast<double>(counts[c]);
    }
    return sums;
}

}  // namespace pointadapt
