#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "pointadapt/clustering.hpp"
#include "pointadapt/rng.hpp"

using namespace pointadapt;

namespace {

FeatureVector at_angle(double deg) {
    const double rad = deg * 3.14159265358979323846 / 180.0;
    return {std::cos(rad), std::sin(rad)};
}

// Independent oracle: first-neighbor graph (i ~ nn(i), plus i ~ j when
// nn(i) == nn(j)) flooded into connected components, labels canonicalized
// by smallest member index.
std::vector<int> bfs_components(const std::vector<FeatureVector>& f) {
    const int n = static_cast<int>(f.size());
    std::vector<int> nn(n, -1);
    for (int i = 0; i < n; ++i) {
        double best = 1e18;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d = cosine_distance(f[i], f[j]);
            if (d < best) {
                best = d;
                nn[i] = j;
            }
        }
    }
    std::vector<std::vector<int>> adj(n);
    for (int i = 0; i < n; ++i) {
        adj[i].push_back(nn[i]);
        adj[nn[i]].push_back(i);
        for (int j = 0; j < i; ++j)
            if (nn[i] == nn[j]) {
                adj[i].push_back(j);
                adj[j].push_back(i);
            }
    }
    std::vector<int> label(n, -1);
    int next = 0;
    for (int s = 0; s < n; ++s) {
        if (label[s] >= 0) continue;
        std::vector<int> stack = {s};
        label[s] = next;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v : adj[u])
                if (label[v] < 0) {
                    label[v] = next;
                    stack.push_back(v);
                }
        }
        ++next;
    }
    return label;
}

}  // namespace

TEST_CASE("cosine distance basics") {
    CHECK(cosine_distance({1, 0}, {0, 1}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_distance({1, 0}, {-1, 0}) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(cosine_distance({1, 2}, {2, 4}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(cosine_distance({0, 0}, {1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(cosine_distance({1, 0}, {1, 0, 0}), std::invalid_argument);
}

TEST_CASE("first neighbors with tie-break by smallest index") {
    // Angles 0, 10, 25: nn(0)=1, nn(1)=0, nn(2)=1.
    std::vector<FeatureVector> f = {at_angle(0), at_angle(10), at_angle(25)};
    CHECK(first_neighbors(f) == std::vector<int>{1, 0, 1});

    // Exact tie: 1 is equidistant from 0 and 2; the smaller index wins.
    std::vector<FeatureVector> tie = {at_angle(0), at_angle(10), at_angle(20)};
    CHECK(first_neighbors(tie)[1] == 0);
}

TEST_CASE("finch merges chains through shared neighbors") {
    std::vector<FeatureVector> f = {at_angle(0), at_angle(10), at_angle(25)};
    auto part = finch_partition(f);
    CHECK(part.k == 1);
    CHECK(part.labels == std::vector<int>{0, 0, 0});
}

TEST_CASE("finch separates antipodal groups") {
    std::vector<FeatureVector> f = {at_angle(0), at_angle(5), at_angle(180), at_angle(175)};
    auto part = finch_partition(f);
    CHECK(part.k == 2);
    CHECK(part.labels == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("finch equals the adjacency-components oracle on random sets") {
    Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_int(31));
        const int dim = 2 + static_cast<int>(rng.uniform_int(7));
        std::vector<FeatureVector> f(n, FeatureVector(dim));
        for (auto& v : f) {
            double norm2 = 0.0;
            for (auto& x : v) {
                x = rng.normal();
                norm2 += x * x;
            }
            if (norm2 < 1e-6) v[0] = 1.0;
        }
        auto part = finch_partition(f);
        auto want = bfs_components(f);
        CHECK(part.labels == want);
        CHECK(part.k == 1 + *std::max_element(want.begin(), want.end()));
    }
}

TEST_CASE("deeper finch levels never refine the partition") {
    Rng rng(29);
    std::vector<FeatureVector> f(20, FeatureVector(4));
    for (auto& v : f)
        for (auto& x : v) x = rng.normal();
    const int k1 = finch_partition(f, 1).k;
    const int k2 = finch_partition(f, 2).k;
    CHECK(k2 <= k1);
    CHECK(k2 >= 1);
}

TEST_CASE("cluster means average members in label order") {
    std::vector<FeatureVector> f = {{2, 0}, {0, 2}, {4, 0}};
    ClusterAssignment part;
    part.labels = {0, 1, 0};
    part.k = 2;
    auto means = cluster_means(f, part);
    REQUIRE(means.size() == 2);
    CHECK(means[0] == FeatureVector{3, 0});
    CHECK(means[1] == FeatureVector{0, 2});
}
