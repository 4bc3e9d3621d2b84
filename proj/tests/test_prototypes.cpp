#include "doctest.h"

#include <cmath>
#include <vector>

#include "pointadapt/prototypes.hpp"
#include "pointadapt/rng.hpp"
#include "pointadapt/scene.hpp"

using namespace pointadapt;

namespace {

FeatureVector fv(std::initializer_list<double> xs) { return FeatureVector(xs); }

PrototypeSet make_set(std::vector<FeatureVector> protos) {
    PrototypeSet s;
    s.dim = protos.empty() ? 0 : static_cast<int>(protos[0].size());
    s.prototypes = std::move(protos);
    return s;
}

}  // namespace

TEST_CASE("memory bank evicts oldest first") {
    MemoryBank bank(3);
    bank.push(fv({1, 0}));
    bank.push(fv({2, 0}));
    bank.push(fv({3, 0}));
    bank.push(fv({4, 0}));
    REQUIRE(bank.size() == 3);
    CHECK(bank.capacity() == 3);
    CHECK(bank.queue()[0] == fv({2, 0}));
    CHECK(bank.queue()[1] == fv({3, 0}));
    CHECK(bank.queue()[2] == fv({4, 0}));
}

TEST_CASE("bank invariants hold under randomized pushes") {
    Rng rng(19);
    MemoryBank bank(16);
    std::vector<FeatureVector> shadow;
    for (int i = 0; i < 100; ++i) {
        FeatureVector f = {static_cast<double>(i), rng.uniform01()};
        bank.push(f);
        shadow.push_back(f);
        if (shadow.size() > 16) shadow.erase(shadow.begin());
        REQUIRE(bank.size() == shadow.size());
        for (std::size_t j = 0; j < shadow.size(); ++j) CHECK(bank.queue()[j] == shadow[j]);
    }
}

TEST_CASE("extract_point_features maps pixels to stride cells") {
    FeatureMap fm(2, 3, 3);
    for (int c = 0; c < 2; ++c)
        for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 3; ++col) fm.at(c, r, col) = 100.0 * c + 10.0 * r + col;

    std::vector<PointPrompt> prompts = {{9, 5, Polarity::positive},
                                        {0, 0, Polarity::positive}};
    auto feats = extract_point_features(fm, prompts, 4);
    REQUIRE(feats.size() == 2);
    // Pixel (x=9, y=5) falls in cell (row 1, col 2).
    CHECK(feats[0] == fv({12, 112}));
    CHECK(feats[1] == fv({0, 100}));
}

TEST_CASE("prototype distances are pairwise cosine distances") {
    auto targets = make_set({fv({1, 0}), fv({0, 1})});
    auto predicted = make_set({fv({1, 0}), fv({1, 1}), fv({-1, 0})});
    auto d = prototype_distances(targets, predicted);
    REQUIRE(d.rows == 2);
    REQUIRE(d.cols == 3);
    CHECK(d.at(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(d.at(0, 1) == doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(d.at(0, 2) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(d.at(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("matching loss averages matched distances and zeroes unmatched grads") {
    auto targets = make_set({fv({1, 0}), fv({0, 1})});
    auto predicted = make_set({fv({0, 2}), fv({3, 0}), fv({-1, -1})});
    auto ml = matching_loss(targets, predicted);
    // Optimal match: target 0 with predicted 1, target 1 with predicted 0, both
    // at distance 0; predicted 2 stays unmatched.
    CHECK(ml.value == doctest::Approx(0.0).epsilon(1e-12));
    REQUIRE(ml.grad_predicted.size() == 3);
    for (double g : ml.grad_predicted[2]) CHECK(g == 0.0);
}

TEST_CASE("matching loss gradient matches finite differences") {
    Rng rng(31);
    auto targets = make_set({fv({1, 0.2}), fv({-0.3, 1})});
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<FeatureVector> pred(3, FeatureVector(2));
        for (auto& v : pred)
            for (auto& x : v) x = rng.uniform(-1.0, 1.0) + 0.1;
        auto base = matching_loss(targets, make_set(pred));
        const double h = 1e-6;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            for (std::size_t j = 0; j < 2; ++j) {
                auto bumped = pred;
                bumped[i][j] += h;
                const double up = matching_loss(targets, make_set(bumped)).value;
                bumped[i][j] -= 2.0 * h;
                const double down = matching_loss(targets, make_set(bumped)).value;
                const double fd = (up - down) / (2.0 * h);
                CHECK(base.grad_predicted[i][j] == doctest::Approx(fd).epsilon(1e-4));
            }
        }
    }
}

TEST_CASE("target prototypes come from the source weights") {
    GeneratorSpec spec;
    spec.points_per_instance = 2;
    std::vector<Scene> scenes = {generate_scene(spec, 1), generate_scene(spec, 2)};
    scenes[0].id = 0;
    scenes[1].id = 1;

    auto params = init_segmenter(SegmenterConfig{}, 5);
    // Perturb the LoRA factors: build_target_prototypes must ignore them.
    auto dirty = params;
    for (auto& v : dirty.a1) v += 0.5;
    for (auto& v : dirty.b1) v += 0.5;

    auto clean_set = build_target_prototypes(scenes, params);
    auto dirty_set = build_target_prototypes(scenes, dirty);
    REQUIRE(clean_set.prototypes.size() == dirty_set.prototypes.size());
    for (std::size_t i = 0; i < clean_set.prototypes.size(); ++i)
        CHECK(clean_set.prototypes[i] == dirty_set.prototypes[i]);
    CHECK(clean_set.dim == params.cfg.feature_dim);
    CHECK(!clean_set.source_tag.empty());
}

TEST_CASE("predicted prototypes cluster the bank contents") {
    MemoryBank bank(8);
    // Two tight direction groups: expect one prototype per group.
    bank.push(fv({1.0, 0.01}));
    bank.push(fv({1.0, -0.01}));
    bank.push(fv({0.01, 1.0}));
    bank.push(fv({-0.01, 1.0}));
    auto set = predicted_prototypes(bank);
    CHECK(set.prototypes.size() == 2);
    CHECK(set.dim == 2);
}
