#include "doctest.h"

#include <cmath>

#include "pointadapt/optimizer.hpp"
#include "pointadapt/segmenter.hpp"

using namespace pointadapt;

TEST_CASE("pure weight decay shrinks by (1 - lr*wd)") {
    SegmenterConfig cfg;
    auto p = init_segmenter(cfg, 1);
    for (auto& v : p.a1) v = 0.5;
    p.c = -4.0;
    auto before = p;

    AdamState state(cfg);
    ParamGrads zero(cfg);
    const double lr = 0.01, wd = 0.1;
    adam_step(p, zero, state, lr, wd);

    const double factor = 1.0 - lr * wd;
    for (std::size_t i = 0; i < p.a1.size(); ++i)
        CHECK(p.a1[i] == doctest::Approx(before.a1[i] * factor).epsilon(1e-12));
    CHECK(p.c == doctest::Approx(before.c * factor).epsilon(1e-12));
    CHECK(p.a_pos == doctest::Approx(before.a_pos * factor).epsilon(1e-12));
    // Frozen arrays are not the optimizer's to touch.
    CHECK(p.w0 == before.w0);
    CHECK(p.b0 == before.b0);
    CHECK(p.w1 == before.w1);
}

TEST_CASE("first step follows the bias-corrected closed form") {
    SegmenterConfig cfg;
    auto p = init_segmenter(cfg, 2);
    const double c0 = p.c;

    ParamGrads g(cfg);
    g.c = 0.3;
    g.a1[0] = -2.0;
    const double a10 = p.a1[0];

    AdamState state(cfg);
    const double lr = 1e-3;
    adam_step(p, g, state, lr, 0.0);

    // At t = 1 the bias corrections cancel the (1 - beta) factors exactly:
    // mhat = g, vhat = g*g, so the update is lr * g / (|g| + eps).
    auto expected = [&](double grad) { return lr * grad / (std::abs(grad) + 1e-8); };
    CHECK(p.c == doctest::Approx(c0 - expected(0.3)).epsilon(1e-9));
    CHECK(p.a1[0] == doctest::Approx(a10 - expected(-2.0)).epsilon(1e-9));
    CHECK(state.step == 1);
}

TEST_CASE("zero gradient and zero decay leave parameters alone") {
    SegmenterConfig cfg;
    auto p = init_segmenter(cfg, 3);
    auto before = p;
    AdamState state(cfg);
    ParamGrads zero(cfg);
    for (int i = 0; i < 5; ++i) adam_step(p, zero, state, 1e-2, 0.0);
    CHECK(p.a1 == before.a1);
    CHECK(p.b1 == before.b1);
    CHECK(p.e_pos == before.e_pos);
    CHECK(p.c == before.c);
    CHECK(state.step == 5);
}

TEST_CASE("momentum carries across steps") {
    SegmenterConfig cfg;
    auto p = init_segmenter(cfg, 4);
    AdamState state(cfg);
    ParamGrads g(cfg);
    g.c = 1.0;
    const double lr = 1e-3;

    adam_step(p, g, state, lr, 0.0);
    const double after_one = p.c;
    ParamGrads zero(cfg);
    adam_step(p, zero, state, lr, 0.0);
    // The second step still moves c in the same direction off stored momentum.
    CHECK(p.c < after_one);
}
