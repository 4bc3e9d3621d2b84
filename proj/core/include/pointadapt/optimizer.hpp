#pragma once

#include <vector>

#include "pointadapt/segmenter.hpp"

namespace pointadapt {

struct AdamSlot {
    std::vector<double> m;
    std::vector<double> v;

    explicit AdamSlot(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

struct AdamScalarSlot {
    double m = 0.0;
    double v = 0.0;
};

struct AdamState {
    long step = 0;
    AdamSlot a1, b1, e_pos, e_neg;
    AdamScalarSlot a_pos, a_neg, c;

    explicit AdamState(const SegmenterConfig& cfg)
        : a1(static_cast<std::size_t>(cfg.feature_dim) * cfg.lora_rank),
          b1(static_cast<std::size_t>(cfg.lora_rank) * cfg.feature_dim),
          e_pos(static_cast<std::size_t>(cfg.feature_dim)),
          e_neg(static_cast<std::size_t>(cfg.feature_dim)) {}
};

// One AdamW update (beta1 0.9, beta2 0.999, eps 1e-8) over the trainable
// parameters, with decoupled weight decay against the pre-step values.
void adam_step(SegmenterParams& params, const ParamGrads& grads, AdamState& state,
               double lr, double weight_decay);

}  // namespace pointadapt
