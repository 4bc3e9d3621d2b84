#include "pointadapt/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace pointadapt {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

void update_span(std::vector<double>& p, const std::vector<double>& g, AdamSlot& slot,
                 long t, double lr, double wd) {
    if (p.size() != g.size() || p.size() != slot.m.size()) {
        throw std::invalid_argument("adam_step: slot size mismatch");
    }
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    for (std::size_t i = 0; i < p.size(); ++i) {
        slot.m[i] = kBeta1 * slot.m[i] + (1.0 - kBeta1) * g[i];
        slot.v[i] = kBeta2 * slot.v[i] + (1.0 - kBeta2) * g[i] * g[i];
        const double mhat = slot.m[i] / bc1;
        const double vhat = slot.v[i] / bc2;
        p[i] -= lr * (mhat / (std::sqrt(vhat) + kEps) + wd * p[i]);
    }
}

void update_scalar(double& p, double g, AdamScalarSlot& slot, long t, double lr,
                   double wd) {
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    slot.m = kBeta1 * slot.m + (1.0 - kBeta1) * g;
    slot.v = kBeta2 * slot.v + (1.0 - kBeta2) * g * g;
    p -= lr * ((slot.m / bc1) / (std::sqrt(slot.v / bc2) + kEps) + wd * p);
}

}  // namespace

void adam_step(SegmenterParams& params, const ParamGrads& grads, AdamState& state,
               double lr, double weight_decay) {
    const long t = ++state.step;
    update_span(params.a1, grads.a1, state.a1, t, lr, weight_decay);
    update_span(params.b1, grads.b1, state.b1, t, lr, weight_decay);
    update_span(params.e_pos, grads.e_pos, state.e_pos, t, lr, weight_decay);
    update_span(params.e_neg, grads.e_neg, state.e_neg, t, lr, weight_decay);
    update_scalar(params.a_pos, grads.a_pos, state.a_pos, t, lr, weight_decay);
    update_scalar(params.a_neg, grads.a_neg, state.a_neg, t, lr, weight_decay);
    update_scalar(params.c, grads.c, state.c, t, lr, weight_decay);
}

}  // namespace pointadapt
