#pragma once

#include <span>

#include "pointadapt/mask.hpp"

namespace pointadapt {

struct LossGrad {
    double value = 0.0;
    MaskLogits grad;  // d value / d logit, same shape as the input logits
};

// Pixel-mean focal loss with alpha 0.25 and gamma 2, computed through
// softplus so large logits stay finite.
LossGrad focal_loss(const MaskLogits& logits, const BinaryMask& target);

// 1 - (2*sum(p*t) + eps) / (sum(p) + sum(t) + eps) with eps = 1.
LossGrad dice_loss(const MaskLogits& logits, const BinaryMask& target);

// 1 - (sum(p*t) + eps) / (sum(p) + sum(t) - sum(p*t) + eps) with eps = 1.
// Stands in for a mask-quality head: same minimizer as dice but a different
// gradient profile on near-misses.
LossGrad soft_iou_loss(const MaskLogits& logits, const BinaryMask& target);

struct LossBreakdown {
    double focal = 0.0;
    double dice = 0.0;
    double iou = 0.0;
    double match = 0.0;
    double total = 0.0;
};

// Weighted sum lambda_focal * focal + dice + iou + lambda_match * match,
// with the mask terms averaged over instances.
LossBreakdown total_loss(std::span<const MaskLogits> student_logits,
                         std::span<const BinaryMask> pseudo_labels,
                         double match_value, double lambda_focal,
                         double lambda_match);

}  // namespace pointadapt
