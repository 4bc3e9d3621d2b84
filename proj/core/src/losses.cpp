#include "pointadapt/losses.hpp"

#include <stdexcept>
#include <string>

#include "pointadapt/util.hpp"

namespace pointadapt {

namespace {

constexpr double kFocalAlpha = 0.25;
constexpr double kFocalGamma = 2.0;  // hard-coded in the closed-form gradient
constexpr double kSoftEps = 1.0;

void require_shape(const MaskLogits& logits, const BinaryMask& target, const char* op) {
    if (logits.height != target.height || logits.width != target.width) {
        throw std::invalid_argument(std::string(op) + ": logits " +
                                    std::to_string(logits.width) + "x" +
                                    std::to_string(logits.height) + " vs target " +
                                    std::to_string(target.width) + "x" +
                                    std::to_string(target.height));
    }
    if (logits.height == 0 || logits.width == 0) {
        throw std::invalid_argument(std::string(op) + ": empty raster");
    }
}

}  // namespace

LossGrad focal_loss(const MaskLogits& logits, const BinaryMask& target) {
    require_shape(logits, target, "focal_loss");
    LossGrad out;
    out.grad = MaskLogits(logits.height, logits.width);
    const std::size_t n = logits.values.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = logits.values[i];
        const double p = sigmoid(x);
        if (target.bits[i]) {
            const double q = 1.0 - p;
            const double s = softplus(-x);  // -log p
            sum += kFocalAlpha * q * q * s;
            out.grad.values[i] = -kFocalAlpha * q * q * (2.0 * p * s + q) * inv_n;
        } else {
            const double s = softplus(x);  // -log(1-p)
            sum += (1.0 - kFocalAlpha) * p * p * s;
            out.grad.values[i] = (1.0 - kFocalAlpha) * p * p * (2.0 * (1.0 - p) * s + p) * inv_n;
        }
    }
    out.value = sum * inv_n;
    return out;
}

LossGrad dice_loss(const MaskLogits& logits, const BinaryMask& target) {
    require_shape(logits, target, "dice_loss");
    LossGrad out;
    out.grad = MaskLogits(logits.height, logits.width);
    const std::size_t n = logits.values.size();

    double inter = 0.0;
    double sum_p = 0.0;
    double sum_t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = sigmoid(logits.values[i]);
        sum_p += p;
        if (target.bits[i]) {
            inter += p;
            sum_t += 1.0;
        }
    }
    const double denom = sum_p + sum_t + kSoftEps;
    out.value = 1.0 - (2.0 * inter + kSoftEps) / denom;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = sigmoid(logits.values[i]);
        const double t = target.bits[i] ? 1.0 : 0.0;
        const double dp = -(2.0 * t * denom - (2.0 * inter + kSoftEps)) / (denom * denom);
        out.grad.values[i] = dp * p * (1.0 - p);
    }
    return out;
}

LossGrad soft_iou_loss(const MaskLogits& logits, const BinaryMask& target) {
    require_shape(logits, target, "soft_iou_loss");
    LossGrad out;
    out.grad = MaskLogits(logits.height, logits.width);
    const std::size_t n = logits.values.size();

    double inter = 0.0;
    double sum_p = 0.0;
    double sum_t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = sigmoid(logits.values[i]);
        sum_p += p;
        if (target.bits[i]) {
            inter += p;
            sum_t += 1.0;
        }
    }
    const double uni = sum_p + sum_t - inter + kSoftEps;
    const double num = inter + kSoftEps;
    out.value = 1.0 - num / uni;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = sigmoid(logits.values[i]);
        const double t = target.bits[i] ? 1.0 : 0.0;
        const double dp = -(t * uni - num * (1.0 - t)) / (uni * uni);
        out.grad.values[i] = dp * p * (1.0 - p);
    }
    return out;
}

LossBreakdown total_loss(std::span<const MaskLogits> student_logits,
                         std::span<const BinaryMask> pseudo_labels, double match_value,
                         double lambda_focal, double lambda_match) {
    if (student_logits.size() != pseudo_labels.size()) {
        throw std::invalid_argument("total_loss: instance count mismatch");
    }
    if (student_logits.empty()) {
        throw std::invalid_argument("total_loss: no instances");
    }
    LossBreakdown b;
    for (std::size_t i = 0; i < student_logits.size(); ++i) {
        b.focal += focal_loss(student_logits[i], pseudo_labels[i]).value;
        b.dice += dice_loss(student_logits[i], pseudo_labels[i]).value;
        b.iou += soft_iou_loss(student_logits[i], pseudo_labels[i]).value;
    }
    const double inv = 1.0 / static_cast<double>(student_logits.size());
    b.focal *= inv;
    b.dice *= inv;
    b.iou *= inv;
    b.match = match_value;
    b.total = lambda_focal * b.focal + b.dice + b.iou + lambda_match * b.match;
    return b;
}

}  // namespace pointadapt
