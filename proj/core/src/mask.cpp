#include "pointadapt/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pointadapt/util.hpp"

namespace pointadapt {

namespace {

void require_same_shape(const BinaryMask& a, const BinaryMask& b, const char* op) {
    if (a.height != b.height || a.width != b.width) {
        throw std::invalid_argument(std::string(op) + ": mask shape mismatch (" +
                                    std::to_string(a.height) + "x" + std::to_string(a.width) +
                                    " vs " + std::to_string(b.height) + "x" +
                                    std::to_string(b.width) + ")");
    }
}

}  // namespace

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b, "mask_iou");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        const bool pa = a.bits[i] != 0;
        const bool pb = b.bits[i] != 0;
        inter += static_cast<std::size_t>(pa && pb);
        uni += static_cast<std::size_t>(pa || pb);
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double dice_score(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b, "dice_score");
    std::size_t inter = 0, ca = 0, cb = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        const bool pa = a.bits[i] != 0;
        const bool pb = b.bits[i] != 0;
        inter += static_cast<std::size_t>(pa && pb);
        ca += static_cast<std::size_t>(pa);
        cb += static_cast<std::size_t>(pb);
    }
    if (ca + cb == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(ca + cb);
}

IoUMatrix iou_matrix(std::span<const BinaryMask> masks) {
    if (masks.empty()) {
        throw std::invalid_argument("iou_matrix: need at least one mask");
    }
    const int n = static_cast<int>(masks.size());
    IoUMatrix out;
    out.n = n;
    out.entries.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double v = mask_iou(masks[i], masks[j]);
            out.entries[static_cast<std::size_t>(i) * n + j] = v;
            out.entries[static_cast<std::size_t>(j) * n + i] = v;
        }
    }
    return out;
}

EvalResult evaluate(std::span<const BinaryMask> pred, std::span<const BinaryMask> gt) {
    if (pred.empty() || pred.size() != gt.size()) {
        throw std::invalid_argument("evaluate: pred/gt length mismatch or empty");
    }
    double iou_sum = 0.0, dice_sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        iou_sum += mask_iou(pred[i], gt[i]);
        dice_sum += dice_score(pred[i], gt[i]);
    }
    const double n = static_cast<double>(pred.size());
    return {iou_sum / n, dice_sum / n};
}

HorizontalBox min_enclosing_box(const BinaryMask& mask) {
    int x_min = mask.width, y_min = mask.height, x_max = -1, y_max = -1;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (mask.get(y, x)) {
                x_min = std::min(x_min, x);
                y_min = std::min(y_min, y);
                x_max = std::max(x_max, x);
                y_max = std::max(y_max, y);
            }
        }
    }
    if (x_max < 0) {
        throw std::invalid_argument("min_enclosing_box: empty mask has no enclosing box");
    }
    return {x_min, y_min, x_max, y_max};
}

BinaryMask binarize(const MaskLogits& logits, double threshold) {
    BinaryMask out(logits.height, logits.width);
    for (std::size_t i = 0; i < logits.values.size(); ++i) {
        const double v = logits.values[i];
        if (!std::isfinite(v)) {
            throw std::invalid_argument("binarize: non-finite logit at flat index " +
                                        std::to_string(i));
        }
        out.bits[i] = v > threshold ? 1 : 0;
    }
    return out;
}

std::vector<std::uint32_t> rle_encode(const BinaryMask& mask) {
    std::vector<std::uint32_t> runs;
    std::uint8_t current = 0;  // runs start with the unset count
    std::uint32_t length = 0;
    for (const std::uint8_t bit : mask.bits) {
        if (bit == current) {
            ++length;
        } else {
            runs.push_back(length);
            current = bit;
            length = 1;
        }
    }
    runs.push_back(length);
    return runs;
}

BinaryMask rle_decode(int height, int width, std::span<const std::uint32_t> runs) {
    BinaryMask out(height, width);
    std::size_t pos = 0;
    std::uint8_t current = 0;
    for (const std::uint32_t run : runs) {
        if (pos + run > out.bits.size()) {
            throw DataError("rle_decode: runs exceed mask size " + std::to_string(out.bits.size()));
        }
        std::fill_n(out.bits.begin() + static_cast<std::ptrdiff_t>(pos), run, current);
        pos += run;
        current ^= 1;
    }
    if (pos != out.bits.size()) {
        throw DataError("rle_decode: runs sum to " + std::to_string(pos) + ", expected " +
                        std::to_string(out.bits.size()));
    }
    return out;
}

}  // namespace pointadapt
