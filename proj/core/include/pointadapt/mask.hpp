#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pointadapt {

// Row-major boolean raster. Coordinate convention used everywhere in this
// project: x = column, y = row.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> bits;  // height*width, row-major, 0/1

    BinaryMask() = default;
    BinaryMask(int h, int w) : height(h), width(w), bits(static_cast<std::size_t>(h) * w, 0) {}

    bool get(int y, int x) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int y, int x, bool v = true) {
        bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }
    std::size_t count() const;

    bool operator==(const BinaryMask&) const = default;
};

// Row-major real-valued raster of unbounded mask logits.
struct MaskLogits {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    MaskLogits() = default;
    MaskLogits(int h, int w) : height(h), width(w), values(static_cast<std::size_t>(h) * w, 0.0) {}

    double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
};

// Symmetric pairwise-IoU matrix with a zero diagonal.
struct IoUMatrix {
    int n = 0;
    std::vector<double> entries;  // n*n row-major

    double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * n + j]; }
};

// Axis-aligned box with inclusive pixel bounds: width = x_max - x_min + 1.
struct HorizontalBox {
    int x_min = 0;
    int y_min = 0;
    int x_max = 0;
    int y_max = 0;

    bool operator==(const HorizontalBox&) const = default;
};

// Jaccard index |a&b| / |a|b|. Both masks empty counts as perfect agreement
// (1.0); empty vs nonempty is 0.0.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

// Dice coefficient 2|a&b| / (|a|+|b|), same empty-mask convention as mask_iou.
double dice_score(const BinaryMask& a, const BinaryMask& b);

IoUMatrix iou_matrix(std::span<const BinaryMask> masks);

struct EvalResult {
    double miou = 0.0;
    double f1 = 0.0;
};

// Index-aligned per-instance evaluation: mIoU is the mean Jaccard index over
// instances, F1 the mean Dice coefficient.
EvalResult evaluate(std::span<const BinaryMask> pred, std::span<const BinaryMask> gt);

// Tightest box covering all set pixels. Throws on an empty mask.
HorizontalBox min_enclosing_box(const BinaryMask& mask);

// Pixel set iff logit > threshold (strict). Threshold 0 is the probability-0.5
// cut used throughout training.
BinaryMask binarize(const MaskLogits& logits, double threshold = 0.0);

// Run-length encoding, row-major, alternating run lengths starting with the
// unset run (which may be 0). An empty 2x2 mask encodes as [4].
std::vector<std::uint32_t> rle_encode(const BinaryMask& mask);
BinaryMask rle_decode(int height, int width, std::span<const std::uint32_t> runs);

}  // namespace pointadapt
