#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pointadapt/image.hpp"
#include "pointadapt/mask.hpp"

namespace pointadapt {

enum class Polarity { positive, negative };

// Pixel-space click. x is the column, y the row.
struct PointPrompt {
    int x = 0;
    int y = 0;
    Polarity polarity = Polarity::positive;
};

// Patch-grid feature volume, channel-major.
struct FeatureMap {
    int channels = 0;
    int rows = 0;
    int cols = 0;
    std::vector<double> values;

    FeatureMap() = default;
    FeatureMap(int c, int r, int cl)
        : channels(c), rows(r), cols(cl),
          values(static_cast<std::size_t>(c) * r * cl, 0.0) {}

    double at(int c, int r, int col) const {
        return values[(static_cast<std::size_t>(c) * rows + r) * cols + col];
    }
    double& at(int c, int r, int col) {
        return values[(static_cast<std::size_t>(c) * rows + r) * cols + col];
    }

    std::vector<double> cell(int r, int col) const;
};

struct SegmenterConfig {
    int in_channels = 1;
    int stride = 4;
    int feature_dim = 16;
    int lora_rank = 4;
};

// Linear patch embed (frozen), one LoRA-adapted mixing layer, and a
// prompt-conditioned cosine decoder. Matrices are row-major.
struct SegmenterParams {
    SegmenterConfig cfg;

    std::vector<double> w0;  // feature_dim x (stride*stride*in_channels), frozen
    std::vector<double> b0;  // feature_dim, frozen
    std::vector<double> w1;  // feature_dim x feature_dim, frozen
    std::vector<double> a1;  // feature_dim x lora_rank, trainable
    std::vector<double> b1;  // lora_rank x feature_dim, trainable

    std::vector<double> e_pos;  // feature_dim, trainable
    std::vector<double> e_neg;  // feature_dim, trainable
    double a_pos = 8.0;
    double a_neg = 8.0;
    double c = -4.0;

    int patch_size() const { return cfg.stride * cfg.stride * cfg.in_channels; }
};

// Gradients for the trainable subset only.
struct ParamGrads {
    std::vector<double> a1;
    std::vector<double> b1;
    std::vector<double> e_pos;
    std::vector<double> e_neg;
    double a_pos = 0.0;
    double a_neg = 0.0;
    double c = 0.0;

    explicit ParamGrads(const SegmenterConfig& cfg)
        : a1(static_cast<std::size_t>(cfg.feature_dim) * cfg.lora_rank, 0.0),
          b1(static_cast<std::size_t>(cfg.lora_rank) * cfg.feature_dim, 0.0),
          e_pos(cfg.feature_dim, 0.0),
          e_neg(cfg.feature_dim, 0.0) {}
};

SegmenterParams init_segmenter(const SegmenterConfig& cfg, std::uint64_t seed);

// Returns params with w1 absorbed into w1 + a1*b1 and both factors zeroed.
SegmenterParams merge_lora(const SegmenterParams& params);

FeatureMap encode(const Image& image, const SegmenterParams& params);

MaskLogits predict_mask(const FeatureMap& features,
                        std::span<const PointPrompt> prompts,
                        const SegmenterParams& params);

// Decoder backward for one instance. Accumulates prompt-embedding and scalar
// gradients into grads and adds the feature-space gradient into dfeatures.
void decode_backward(const FeatureMap& features,
                     std::span<const PointPrompt> prompts,
                     const SegmenterParams& params,
                     const MaskLogits& dlogits,
                     ParamGrads& grads,
                     FeatureMap& dfeatures);

// Encoder backward: routes a feature-space gradient into the LoRA factors.
void encode_backward(const Image& image, const SegmenterParams& params,
                     const FeatureMap& dfeatures, ParamGrads& grads);

// Full backward pass over one image with per-instance prompt sets and
// per-instance logit gradients.
ParamGrads backward(const Image& image, const SegmenterParams& params,
                    std::span<const std::vector<PointPrompt>> prompts,
                    std::span<const MaskLogits> dlogits);

}  // namespace pointadapt
