#include "pointadapt/segmenter.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "pointadapt/rng.hpp"
#include "pointadapt/texture.hpp"
#include "pointadapt/util.hpp"

namespace pointadapt {

namespace {

constexpr double kNormEps = 1e-8;

// Parameters are stored at float precision so that a freshly initialized
// model and its saved checkpoint evaluate identically.
void quantize(std::vector<double>& v) {
    for (double& x : v) x = static_cast<double>(static_cast<float>(x));
}

std::vector<double> effective_w1(const SegmenterParams& p) {
    const int d = p.cfg.feature_dim;
    const int r = p.cfg.lora_rank;
    std::vector<double> w(p.w1);
    for (int i = 0; i < d; ++i) {
        for (int k = 0; k < r; ++k) {
            const double aik = p.a1[static_cast<std::size_t>(i) * r + k];
            if (aik == 0.0) continue;
            for (int j = 0; j < d; ++j) {
                w[static_cast<std::size_t>(i) * d + j] +=
                    aik * p.b1[static_cast<std::size_t>(k) * d + j];
            }
        }
    }
    return w;
}

void gather_patch(const Image& img, int stride, int cell_r, int cell_c,
                  std::vector<double>& patch) {
    std::size_t idx = 0;
    for (int ch = 0; ch < img.channels; ++ch) {
        for (int dy = 0; dy < stride; ++dy) {
            for (int dx = 0; dx < stride; ++dx) {
                patch[idx++] = img.at(ch, cell_r * stride + dy, cell_c * stride + dx);
            }
        }
    }
}

void embed_cell(const SegmenterParams& p, const std::vector<double>& patch,
                std::vector<double>& z0) {
    const int d = p.cfg.feature_dim;
    const int ps = p.patch_size();
    for (int i = 0; i < d; ++i) {
        double acc = p.b0[i];
        const double* row = p.w0.data() + static_cast<std::size_t>(i) * ps;
        for (int j = 0; j < ps; ++j) acc += row[j] * patch[j];
        z0[i] = acc;
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Guarded cosine used by the decoder, C(x, y) = x.y / ((|x|+eps)(|y|+eps)).
double guarded_cosine(std::span<const double> x, std::span<const double> y) {
    return dot(x, y) / ((norm(x) + kNormEps) * (norm(y) + kNormEps));
}

struct PromptCells {
    std::vector<std::pair<int, int>> pos;  // (row, col) on the feature grid
    std::vector<std::pair<int, int>> neg;
};

PromptCells locate_prompts(const FeatureMap& f, std::span<const PointPrompt> prompts,
                           int stride) {
    if (prompts.empty()) throw std::invalid_argument("predict_mask: empty prompt list");
    const int h = f.rows * stride;
    const int w = f.cols * stride;
    PromptCells cells;
    for (const PointPrompt& p : prompts) {
        if (p.x < 0 || p.x >= w || p.y < 0 || p.y >= h) {
            throw std::invalid_argument("prompt (" + std::to_string(p.x) + ", " +
                                        std::to_string(p.y) + ") outside " +
                                        std::to_string(w) + "x" + std::to_string(h) +
                                        " image");
        }
        auto& bucket = p.polarity == Polarity::positive ? cells.pos : cells.neg;
        bucket.emplace_back(p.y / stride, p.x / stride);
    }
    if (cells.pos.empty()) {
        throw std::invalid_argument("predict_mask: prompt set has no positive prompt");
    }
    return cells;
}

std::vector<double> prompt_query(const FeatureMap& f,
                                 const std::vector<std::pair<int, int>>& cells,
                                 const std::vector<double>& embed) {
    std::vector<double> q(embed);
    for (const auto& [r, c] : cells) {
        for (int ch = 0; ch < f.channels; ++ch) {
            q[ch] += f.at(ch, r, c) / static_cast<double>(cells.size());
        }
    }
    return q;
}

}  // namespace

std::vector<double> FeatureMap::cell(int r, int col) const {
    std::vector<double> v(static_cast<std::size_t>(channels));
    for (int ch = 0; ch < channels; ++ch) v[ch] = at(ch, r, col);
    return v;
}

SegmenterParams init_segmenter(const SegmenterConfig& cfg, std::uint64_t seed) {
    if (cfg.in_channels < 1 || cfg.stride < 1 || cfg.feature_dim < 1 || cfg.lora_rank < 1) {
        throw std::invalid_argument("init_segmenter: dimensions must be positive");
    }
    SegmenterParams p;
    p.cfg = cfg;
    Rng rng = Rng::substream(seed, "init");

    const int d = cfg.feature_dim;
    const int s = cfg.stride;
    const int ps = s * s * cfg.in_channels;

    // The frozen stack stands in for a pretrained encoder, so like any
    // pretrained checkpoint it is one fixed parameter set, not a random
    // draw. Each W0 row is a matched filter for one texture-vocabulary word
    // (zero-sum, so intensity level cancels); rectified matched responses
    // give instances of distinct words nearly orthogonal features, which the
    // cosine decoder depends on.
    p.w0.assign(static_cast<std::size_t>(d) * ps, 0.0);
    for (int i = 0; i < d; ++i) {
        const int word = i % kNumTextureWords;
        double* row = p.w0.data() + static_cast<std::size_t>(i) * ps;
        for (int ch = 0; ch < cfg.in_channels; ++ch) {
            for (int dy = 0; dy < s; ++dy) {
                for (int dx = 0; dx < s; ++dx) {
                    row[(static_cast<std::size_t>(ch) * s + dy) * s + dx] =
                        texture_sign(word, dy, dx) * 4.0 / ps;
                }
            }
        }
    }
    // W1 is identity mixing plus uniform lateral inhibition: every channel
    // competes against half the summed response, so after the rectifier a
    // cell keeps only the words that clearly dominate it. Cells covering a
    // texture only partially would otherwise leak onto every word that
    // agrees with the covered sub-tile. The inhibition flips the sign of
    // uniform input (W1 applied to an all-ones vector scales it by
    // 1 - inhibition*d), so the uniform positive b0 below acts as a firm
    // activation threshold after mixing: background and sliver cells, whose
    // matched responses are mostly speckle noise, land at exactly zero
    // instead of leaking a shared low-magnitude direction.
    const double inhibition = 8.0 / d;
    const double threshold = 0.45;
    p.b0.assign(static_cast<std::size_t>(d), threshold / (inhibition * d - 1.0));
    p.w1.assign(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            p.w1[static_cast<std::size_t>(i) * d + j] =
                (i == j ? 1.0 : 0.0) - inhibition;
        }
    }
    p.a1.resize(static_cast<std::size_t>(d) * cfg.lora_rank);
    for (double& x : p.a1) x = rng.uniform(-0.01, 0.01);
    p.b1.assign(static_cast<std::size_t>(cfg.lora_rank) * d, 0.0);
    p.e_pos.assign(d, 0.0);
    p.e_neg.assign(d, 0.0);

    quantize(p.w0);
    quantize(p.b0);
    quantize(p.w1);
    quantize(p.a1);
    return p;
}

SegmenterParams merge_lora(const SegmenterParams& params) {
    SegmenterParams merged(params);
    merged.w1 = effective_w1(params);
    merged.a1.assign(merged.a1.size(), 0.0);
    merged.b1.assign(merged.b1.size(), 0.0);
    return merged;
}

FeatureMap encode(const Image& image, const SegmenterParams& params) {
    const int s = params.cfg.stride;
    if (image.channels != params.cfg.in_channels) {
        throw std::invalid_argument("encode: image has " + std::to_string(image.channels) +
                                    " channels, model expects " +
                                    std::to_string(params.cfg.in_channels));
    }
    if (image.height % s != 0 || image.width % s != 0) {
        throw std::invalid_argument("encode: image " + std::to_string(image.width) + "x" +
                                    std::to_string(image.height) +
                                    " not divisible by stride " + std::to_string(s));
    }
    const int d = params.cfg.feature_dim;
    const int rows = image.height / s;
    const int cols = image.width / s;
    FeatureMap f(d, rows, cols);

    const std::vector<double> weff = effective_w1(params);
    std::vector<double> patch(static_cast<std::size_t>(params.patch_size()));
    std::vector<double> z0(static_cast<std::size_t>(d));
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            gather_patch(image, s, r, c, patch);
            embed_cell(params, patch, z0);
            for (int i = 0; i < d; ++i) {
                double acc = 0.0;
                const double* row = weff.data() + static_cast<std::size_t>(i) * d;
                for (int j = 0; j < d; ++j) acc += row[j] * z0[j];
                f.at(i, r, c) = acc > 0.0 ? acc : 0.0;
            }
        }
    }
    return f;
}

MaskLogits predict_mask(const FeatureMap& features, std::span<const PointPrompt> prompts,
                        const SegmenterParams& params) {
    const int s = params.cfg.stride;
    const PromptCells cells = locate_prompts(features, prompts, s);
    const std::vector<double> q_pos = prompt_query(features, cells.pos, params.e_pos);
    const bool has_neg = !cells.neg.empty();
    std::vector<double> q_neg;
    if (has_neg) q_neg = prompt_query(features, cells.neg, params.e_neg);

    MaskLogits logits(features.rows * s, features.cols * s);
    std::vector<double> x(static_cast<std::size_t>(features.channels));
    for (int r = 0; r < features.rows; ++r) {
        for (int c = 0; c < features.cols; ++c) {
            for (int ch = 0; ch < features.channels; ++ch) x[ch] = features.at(ch, r, c);
            double logit = params.a_pos * guarded_cosine(x, q_pos) + params.c;
            if (has_neg) logit -= params.a_neg * guarded_cosine(x, q_neg);
            for (int dy = 0; dy < s; ++dy) {
                for (int dx = 0; dx < s; ++dx) {
                    logits.at(r * s + dy, c * s + dx) = logit;
                }
            }
        }
    }
    return logits;
}

void decode_backward(const FeatureMap& features, std::span<const PointPrompt> prompts,
                     const SegmenterParams& params, const MaskLogits& dlogits,
                     ParamGrads& grads, FeatureMap& dfeatures) {
    const int s = params.cfg.stride;
    if (dlogits.height != features.rows * s || dlogits.width != features.cols * s) {
        throw std::invalid_argument("decode_backward: logit gradient shape mismatch");
    }
    const PromptCells cells = locate_prompts(features, prompts, s);
    const std::vector<double> q_pos = prompt_query(features, cells.pos, params.e_pos);
    const bool has_neg = !cells.neg.empty();
    std::vector<double> q_neg;
    if (has_neg) q_neg = prompt_query(features, cells.neg, params.e_neg);

    const int d = features.channels;
    std::vector<double> dq_pos(static_cast<std::size_t>(d), 0.0);
    std::vector<double> dq_neg(static_cast<std::size_t>(d), 0.0);
    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<double> gx(static_cast<std::size_t>(d));

    auto cosine_pair_grads = [&](std::span<const double> xv, std::span<const double> yv,
                                 double scale, std::span<double> dx, std::span<double> dy) {
        const double nx = norm(xv);
        const double ny = norm(yv);
        const double gx_den = (nx + kNormEps) * (ny + kNormEps);
        const double dxy = dot(xv, yv);
        for (int i = 0; i < d; ++i) {
            double g = yv[i] / gx_den;
            if (nx > 0.0) g -= dxy * xv[i] / (gx_den * (nx + kNormEps) * nx);
            dx[i] += scale * g;
            double h = xv[i] / gx_den;
            if (ny > 0.0) h -= dxy * yv[i] / (gx_den * (ny + kNormEps) * ny);
            dy[i] += scale * h;
        }
    };

    for (int r = 0; r < features.rows; ++r) {
        for (int c = 0; c < features.cols; ++c) {
            double gcell = 0.0;
            for (int dy = 0; dy < s; ++dy) {
                for (int dx = 0; dx < s; ++dx) {
                    gcell += dlogits.at(r * s + dy, c * s + dx);
                }
            }
            if (gcell == 0.0) continue;
            for (int ch = 0; ch < d; ++ch) x[ch] = features.at(ch, r, c);

            grads.c += gcell;
            grads.a_pos += gcell * guarded_cosine(x, q_pos);
            std::fill(gx.begin(), gx.end(), 0.0);
            cosine_pair_grads(x, q_pos, gcell * params.a_pos, gx, dq_pos);
            if (has_neg) {
                grads.a_neg -= gcell * guarded_cosine(x, q_neg);
                cosine_pair_grads(x, q_neg, -gcell * params.a_neg, gx, dq_neg);
            }
            for (int ch = 0; ch < d; ++ch) dfeatures.at(ch, r, c) += gx[ch];
        }
    }

    for (int ch = 0; ch < d; ++ch) grads.e_pos[ch] += dq_pos[ch];
    const double inv_pos = 1.0 / static_cast<double>(cells.pos.size());
    for (const auto& [r, c] : cells.pos) {
        for (int ch = 0; ch < d; ++ch) dfeatures.at(ch, r, c) += dq_pos[ch] * inv_pos;
    }
    if (has_neg) {
        for (int ch = 0; ch < d; ++ch) grads.e_neg[ch] += dq_neg[ch];
        const double inv_neg = 1.0 / static_cast<double>(cells.neg.size());
        for (const auto& [r, c] : cells.neg) {
            for (int ch = 0; ch < d; ++ch) dfeatures.at(ch, r, c) += dq_neg[ch] * inv_neg;
        }
    }
}

void encode_backward(const Image& image, const SegmenterParams& params,
                     const FeatureMap& dfeatures, ParamGrads& grads) {
    const int s = params.cfg.stride;
    const int d = params.cfg.feature_dim;
    const int r_rank = params.cfg.lora_rank;
    const std::vector<double> weff = effective_w1(params);

    // dL/dWeff = sum over cells of dpre * z0^T, accumulated densely.
    std::vector<double> dweff(static_cast<std::size_t>(d) * d, 0.0);
    std::vector<double> patch(static_cast<std::size_t>(params.patch_size()));
    std::vector<double> z0(static_cast<std::size_t>(d));
    std::vector<double> dpre(static_cast<std::size_t>(d));

    for (int r = 0; r < dfeatures.rows; ++r) {
        for (int c = 0; c < dfeatures.cols; ++c) {
            bool any = false;
            for (int i = 0; i < d; ++i) {
                if (dfeatures.at(i, r, c) != 0.0) { any = true; break; }
            }
            if (!any) continue;
            gather_patch(image, s, r, c, patch);
            embed_cell(params, patch, z0);
            for (int i = 0; i < d; ++i) {
                double pre = 0.0;
                const double* row = weff.data() + static_cast<std::size_t>(i) * d;
                for (int j = 0; j < d; ++j) pre += row[j] * z0[j];
                dpre[i] = pre > 0.0 ? dfeatures.at(i, r, c) : 0.0;
            }
            for (int i = 0; i < d; ++i) {
                if (dpre[i] == 0.0) continue;
                double* out = dweff.data() + static_cast<std::size_t>(i) * d;
                for (int j = 0; j < d; ++j) out[j] += dpre[i] * z0[j];
            }
        }
    }

    // dA1 = dWeff * B1^T, dB1 = A1^T * dWeff.
    for (int i = 0; i < d; ++i) {
        for (int k = 0; k < r_rank; ++k) {
            double acc = 0.0;
            for (int j = 0; j < d; ++j) {
                acc += dweff[static_cast<std::size_t>(i) * d + j] *
                       params.b1[static_cast<std::size_t>(k) * d + j];
            }
            grads.a1[static_cast<std::size_t>(i) * r_rank + k] += acc;
        }
    }
    for (int k = 0; k < r_rank; ++k) {
        for (int j = 0; j < d; ++j) {
            double acc = 0.0;
            for (int i = 0; i < d; ++i) {
                acc += params.a1[static_cast<std::size_t>(i) * r_rank + k] *
                       dweff[static_cast<std::size_t>(i) * d + j];
            }
            grads.b1[static_cast<std::size_t>(k) * d + j] += acc;
        }
    }
}

ParamGrads backward(const Image& image, const SegmenterParams& params,
                    std::span<const std::vector<PointPrompt>> prompts,
                    std::span<const MaskLogits> dlogits) {
    if (prompts.size() != dlogits.size()) {
        throw std::invalid_argument("backward: prompt sets and logit gradients disagree");
    }
    ParamGrads grads(params.cfg);
    const FeatureMap f = encode(image, params);
    FeatureMap df(f.channels, f.rows, f.cols);
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        decode_backward(f, prompts[i], params, dlogits[i], grads, df);
    }
    encode_backward(image, params, df, grads);
    return grads;
}

}  // namespace pointadapt
