#include "pointadapt/augment.hpp"

#include <algorithm>
#include <stdexcept>

namespace pointadapt {

namespace {

constexpr double kNoiseSigma = 0.05;
constexpr double kBrightnessLo = 0.8, kBrightnessHi = 1.25;
constexpr double kContrastLo = 0.8, kContrastHi = 1.25;
constexpr double kBlurProb = 0.3;

Image flip_image(const Image& src) {
    Image out(src.channels, src.height, src.width);
    for (int c = 0; c < src.channels; ++c) {
        for (int y = 0; y < src.height; ++y) {
            for (int x = 0; x < src.width; ++x) {
                out.at(c, y, x) = src.at(c, y, src.width - 1 - x);
            }
        }
    }
    return out;
}

BinaryMask flip_mask(const BinaryMask& src) {
    BinaryMask out(src.height, src.width);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            out.set(y, x, src.get(y, src.width - 1 - x));
        }
    }
    return out;
}

std::vector<PointPrompt> flip_prompts(const std::vector<PointPrompt>& src, int width) {
    std::vector<PointPrompt> out(src);
    for (PointPrompt& p : out) p.x = width - 1 - p.x;
    return out;
}

SceneView geometric_view(const Scene& scene, bool flipped) {
    SceneView view;
    view.flipped = flipped;
    view.image = flipped ? flip_image(scene.image) : scene.image;
    for (const SceneInstance& inst : scene.instances) {
        view.gt.push_back(flipped ? flip_mask(inst.gt_mask) : inst.gt_mask);
        InstancePromptSet prompts = inst.prompts;
        if (flipped) {
            prompts.positives = flip_prompts(prompts.positives, scene.image.width);
            prompts.negatives = flip_prompts(prompts.negatives, scene.image.width);
        }
        view.prompts.push_back(std::move(prompts));
    }
    return view;
}

void box_blur(Image& image) {
    Image src = image;
    for (int c = 0; c < image.channels; ++c) {
        for (int y = 0; y < image.height; ++y) {
            for (int x = 0; x < image.width; ++x) {
                double acc = 0.0;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int ny = std::clamp(y + dy, 0, image.height - 1);
                        const int nx = std::clamp(x + dx, 0, image.width - 1);
                        acc += src.at(c, ny, nx);
                    }
                }
                image.at(c, y, x) = acc / 9.0;
            }
        }
    }
}

}  // namespace

SceneView augment_weak(const Scene& scene, Rng& rng) {
    return geometric_view(scene, rng.bernoulli(0.5));
}

PhotometricParams draw_photometric(int height, int width, Rng& rng) {
    PhotometricParams p;
    p.additive_noise.resize(static_cast<std::size_t>(height) * width);
    for (double& n : p.additive_noise) n = rng.normal(0.0, kNoiseSigma);
    p.brightness = rng.uniform(kBrightnessLo, kBrightnessHi);
    p.contrast = rng.uniform(kContrastLo, kContrastHi);
    p.blur = rng.bernoulli(kBlurProb);
    return p;
}

void apply_photometric(Image& image, const PhotometricParams& params) {
    const std::size_t pixels = static_cast<std::size_t>(image.height) * image.width;
    if (params.additive_noise.size() != pixels) {
        throw std::invalid_argument("apply_photometric: noise field shape mismatch");
    }
    for (int c = 0; c < image.channels; ++c) {
        double* plane = image.values.data() + static_cast<std::size_t>(c) * pixels;
        for (std::size_t i = 0; i < pixels; ++i) plane[i] += params.additive_noise[i];
        for (std::size_t i = 0; i < pixels; ++i) plane[i] *= params.brightness;
        double mean = 0.0;
        for (std::size_t i = 0; i < pixels; ++i) mean += plane[i];
        mean /= static_cast<double>(pixels);
        for (std::size_t i = 0; i < pixels; ++i) {
            plane[i] = (plane[i] - mean) * params.contrast + mean;
        }
    }
    if (params.blur) box_blur(image);
    for (double& v : image.values) v = std::clamp(v, 0.0, 1.0);
}

SceneView augment_strong(const Scene& scene, bool flipped, Rng& rng) {
    SceneView view = geometric_view(scene, flipped);
    const PhotometricParams params =
        draw_photometric(view.image.height, view.image.width, rng);
    apply_photometric(view.image, params);
    return view;
}

}  // namespace pointadapt
