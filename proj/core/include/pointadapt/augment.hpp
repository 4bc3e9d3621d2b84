#pragma once

#include <vector>

#include "pointadapt/rng.hpp"
#include "pointadapt/scene.hpp"

namespace pointadapt {

// One augmented rendering of a scene. Prompts and ground truth follow the
// geometry pixel for pixel.
struct SceneView {
    Image image;
    std::vector<InstancePromptSet> prompts;
    std::vector<BinaryMask> gt;
    bool flipped = false;
};

struct PhotometricParams {
    std::vector<double> additive_noise;  // per pixel, row-major
    double brightness = 1.0;
    double contrast = 1.0;
    bool blur = false;
};

// Weak view: horizontal flip with probability 0.5, nothing else.
SceneView augment_weak(const Scene& scene, Rng& rng);

// Strong view: the weak view's flip (passed in, not redrawn) plus a
// photometric chain. At identity draws it equals the weak view exactly.
SceneView augment_strong(const Scene& scene, bool flipped, Rng& rng);

PhotometricParams draw_photometric(int height, int width, Rng& rng);

// Additive noise, then brightness scale, then contrast about the image mean,
// then an optional 3x3 box blur, then a clamp to [0, 1].
void apply_photometric(Image& image, const PhotometricParams& params);

}  // namespace pointadapt
