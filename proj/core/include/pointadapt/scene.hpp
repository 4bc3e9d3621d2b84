#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pointadapt/image.hpp"
#include "pointadapt/mask.hpp"
#include "pointadapt/rng.hpp"
#include "pointadapt/segmenter.hpp"

namespace pointadapt {

enum class DomainTag { clean, cluttered, speckled };

std::string domain_name(DomainTag tag);
DomainTag parse_domain(const std::string& name);

// Prompts for one instance. Negatives start empty and are filled by
// calibration; the polarity of every stored prompt matches its sequence.
struct InstancePromptSet {
    int instance_id = 0;
    std::vector<PointPrompt> positives;
    std::vector<PointPrompt> negatives;

    std::vector<PointPrompt> all() const;
};

struct SceneInstance {
    int id = 0;
    BinaryMask gt_mask;
    InstancePromptSet prompts;
};

struct Scene {
    int id = 0;
    std::uint64_t seed = 0;
    DomainTag domain = DomainTag::clean;
    Image image;
    std::vector<SceneInstance> instances;
};

struct GeneratorSpec {
    int image_size = 64;
    int min_objects = 6;
    int max_objects = 14;
    double weight_rectangle = 1.0;
    double weight_ellipse = 1.0;
    double weight_ring = 1.0;
    int min_gap = 1;
    double background = 0.45;
    double contrast = 0.15;
    double contrast_jitter = 0.5;
    double texture_amplitude = 0.4;
    DomainTag domain = DomainTag::speckled;
    double speckle_sigma = 0.3;
    int clutter_blobs = 6;
    int distractor_rings = 2;
    int max_attempts = 200;
    int points_per_instance = 1;
};

// Deterministic in (spec, seed). Ground-truth masks are pairwise disjoint
// and separated by at least min_gap pixels (Chebyshev). Raises DataError if
// no object can be placed.
Scene generate_scene(const GeneratorSpec& spec, std::uint64_t seed);

// n positive prompts drawn uniformly over mask pixels, without replacement
// when the mask has at least n pixels and with replacement otherwise, plus
// n negative prompts drawn uniformly without replacement over pixels outside
// the mask. instance_id is left for the caller.
InstancePromptSet sample_prompts(const BinaryMask& gt, int n, Rng& rng);

}  // namespace pointadapt
