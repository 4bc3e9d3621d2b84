#pragma once

#include <cstdint>
#include <string>

#include "pointadapt/segmenter.hpp"

namespace pointadapt {

struct Checkpoint {
    SegmenterParams params;
    std::uint64_t seed = 0;
    int steps = 0;
};

// Checkpoint directory: manifest.json with the model shape plus one tensor
// file per parameter array. Values are stored as f32; loading and re-saving
// reproduces the files byte for byte.
void save_checkpoint(const std::string& dir, const SegmenterParams& params,
                     std::uint64_t seed, int steps);

Checkpoint load_checkpoint(const std::string& dir);

}  // namespace pointadapt
