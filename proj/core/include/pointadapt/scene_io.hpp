#pragma once

#include <span>
#include <string>
#include <vector>

#include "pointadapt/prototypes.hpp"
#include "pointadapt/scene.hpp"
#include "pointadapt/train.hpp"

namespace pointadapt {

// One scene on disk is a directory holding manifest.json (ids, prompts,
// run-length masks) and image.tnsr.
void write_scene(const Scene& scene, const std::string& dir);
Scene read_scene(const std::string& dir);

// Reads every scene_* subdirectory, sorted by scene id.
std::vector<Scene> load_dataset(const std::string& dir);

struct MaskSet {
    int height = 0;
    int width = 0;
    std::vector<int> ids;
    std::vector<BinaryMask> masks;
};

void write_masks_json(const std::string& path, const MaskSet& set);
MaskSet read_masks_json(const std::string& path);

// Tensor file at path plus a path + ".json" sidecar with dim, count and
// source_tag.
void save_prototypes(const PrototypeSet& set, const std::string& path);
PrototypeSet load_prototypes(const std::string& path);

TrainConfig load_train_config(const std::string& path);
GeneratorSpec load_generator_spec(const std::string& path);

void write_history_csv(const std::string& path, std::span<const EpochRow> rows);

}  // namespace pointadapt
