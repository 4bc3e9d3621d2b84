#include "pointadapt/scene_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "pointadapt/tensor_io.hpp"
#include "pointadapt/util.hpp"

namespace pointadapt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError(path + ": cannot open");
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError(path + ": cannot open for writing");
    f << j.dump(2) << "\n";
    if (!f) throw DataError(path + ": short write");
}

json prompts_to_json(const std::vector<PointPrompt>& prompts) {
    json arr = json::array();
    for (const PointPrompt& p : prompts) arr.push_back({p.x, p.y});
    return arr;
}

std::vector<PointPrompt> prompts_from_json(const json& arr, Polarity polarity,
                                           const std::string& path) {
    std::vector<PointPrompt> out;
    for (const json& p : arr) {
        if (!p.is_array() || p.size() != 2) {
            throw DataError(path + ": prompt must be an [x, y] pair");
        }
        out.push_back({p[0].get<int>(), p[1].get<int>(), polarity});
    }
    return out;
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& path) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) {
            throw DataError(path + ": unknown key \"" + key + "\"");
        }
    }
}

json rle_json(const BinaryMask& mask) {
    json arr = json::array();
    for (std::uint32_t run : rle_encode(mask)) arr.push_back(run);
    return arr;
}

BinaryMask mask_from_rle_json(int height, int width, const json& arr,
                              const std::string& path) {
    std::vector<std::uint32_t> runs;
    for (const json& r : arr) runs.push_back(r.get<std::uint32_t>());
    try {
        return rle_decode(height, width, runs);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

}  // namespace

void write_scene(const Scene& scene, const std::string& dir) {
    fs::create_directories(dir);
    json instances = json::array();
    for (const SceneInstance& inst : scene.instances) {
        instances.push_back({
            {"id", inst.id},
            {"rle", rle_json(inst.gt_mask)},
            {"positives", prompts_to_json(inst.prompts.positives)},
            {"negatives", prompts_to_json(inst.prompts.negatives)},
        });
    }
    const json manifest = {
        {"format", "pointadapt-scene"},
        {"version", 1},
        {"id", scene.id},
        {"seed", scene.seed},
        {"domain", domain_name(scene.domain)},
        {"channels", scene.image.channels},
        {"height", scene.image.height},
        {"width", scene.image.width},
        {"instances", instances},
    };
    write_json_file((fs::path(dir) / "manifest.json").string(), manifest);

    const std::vector<std::uint32_t> dims = {
        static_cast<std::uint32_t>(scene.image.channels),
        static_cast<std::uint32_t>(scene.image.height),
        static_cast<std::uint32_t>(scene.image.width)};
    write_tensor((fs::path(dir) / "image.tnsr").string(), dims, scene.image.values);
}

Scene read_scene(const std::string& dir) {
    const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
    const json m = read_json_file(manifest_path);
    try {
        if (m.at("format").get<std::string>() != "pointadapt-scene") {
            throw DataError(manifest_path + ": not a scene manifest");
        }
        if (m.at("version").get<int>() != 1) {
            throw DataError(manifest_path + ": unsupported version");
        }
        Scene scene;
        scene.id = m.at("id").get<int>();
        scene.seed = m.at("seed").get<std::uint64_t>();
        scene.domain = parse_domain(m.at("domain").get<std::string>());
        const int channels = m.at("channels").get<int>();
        const int height = m.at("height").get<int>();
        const int width = m.at("width").get<int>();

        const Tensor t = read_tensor((fs::path(dir) / "image.tnsr").string());
        if (t.dims != std::vector<std::uint32_t>{static_cast<std::uint32_t>(channels),
                                                 static_cast<std::uint32_t>(height),
                                                 static_cast<std::uint32_t>(width)}) {
            throw DataError(manifest_path + ": image.tnsr shape disagrees with manifest");
        }
        scene.image.channels = channels;
        scene.image.height = height;
        scene.image.width = width;
        scene.image.values = t.data;

        for (const json& ji : m.at("instances")) {
            SceneInstance inst;
            inst.id = ji.at("id").get<int>();
            inst.gt_mask = mask_from_rle_json(height, width, ji.at("rle"), manifest_path);
            inst.prompts.instance_id = inst.id;
            inst.prompts.positives =
                prompts_from_json(ji.at("positives"), Polarity::positive, manifest_path);
            inst.prompts.negatives =
                prompts_from_json(ji.at("negatives"), Polarity::negative, manifest_path);
            scene.instances.push_back(std::move(inst));
        }
        return scene;
    } catch (const json::exception& e) {
        throw DataError(manifest_path + ": " + e.what());
    }
}

std::vector<Scene> load_dataset(const std::string& dir) {
    if (!fs::is_directory(dir)) throw DataError(dir + ": not a directory");
    std::vector<Scene> scenes;
    for (const fs::directory_entry& entry : fs::directory_iterator(dir)) {
        if (!entry.is_directory()) continue;
        if (entry.path().filename().string().rfind("scene_", 0) != 0) continue;
        scenes.push_back(read_scene(entry.path().string()));
    }
    if (scenes.empty()) throw DataError(dir + ": no scene_* directories");
    std::sort(scenes.begin(), scenes.end(),
              [](const Scene& a, const Scene& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < scenes.size(); ++i) {
        if (scenes[i].id == scenes[i - 1].id) {
            throw DataError(dir + ": duplicate scene id " + std::to_string(scenes[i].id));
        }
    }
    return scenes;
}

void write_masks_json(const std::string& path, const MaskSet& set) {
    if (set.ids.size() != set.masks.size()) {
        throw std::invalid_argument("write_masks_json: id/mask count mismatch");
    }
    json masks = json::array();
    for (std::size_t i = 0; i < set.masks.size(); ++i) {
        if (set.masks[i].height != set.height || set.masks[i].width != set.width) {
            throw std::invalid_argument("write_masks_json: mask shape mismatch");
        }
        masks.push_back({{"id", set.ids[i]}, {"rle", rle_json(set.masks[i])}});
    }
    write_json_file(path, json{{"format", "pointadapt-masks"},
                               {"version", 1},
                               {"height", set.height},
                               {"width", set.width},
                               {"masks", masks}});
}

MaskSet read_masks_json(const std::string& path) {
    const json j = read_json_file(path);
    try {
        if (j.at("format").get<std::string>() != "pointadapt-masks") {
            throw DataError(path + ": not a mask file");
        }
        if (j.at("version").get<int>() != 1) {
            throw DataError(path + ": unsupported version");
        }
        MaskSet set;
        set.height = j.at("height").get<int>();
        set.width = j.at("width").get<int>();
        for (const json& jm : j.at("masks")) {
            set.ids.push_back(jm.at("id").get<int>());
            set.masks.push_back(mask_from_rle_json(set.height, set.width, jm.at("rle"), path));
        }
        return set;
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

void save_prototypes(const PrototypeSet& set, const std::string& path) {
    if (set.prototypes.empty()) {
        throw std::invalid_argument("save_prototypes: empty set");
    }
    std::vector<double> flat;
    for (const FeatureVector& p : set.prototypes) {
        if (static_cast<int>(p.size()) != set.dim) {
            throw std::invalid_argument("save_prototypes: inconsistent dims");
        }
        flat.insert(flat.end(), p.begin(), p.end());
    }
    const std::vector<std::uint32_t> dims = {
        static_cast<std::uint32_t>(set.prototypes.size()),
        static_cast<std::uint32_t>(set.dim)};
    write_tensor(path, dims, flat);
    write_json_file(path + ".json", json{{"dim", set.dim},
                                         {"count", set.prototypes.size()},
                                         {"source_tag", set.source_tag}});
}

PrototypeSet load_prototypes(const std::string& path) {
    const Tensor t = read_tensor(path);
    if (t.dims.size() != 2) throw DataError(path + ": prototype tensor must be rank 2");
    const json sidecar = read_json_file(path + ".json");
    PrototypeSet set;
    try {
        set.dim = sidecar.at("dim").get<int>();
        set.source_tag = sidecar.at("source_tag").get<std::string>();
        const std::size_t count = sidecar.at("count").get<std::size_t>();
        if (count != t.dims[0] || set.dim != static_cast<int>(t.dims[1])) {
            throw DataError(path + ".json: sidecar disagrees with tensor shape");
        }
    } catch (const json::exception& e) {
        throw DataError(path + ".json: " + e.what());
    }
    for (std::uint32_t i = 0; i < t.dims[0]; ++i) {
        set.prototypes.emplace_back(t.data.begin() + static_cast<std::ptrdiff_t>(i) * set.dim,
                                    t.data.begin() + static_cast<std::ptrdiff_t>(i + 1) * set.dim);
    }
    return set;
}

TrainConfig load_train_config(const std::string& path) {
    const json j = read_json_file(path);
    TrainConfig cfg;
    try {
        reject_unknown_keys(j,
                            {"seed", "steps", "lr", "weight_decay", "lambda_focal",
                             "lambda_match", "tau_iou", "npc_k", "bank_capacity",
                             "max_instances_per_image", "points_per_instance",
                             "lora_rank", "toggles"},
                            path);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.steps = j.value("steps", cfg.steps);
        cfg.lr = j.value("lr", cfg.lr);
        cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
        cfg.lambda_focal = j.value("lambda_focal", cfg.lambda_focal);
        cfg.lambda_match = j.value("lambda_match", cfg.lambda_match);
        cfg.tau_iou = j.value("tau_iou", cfg.tau_iou);
        cfg.npc_k = j.value("npc_k", cfg.npc_k);
        cfg.bank_capacity = j.value("bank_capacity", cfg.bank_capacity);
        cfg.max_instances_per_image =
            j.value("max_instances_per_image", cfg.max_instances_per_image);
        cfg.points_per_instance = j.value("points_per_instance", cfg.points_per_instance);
        cfg.lora_rank = j.value("lora_rank", cfg.lora_rank);
        if (j.contains("toggles")) {
            const json& t = j.at("toggles");
            reject_unknown_keys(t, {"self_training", "pbr", "npc"}, path);
            cfg.toggles.self_training = t.value("self_training", cfg.toggles.self_training);
            cfg.toggles.pbr = t.value("pbr", cfg.toggles.pbr);
            cfg.toggles.npc = t.value("npc", cfg.toggles.npc);
        }
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    if (cfg.steps < 0 || cfg.lr <= 0.0 || cfg.npc_k < 1 || cfg.bank_capacity < 1 ||
        cfg.points_per_instance < 1 || cfg.max_instances_per_image < 1 || cfg.lora_rank < 1) {
        throw DataError(path + ": config value out of range");
    }
    return cfg;
}

GeneratorSpec load_generator_spec(const std::string& path) {
    const json j = read_json_file(path);
    GeneratorSpec spec;
    try {
        reject_unknown_keys(j,
                            {"image_size", "min_objects", "max_objects",
                             "weight_rectangle", "weight_ellipse", "weight_ring",
                             "min_gap", "background", "contrast", "contrast_jitter",
                             "texture_amplitude", "domain", "speckle_sigma",
                             "clutter_blobs", "distractor_rings", "max_attempts",
                             "points_per_instance"},
                            path);
        spec.image_size = j.value("image_size", spec.image_size);
        spec.min_objects = j.value("min_objects", spec.min_objects);
        spec.max_objects = j.value("max_objects", spec.max_objects);
        spec.weight_rectangle = j.value("weight_rectangle", spec.weight_rectangle);
        spec.weight_ellipse = j.value("weight_ellipse", spec.weight_ellipse);
        spec.weight_ring = j.value("weight_ring", spec.weight_ring);
        spec.min_gap = j.value("min_gap", spec.min_gap);
        spec.background = j.value("background", spec.background);
        spec.contrast = j.value("contrast", spec.contrast);
        spec.contrast_jitter = j.value("contrast_jitter", spec.contrast_jitter);
        spec.texture_amplitude = j.value("texture_amplitude", spec.texture_amplitude);
        if (j.contains("domain")) {
            spec.domain = parse_domain(j.at("domain").get<std::string>());
        }
        spec.speckle_sigma = j.value("speckle_sigma", spec.speckle_sigma);
        spec.clutter_blobs = j.value("clutter_blobs", spec.clutter_blobs);
        spec.distractor_rings = j.value("distractor_rings", spec.distractor_rings);
        spec.max_attempts = j.value("max_attempts", spec.max_attempts);
        spec.points_per_instance = j.value("points_per_instance", spec.points_per_instance);
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    return spec;
}

void write_history_csv(const std::string& path, std::span<const EpochRow> rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError(path + ": cannot open for writing");
    f << "epoch,mIoU,F1,loss_focal,loss_dice,loss_iou,loss_match\n";
    f.precision(9);
    for (const EpochRow& r : rows) {
        f << r.epoch << ',' << r.miou << ',' << r.f1 << ',' << r.mean_losses.focal << ','
          << r.mean_losses.dice << ',' << r.mean_losses.iou << ',' << r.mean_losses.match
          << "\n";
    }
    if (!f) throw DataError(path + ": short write");
}

}  // namespace pointadapt
