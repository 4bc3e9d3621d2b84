#include "pointadapt/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "pointadapt/tensor_io.hpp"
#include "pointadapt/util.hpp"

namespace pointadapt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_param(const std::string& dir, const char* name,
                 std::initializer_list<std::uint32_t> dims,
                 std::span<const double> data) {
    write_tensor((fs::path(dir) / (std::string(name) + ".tnsr")).string(),
                 std::vector<std::uint32_t>(dims), data);
}

std::vector<double> read_param(const std::string& dir, const char* name,
                               const std::vector<std::uint32_t>& want_dims) {
    const std::string path = (fs::path(dir) / (std::string(name) + ".tnsr")).string();
    Tensor t = read_tensor(path);
    if (t.dims != want_dims) {
        throw DataError(path + ": unexpected shape for parameter " + name);
    }
    return std::move(t.data);
}

}  // namespace

void save_checkpoint(const std::string& dir, const SegmenterParams& params,
                     std::uint64_t seed, int steps) {
    fs::create_directories(dir);
    const auto& cfg = params.cfg;
    const json manifest = {
        {"format", "pointadapt-checkpoint"},
        {"version", 1},
        {"in_channels", cfg.in_channels},
        {"stride", cfg.stride},
        {"feature_dim", cfg.feature_dim},
        {"lora_rank", cfg.lora_rank},
        {"seed", seed},
        {"steps", steps},
    };
    std::ofstream mf((fs::path(dir) / "manifest.json").string(), std::ios::trunc);
    if (!mf) throw DataError(dir + "/manifest.json: cannot open for writing");
    mf << manifest.dump(2) << "\n";

    const auto d = static_cast<std::uint32_t>(cfg.feature_dim);
    const auto r = static_cast<std::uint32_t>(cfg.lora_rank);
    const auto ps = static_cast<std::uint32_t>(params.patch_size());
    write_param(dir, "w0", {d, ps}, params.w0);
    write_param(dir, "b0", {d}, params.b0);
    write_param(dir, "w1", {d, d}, params.w1);
    write_param(dir, "a1", {d, r}, params.a1);
    write_param(dir, "b1", {r, d}, params.b1);
    write_param(dir, "e_pos", {d}, params.e_pos);
    write_param(dir, "e_neg", {d}, params.e_neg);
    const double scalars[1] = {params.a_pos};
    write_param(dir, "a_pos", {1}, scalars);
    const double scalars_n[1] = {params.a_neg};
    write_param(dir, "a_neg", {1}, scalars_n);
    const double scalars_c[1] = {params.c};
    write_param(dir, "c", {1}, scalars_c);
}

Checkpoint load_checkpoint(const std::string& dir) {
    const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
    std::ifstream mf(manifest_path);
    if (!mf) throw DataError(manifest_path + ": cannot open");
    json manifest;
    try {
        manifest = json::parse(mf);
        if (manifest.at("format").get<std::string>() != "pointadapt-checkpoint") {
            throw DataError(manifest_path + ": not a checkpoint manifest");
        }
        if (manifest.at("version").get<int>() != 1) {
            throw DataError(manifest_path + ": unsupported version");
        }
    } catch (const json::exception& e) {
        throw DataError(manifest_path + ": " + e.what());
    }

    Checkpoint ckpt;
    try {
        ckpt.params.cfg.in_channels = manifest.at("in_channels").get<int>();
        ckpt.params.cfg.stride = manifest.at("stride").get<int>();
        ckpt.params.cfg.feature_dim = manifest.at("feature_dim").get<int>();
        ckpt.params.cfg.lora_rank = manifest.at("lora_rank").get<int>();
        ckpt.seed = manifest.at("seed").get<std::uint64_t>();
        ckpt.steps = manifest.at("steps").get<int>();
    } catch (const json::exception& e) {
        throw DataError(manifest_path + ": " + e.what());
    }

    const auto& cfg = ckpt.params.cfg;
    if (cfg.in_channels < 1 || cfg.stride < 1 || cfg.feature_dim < 1 || cfg.lora_rank < 1) {
        throw DataError(manifest_path + ": invalid model shape");
    }
    const auto d = static_cast<std::uint32_t>(cfg.feature_dim);
    const auto r = static_cast<std::uint32_t>(cfg.lora_rank);
    const auto ps = static_cast<std::uint32_t>(ckpt.params.patch_size());
    ckpt.params.w0 = read_param(dir, "w0", {d, ps});
    ckpt.params.b0 = read_param(dir, "b0", {d});
    ckpt.params.w1 = read_param(dir, "w1", {d, d});
    ckpt.params.a1 = read_param(dir, "a1", {d, r});
    ckpt.params.b1 = read_param(dir, "b1", {r, d});
    ckpt.params.e_pos = read_param(dir, "e_pos", {d});
    ckpt.params.e_neg = read_param(dir, "e_neg", {d});
    ckpt.params.a_pos = read_param(dir, "a_pos", {1})[0];
    ckpt.params.a_neg = read_param(dir, "a_neg", {1})[0];
    ckpt.params.c = read_param(dir, "c", {1})[0];
    return ckpt;
}

}  // namespace pointadapt
