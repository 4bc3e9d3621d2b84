#include "doctest.h"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pointadapt/checkpoint.hpp"
#include "pointadapt/cli.hpp"
#include "pointadapt/scene_io.hpp"
#include "pointadapt/tensor_io.hpp"
#include "pointadapt/util.hpp"

using namespace pointadapt;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("pointadapt_test_" + std::to_string(counter()++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string str(const std::string& name) const { return (path / name).string(); }
};

std::vector<char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

bool same_file_bytes(const fs::path& a, const fs::path& b) {
    return slurp(a.string()) == slurp(b.string());
}

bool same_dir_bytes(const fs::path& a, const fs::path& b) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename().string());
    for (const auto& n : names)
        if (!fs::exists(b / n) || !same_file_bytes(a / n, b / n)) return false;
    std::size_t count_b = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(b)) ++count_b;
    return names.size() == count_b;
}

int run_cli(std::vector<std::string> args) {
    std::vector<char*> argv;
    args.insert(args.begin(), "pointadapt");
    for (auto& a : args) argv.push_back(a.data());
    return cli_dispatch(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("tensor files round-trip through f32") {
    TempDir tmp;
    const std::string path = tmp.str("t.tnsr");
    std::vector<std::uint32_t> dims = {2, 3};
    std::vector<double> data = {0.0, 1.0, -1.5, 0.25, 1e-3, 42.0};
    write_tensor(path, dims, data);
    auto t = read_tensor(path);
    CHECK(t.dims == dims);
    REQUIRE(t.data.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        CHECK(t.data[i] == doctest::Approx(data[i]).epsilon(1e-7));

    // Values already representable in f32 survive bit-exactly.
    CHECK(t.data[0] == 0.0);
    CHECK(t.data[1] == 1.0);
    CHECK(t.data[3] == 0.25);

    // A rewrite of what was read reproduces the file byte for byte.
    const std::string again = tmp.str("t2.tnsr");
    write_tensor(again, t.dims, t.data);
    CHECK(same_file_bytes(path, again));
}

TEST_CASE("malformed tensor files raise DataError") {
    TempDir tmp;
    const std::string path = tmp.str("bad.tnsr");
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOPE";
    }
    CHECK_THROWS_AS(read_tensor(path), DataError);

    const std::string truncated = tmp.str("trunc.tnsr");
    write_tensor(truncated, std::vector<std::uint32_t>{4}, std::vector<double>{1, 2, 3, 4});
    fs::resize_file(truncated, fs::file_size(truncated) - 5);
    CHECK_THROWS_AS(read_tensor(truncated), DataError);

    CHECK_THROWS_AS(read_tensor(tmp.str("missing.tnsr")), DataError);
}

TEST_CASE("checkpoints reload and re-save byte-identically") {
    TempDir tmp;
    auto params = init_segmenter(SegmenterConfig{}, 11);
    for (auto& v : params.b1) v = 0.125;
    params.c = -3.5;

    const auto dir_a = tmp.str("ck_a");
    save_checkpoint(dir_a, params, 11, 240);
    auto loaded = load_checkpoint(dir_a);
    CHECK(loaded.seed == 11);
    CHECK(loaded.steps == 240);
    CHECK(loaded.params.cfg.feature_dim == params.cfg.feature_dim);
    CHECK(loaded.params.c == params.c);
    CHECK(loaded.params.b1 == params.b1);

    const auto dir_b = tmp.str("ck_b");
    save_checkpoint(dir_b, loaded.params, loaded.seed, loaded.steps);
    CHECK(same_dir_bytes(dir_a, dir_b));
}

TEST_CASE("scenes round-trip through the directory format") {
    TempDir tmp;
    GeneratorSpec spec;
    spec.points_per_instance = 2;
    Scene scene = generate_scene(spec, 33);
    scene.id = 5;

    const auto dir = tmp.str("scene_00005");
    write_scene(scene, dir);
    Scene back = read_scene(dir);
    CHECK(back.id == scene.id);
    CHECK(back.domain == scene.domain);
    REQUIRE(back.instances.size() == scene.instances.size());
    for (std::size_t i = 0; i < scene.instances.size(); ++i) {
        CHECK(back.instances[i].gt_mask == scene.instances[i].gt_mask);
        CHECK(back.instances[i].prompts.positives.size() ==
              scene.instances[i].prompts.positives.size());
    }
    REQUIRE(back.image.values.size() == scene.image.values.size());
    for (std::size_t i = 0; i < scene.image.values.size(); ++i)
        CHECK(back.image.values[i] == doctest::Approx(scene.image.values[i]).epsilon(1e-7));
}

TEST_CASE("mask sets round-trip through json") {
    TempDir tmp;
    MaskSet set;
    set.height = 4;
    set.width = 5;
    set.ids = {3, 9};
    BinaryMask a(4, 5), b(4, 5);
    a.set(0, 0);
    a.set(3, 4);
    b.set(2, 2);
    set.masks = {a, b};
    const auto path = tmp.str("masks.json");
    write_masks_json(path, set);
    auto back = read_masks_json(path);
    CHECK(back.height == 4);
    CHECK(back.width == 5);
    CHECK(back.ids == set.ids);
    CHECK(back.masks == set.masks);
}

TEST_CASE("prototype sets round-trip with their sidecar") {
    TempDir tmp;
    PrototypeSet set;
    set.dim = 3;
    set.prototypes = {{1.0, 0.5, 0.25}, {0.0, -1.0, 2.0}};
    set.source_tag = "unit-test";
    const auto path = tmp.str("protos.tnsr");
    save_prototypes(set, path);
    auto back = load_prototypes(path);
    CHECK(back.dim == 3);
    CHECK(back.source_tag == "unit-test");
    REQUIRE(back.prototypes.size() == 2);
    CHECK(back.prototypes[0] == set.prototypes[0]);
    CHECK(back.prototypes[1] == set.prototypes[1]);
}

TEST_CASE("train config rejects unknown keys") {
    TempDir tmp;
    const auto good = tmp.str("good.json");
    {
        std::ofstream out(good);
        out << R"({"seed": 3, "steps": 10, "lr": 0.001,)"
            << R"( "toggles": {"self_training": true, "pbr": false, "npc": true}})";
    }
    auto cfg = load_train_config(good);
    CHECK(cfg.seed == 3);
    CHECK(cfg.steps == 10);
    CHECK(cfg.lr == doctest::Approx(0.001));
    CHECK(cfg.toggles.self_training);
    CHECK_FALSE(cfg.toggles.pbr);
    CHECK(cfg.toggles.npc);

    const auto bad = tmp.str("bad.json");
    {
        std::ofstream out(bad);
        out << R"({"seed": 3, "stepz": 10})";
    }
    CHECK_THROWS_AS(load_train_config(bad), DataError);

    const auto bad_toggle = tmp.str("bad_toggle.json");
    {
        std::ofstream out(bad_toggle);
        out << R"({"toggles": {"self_training": true, "npcc": true}})";
    }
    CHECK_THROWS_AS(load_train_config(bad_toggle), DataError);

    const auto flat_toggle = tmp.str("flat_toggle.json");
    {
        std::ofstream out(flat_toggle);
        out << R"({"npc": true})";
    }
    CHECK_THROWS_AS(load_train_config(flat_toggle), DataError);
}

TEST_CASE("generator spec loads from json and validates") {
    TempDir tmp;
    const auto path = tmp.str("spec.json");
    {
        std::ofstream out(path);
        out << R"({"domain": "speckled", "min_objects": 4, "max_objects": 6,)"
            << R"( "points_per_instance": 3, "weight_ring": 0.0})";
    }
    auto spec = load_generator_spec(path);
    CHECK(spec.domain == DomainTag::speckled);
    CHECK(spec.min_objects == 4);
    CHECK(spec.max_objects == 6);
    CHECK(spec.points_per_instance == 3);
    CHECK(spec.weight_ring == 0.0);

    const auto bad = tmp.str("bad_spec.json");
    {
        std::ofstream out(bad);
        out << R"({"domain": "speckled", "object_count": 4})";
    }
    CHECK_THROWS_AS(load_generator_spec(bad), DataError);
}

TEST_CASE("history csv carries one row per epoch") {
    TempDir tmp;
    std::vector<EpochRow> rows(3);
    for (int i = 0; i < 3; ++i) {
        rows[i].epoch = i;
        rows[i].miou = 0.1 * i;
        rows[i].f1 = 0.2 * i;
    }
    const auto path = tmp.str("history.csv");
    write_history_csv(path, rows);
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 4);  // header + 3 rows
}

TEST_CASE("cli maps usage and data errors to exit codes") {
    CHECK(run_cli({"no-such-command"}) == 1);
    CHECK(run_cli({"eval", "--data", "/nonexistent/dataset/dir", "--init-seed", "1"}) == 2);
    TempDir tmp;
    CHECK(run_cli({"adapt", "--data", tmp.str("empty"), "--config",
                   tmp.str("missing.json"), "--out", tmp.str("out")}) == 2);
}

TEST_CASE("cli gen then eval round-trips a dataset") {
    TempDir tmp;
    const auto spec_path = tmp.str("spec.json");
    {
        std::ofstream out(spec_path);
        out << R"({"domain": "clean", "min_objects": 2, "max_objects": 3,)"
            << R"( "points_per_instance": 2})";
    }
    const auto data_dir = tmp.str("data");
    CHECK(run_cli({"gen", "--spec", spec_path, "--seed", "9", "--count", "3",
                   "--out", data_dir}) == 0);
    auto scenes = load_dataset(data_dir);
    REQUIRE(scenes.size() == 3);
    CHECK(scenes[0].id == 0);
    CHECK(scenes[2].id == 2);
    CHECK(run_cli({"eval", "--data", data_dir, "--init-seed", "1", "--points", "1",
                   "--seed", "4"}) == 0);
}
