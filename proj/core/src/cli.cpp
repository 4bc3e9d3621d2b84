#include "pointadapt/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pointadapt/checkpoint.hpp"
#include "pointadapt/gradcheck.hpp"
#include "pointadapt/npc.hpp"
#include "pointadapt/scene_io.hpp"
#include "pointadapt/train.hpp"
#include "pointadapt/util.hpp"

namespace pointadapt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string scene_dir_name(int id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "scene_%04d", id);
    return buf;
}

SegmenterParams params_from_source(const std::string& ckpt_dir, std::uint64_t init_seed) {
    if (!ckpt_dir.empty()) return load_checkpoint(ckpt_dir).params;
    return init_segmenter(SegmenterConfig{}, init_seed);
}

std::vector<double> parse_value_list(const std::string& csv) {
    std::vector<double> values;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw CLI::ValidationError("--values", "not a number: \"" + item + "\"");
        }
    }
    if (values.empty()) throw CLI::ValidationError("--values", "empty list");
    return values;
}

void cmd_gen(const std::string& spec_path, const std::string& out_dir, int count,
             std::uint64_t seed) {
    const GeneratorSpec spec =
        spec_path.empty() ? GeneratorSpec{} : load_generator_spec(spec_path);
    fs::create_directories(out_dir);
    Rng seed_rng = Rng::substream(seed, "scene-seeds");
    for (int i = 0; i < count; ++i) {
        Scene scene = generate_scene(spec, seed_rng.next_u64());
        scene.id = i;
        write_scene(scene, (fs::path(out_dir) / scene_dir_name(i)).string());
    }
    std::cout << "wrote " << count << " " << domain_name(spec.domain) << " scenes to "
              << out_dir << "\n";
}

void cmd_prototypes(const std::string& data_dir, const std::string& out_path,
                    const std::string& ckpt_dir, std::uint64_t seed) {
    const std::vector<Scene> scenes = load_dataset(data_dir);
    const SegmenterParams params = params_from_source(ckpt_dir, seed);
    const PrototypeSet targets = build_target_prototypes(scenes, params);
    save_prototypes(targets, out_path);
    std::cout << "built " << targets.prototypes.size() << " target prototypes (dim "
              << targets.dim << ") from " << scenes.size() << " scenes\n";
}

void cmd_adapt(const std::string& data_dir, const std::string& config_path,
               const std::string& out_dir) {
    const TrainConfig cfg = load_train_config(config_path);
    const std::vector<Scene> scenes = load_dataset(data_dir);
    const AdaptationResult result = run_adaptation(scenes, cfg);

    save_checkpoint(out_dir, result.params, cfg.seed, cfg.steps);
    write_history_csv((fs::path(out_dir) / "history.csv").string(), result.history);
    save_prototypes(result.targets, (fs::path(out_dir) / "target_prototypes.tnsr").string());

    const EpochRow& first = result.history.front();
    const EpochRow& last = result.history.back();
    std::cout << "adapted on " << result.train_scenes << " scenes ("
              << result.eval_scenes << " held out): miou " << first.miou << " -> "
              << last.miou << ", f1 " << first.f1 << " -> " << last.f1 << "\n";
}

void cmd_eval(const std::string& data_dir, const std::string& ckpt_dir,
              std::uint64_t init_seed, int points, std::uint64_t seed,
              const std::string& out_csv) {
    const std::vector<Scene> scenes = load_dataset(data_dir);
    const SegmenterParams params = params_from_source(ckpt_dir, init_seed);
    const std::vector<InstanceEval> rows =
        evaluate_per_instance(scenes, params, points, seed);
    if (!out_csv.empty()) {
        std::ofstream f(out_csv, std::ios::trunc);
        if (!f) throw DataError(out_csv + ": cannot open for writing");
        f.precision(9);
        f << "scene_id,instance_id,iou,dice\n";
        for (const InstanceEval& r : rows) {
            f << r.scene_id << ',' << r.instance_id << ',' << r.iou << ',' << r.dice << "\n";
        }
    }
    const EvalResult summary = summarize(rows);
    std::cout << "miou=" << summary.miou << " f1=" << summary.f1 << " instances="
              << rows.size() << " scenes=" << scenes.size() << "\n";
}

void cmd_calibrate(const std::string& scene_dir, const std::string& ckpt_dir,
                   double tau, int k, std::uint64_t seed, const std::string& out_dir) {
    const Scene scene = read_scene(scene_dir);
    const SegmenterParams params = params_from_source(ckpt_dir, 0);
    const FeatureMap features = encode(scene.image, params);
    std::vector<InstancePromptSet> prompts;
    for (const SceneInstance& inst : scene.instances) prompts.push_back(inst.prompts);

    Rng rng = Rng::substream(seed, "npc-select", static_cast<std::uint64_t>(scene.id));
    const CalibrationResult result = calibrate(features, prompts, params, tau, k, rng);

    fs::create_directories(out_dir);
    MaskSet refined;
    refined.height = scene.image.height;
    refined.width = scene.image.width;
    json report_instances = json::array();
    double miou_initial = 0.0, miou_refined = 0.0;
    for (std::size_t i = 0; i < scene.instances.size(); ++i) {
        const SceneInstance& inst = scene.instances[i];
        refined.ids.push_back(inst.id);
        refined.masks.push_back(result.refined[i]);
        json selected = json::array();
        for (const PointPrompt& p : result.selected_negatives[i]) {
            selected.push_back({p.x, p.y});
        }
        const double iou_init = mask_iou(result.initial[i], inst.gt_mask);
        const double iou_ref = mask_iou(result.refined[i], inst.gt_mask);
        miou_initial += iou_init;
        miou_refined += iou_ref;
        report_instances.push_back({{"id", inst.id},
                                    {"candidates", result.candidate_counts[i]},
                                    {"selected_negatives", selected},
                                    {"iou_initial", iou_init},
                                    {"iou_refined", iou_ref}});
    }
    const double inv = scene.instances.empty()
                           ? 0.0
                           : 1.0 / static_cast<double>(scene.instances.size());
    write_masks_json((fs::path(out_dir) / "calibrated_masks.json").string(), refined);
    const json report = {{"scene_id", scene.id},
                         {"tau_iou", tau},
                         {"k", k},
                         {"miou_initial", miou_initial * inv},
                         {"miou_refined", miou_refined * inv},
                         {"instances", report_instances}};
    std::ofstream rf((fs::path(out_dir) / "calibration_report.json").string(),
                     std::ios::trunc);
    if (!rf) throw DataError(out_dir + ": cannot write calibration_report.json");
    rf << report.dump(2) << "\n";
    std::cout << "calibrated " << scene.instances.size() << " instances: miou "
              << miou_initial * inv << " -> " << miou_refined * inv << "\n";
}

void cmd_boxgen(const std::string& masks_path, const std::string& out_csv) {
    const MaskSet set = read_masks_json(masks_path);
    std::ofstream f(out_csv, std::ios::trunc);
    if (!f) throw DataError(out_csv + ": cannot open for writing");
    f << "id,x_min,y_min,x_max,y_max\n";
    for (std::size_t i = 0; i < set.masks.size(); ++i) {
        if (set.masks[i].count() == 0) {
            throw DataError(masks_path + ": mask id " + std::to_string(set.ids[i]) +
                            " is empty, no box exists");
        }
        const HorizontalBox box = min_enclosing_box(set.masks[i]);
        f << set.ids[i] << ',' << box.x_min << ',' << box.y_min << ',' << box.x_max
          << ',' << box.y_max << "\n";
    }
    std::cout << "wrote " << set.masks.size() << " boxes to " << out_csv << "\n";
}

int cmd_gradcheck(int configs, double step, double tol) {
    const GradcheckReport report = run_gradcheck(configs, step, tol, std::cout);
    return report.ok() ? 0 : 2;
}

void cmd_sweep_tau(const std::string& data_dir, const std::string& ckpt_dir,
                   const std::vector<double>& taus, int k, std::uint64_t seed,
                   const std::string& out_csv) {
    const std::vector<Scene> scenes = load_dataset(data_dir);
    const SegmenterParams params = params_from_source(ckpt_dir, 0);
    std::ofstream f(out_csv, std::ios::trunc);
    if (!f) throw DataError(out_csv + ": cannot open for writing");
    f.precision(9);
    f << "tau_iou,miou_initial,miou_refined,f1_refined,overlap_initial,overlap_refined\n";
    for (double tau : taus) {
        const DatasetCalibration c = calibrate_dataset(scenes, params, tau, k, seed);
        f << tau << ',' << c.miou_initial << ',' << c.miou_refined << ',' << c.f1_refined
          << ',' << c.mean_overlap_initial << ',' << c.mean_overlap_refined << "\n";
        std::cout << "tau=" << tau << " miou " << c.miou_initial << " -> "
                  << c.miou_refined << " overlap " << c.mean_overlap_initial << " -> "
                  << c.mean_overlap_refined << "\n";
    }
}

void cmd_sweep_points(const std::string& data_dir, const std::string& config_path,
                      const std::vector<double>& values, const std::string& out_csv) {
    TrainConfig cfg = load_train_config(config_path);
    const std::vector<Scene> scenes = load_dataset(data_dir);
    std::ofstream f(out_csv, std::ios::trunc);
    if (!f) throw DataError(out_csv + ": cannot open for writing");
    f.precision(9);
    f << "points,baseline_miou,final_miou,final_f1\n";
    for (double v : values) {
        const int points = static_cast<int>(v);
        if (points < 1 || static_cast<double>(points) != v) {
            throw DataError("sweep points: value " + std::to_string(v) +
                            " is not a positive integer");
        }
        cfg.points_per_instance = points;
        const AdaptationResult result = run_adaptation(scenes, cfg);
        const EpochRow& first = result.history.front();
        const EpochRow& last = result.history.back();
        f << points << ',' << first.miou << ',' << last.miou << ',' << last.f1 << "\n";
        std::cout << "points=" << points << " miou " << first.miou << " -> " << last.miou
                  << "\n";
    }
}

}  // namespace

int cli_dispatch(int argc, char** argv) {
    CLI::App app{"point-prompted segmenter adaptation toolkit"};
    app.require_subcommand(1);
    int exit_code = 0;

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic scene dataset");
    std::string gen_spec, gen_out;
    int gen_count = 1;
    std::uint64_t gen_seed = 0;
    gen->add_option("--spec", gen_spec, "generator spec JSON (defaults when omitted)");
    gen->add_option("--out", gen_out, "output dataset directory")->required();
    gen->add_option("--count", gen_count, "number of scenes")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "base seed");
    gen->callback([&] { cmd_gen(gen_spec, gen_out, gen_count, gen_seed); });

    // prototypes
    auto* proto = app.add_subcommand("prototypes", "build target prototypes from a dataset");
    std::string proto_data, proto_out, proto_ckpt;
    std::uint64_t proto_seed = 0;
    proto->add_option("--data", proto_data, "dataset directory")->required();
    proto->add_option("--out", proto_out, "output tensor file")->required();
    proto->add_option("--ckpt", proto_ckpt, "checkpoint to take source weights from");
    proto->add_option("--seed", proto_seed, "init seed when no checkpoint is given");
    proto->callback([&] { cmd_prototypes(proto_data, proto_out, proto_ckpt, proto_seed); });

    // adapt
    auto* adapt = app.add_subcommand("adapt", "self-train on a dataset");
    std::string adapt_data, adapt_config, adapt_out;
    adapt->add_option("--data", adapt_data, "dataset directory")->required();
    adapt->add_option("--config", adapt_config, "training config JSON")->required();
    adapt->add_option("--out", adapt_out, "output checkpoint directory")->required();
    adapt->callback([&] { cmd_adapt(adapt_data, adapt_config, adapt_out); });

    // eval
    auto* eval = app.add_subcommand("eval", "prompt-based evaluation of a model");
    std::string eval_data, eval_ckpt, eval_out;
    std::uint64_t eval_init_seed = 0, eval_seed = 0;
    int eval_points = 1;
    eval->add_option("--data", eval_data, "dataset directory")->required();
    eval->add_option("--ckpt", eval_ckpt, "checkpoint directory");
    eval->add_option("--init-seed", eval_init_seed,
                     "evaluate a fresh source model with this seed instead of a checkpoint");
    eval->add_option("--points", eval_points, "positive prompts per instance")
        ->check(CLI::PositiveNumber);
    eval->add_option("--seed", eval_seed, "prompt sampling seed");
    eval->add_option("--out", eval_out, "per-instance CSV path");
    eval->callback([&] {
        cmd_eval(eval_data, eval_ckpt, eval_init_seed, eval_points, eval_seed, eval_out);
    });

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "negative-prompt calibration on one scene");
    std::string cal_scene, cal_ckpt, cal_out = ".";
    double cal_tau = 0.1;
    int cal_k = 1;
    std::uint64_t cal_seed = 0;
    cal->add_option("--scene", cal_scene, "scene directory")->required();
    cal->add_option("--ckpt", cal_ckpt, "checkpoint directory (fresh init when omitted)");
    cal->add_option("--tau", cal_tau, "overlap threshold")->check(CLI::NonNegativeNumber);
    cal->add_option("--k", cal_k, "negatives per instance")->check(CLI::PositiveNumber);
    cal->add_option("--seed", cal_seed, "selection seed");
    cal->add_option("--out", cal_out, "output directory");
    cal->callback([&] { cmd_calibrate(cal_scene, cal_ckpt, cal_tau, cal_k, cal_seed, cal_out); });

    // boxgen
    auto* box = app.add_subcommand("boxgen", "emit min enclosing boxes for a mask file");
    std::string box_masks, box_out;
    box->add_option("--masks", box_masks, "mask JSON file")->required();
    box->add_option("--out", box_out, "output CSV path")->required();
    box->callback([&] { cmd_boxgen(box_masks, box_out); });

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    int gc_configs = 50;
    double gc_step = 1e-5, gc_tol = 1e-4;
    gc->add_option("--configs", gc_configs, "number of seeded configurations")
        ->check(CLI::PositiveNumber);
    gc->add_option("--step", gc_step, "central difference step")->check(CLI::PositiveNumber);
    gc->add_option("--tol", gc_tol, "relative error tolerance")->check(CLI::PositiveNumber);
    gc->callback([&] { exit_code = cmd_gradcheck(gc_configs, gc_step, gc_tol); });

    // sweep
    auto* sweep = app.add_subcommand("sweep", "parameter sweeps");
    std::string sweep_param, sweep_values, sweep_data, sweep_ckpt, sweep_config, sweep_out;
    int sweep_k = 1;
    std::uint64_t sweep_seed = 0;
    sweep->add_option("--param", sweep_param, "tau_iou or points")->required();
    sweep->add_option("--values", sweep_values, "comma-separated values")->required();
    sweep->add_option("--data", sweep_data, "dataset directory")->required();
    sweep->add_option("--ckpt", sweep_ckpt, "checkpoint (tau_iou sweep)");
    sweep->add_option("--config", sweep_config, "training config JSON (points sweep)");
    sweep->add_option("--k", sweep_k, "negatives per instance (tau_iou sweep)")
        ->check(CLI::PositiveNumber);
    sweep->add_option("--seed", sweep_seed, "selection seed (tau_iou sweep)");
    sweep->add_option("--out", sweep_out, "output CSV path")->required();
    sweep->callback([&] {
        const std::vector<double> values = parse_value_list(sweep_values);
        if (sweep_param == "tau_iou") {
            cmd_sweep_tau(sweep_data, sweep_ckpt, values, sweep_k, sweep_seed, sweep_out);
        } else if (sweep_param == "points") {
            if (sweep_config.empty()) {
                throw CLI::ValidationError("--config", "required for the points sweep");
            }
            cmd_sweep_points(sweep_data, sweep_config, values, sweep_out);
        } else {
            throw CLI::ValidationError("--param", "must be tau_iou or points");
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
            return app.exit(e);
        }
        app.exit(e);
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return exit_code;
}

}  // namespace pointadapt
