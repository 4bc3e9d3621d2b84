// Acceptance suite: one line per criterion, PASS or FAIL with measurements.
// Exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pointadapt/assignment.hpp"
#include "pointadapt/checkpoint.hpp"
#include "pointadapt/cli.hpp"
#include "pointadapt/clustering.hpp"
#include "pointadapt/gradcheck.hpp"
#include "pointadapt/mask.hpp"
#include "pointadapt/npc.hpp"
#include "pointadapt/prototypes.hpp"
#include "pointadapt/rng.hpp"
#include "pointadapt/scene.hpp"
#include "pointadapt/scene_io.hpp"
#include "pointadapt/segmenter.hpp"
#include "pointadapt/train.hpp"

using namespace pointadapt;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// ---------------------------------------------------------------------------
// Pinned benchmark protocol. Every dataset, seed, and training knob the
// ordering criteria depend on lives here so reruns are bit-reproducible.

namespace protocol {

GeneratorSpec benchmark_spec() {
    GeneratorSpec spec;
    spec.domain = DomainTag::speckled;
    spec.weight_ring = 0.0;
    spec.points_per_instance = 3;
    return spec;
}

constexpr std::uint64_t kSourceSeed = 1;      // untrained source model
constexpr std::uint64_t kCalibDataSeed = 7;   // criterion 4 dataset
constexpr std::uint64_t kCalibSelectSeed = 11;
constexpr std::uint64_t kTrainBenchSeed = 101;
constexpr std::uint64_t kTestBenchSeed = 202;
constexpr std::uint64_t kEvalPromptSeed = 7;
constexpr int kCalibScenes = 200;
constexpr int kTrainScenes = 40;
constexpr int kTestScenes = 80;
constexpr double kAblationMargin = 0.03;  // criterion 5, mIoU points
constexpr double kPointsMargin = 0.02;    // criterion 6, mIoU points

TrainConfig ablation_config(std::uint64_t seed, bool pbr, bool npc, int points) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.steps = 1920;
    cfg.lr = 1e-3;
    cfg.points_per_instance = points;
    cfg.toggles.self_training = true;
    cfg.toggles.pbr = pbr;
    cfg.toggles.npc = npc;
    return cfg;
}

std::vector<Scene> make_dataset(std::uint64_t base_seed, int count) {
    // Mirrors the gen command: per-scene seeds from the scene-seeds substream.
    const GeneratorSpec spec = benchmark_spec();
    Rng seed_rng = Rng::substream(base_seed, "scene-seeds");
    std::vector<Scene> scenes;
    scenes.reserve(count);
    for (int i = 0; i < count; ++i) {
        scenes.push_back(generate_scene(spec, seed_rng.next_u64()));
        scenes.back().id = i;
    }
    return scenes;
}

double test_miou(std::span<const Scene> test_set, const SegmenterParams& params,
                 int points) {
    return summarize(evaluate_per_instance(test_set, params, points, kEvalPromptSeed))
        .miou;
}

}  // namespace protocol

// ---------------------------------------------------------------------------
// Criterion 1: hungarian_match against exhaustive enumeration.

struct BruteAssignment {
    const DistanceMatrix& d;
    std::vector<std::pair<int, int>> current, best;
    std::vector<bool> col_used;
    double best_cost = std::numeric_limits<double>::infinity();
    int need = 0;

    explicit BruteAssignment(const DistanceMatrix& m) : d(m), col_used(m.cols, false) {
        need = std::min(d.rows, d.cols);
        recurse(0, 0.0);
    }

    void recurse(int row, double cost) {
        if (static_cast<int>(current.size()) == need) {
            if (cost < best_cost || (cost == best_cost && current < best)) {
                best_cost = cost;
                best = current;
            }
            return;
        }
        if (row == d.rows) return;
        if (d.rows - row > need - static_cast<int>(current.size())) recurse(row + 1, cost);
        for (int col = 0; col < d.cols; ++col) {
            if (col_used[col]) continue;
            col_used[col] = true;
            current.emplace_back(row, col);
            recurse(row + 1, cost + d.at(row, col));
            current.pop_back();
            col_used[col] = false;
        }
    }
};

Outcome criterion_assignment() {
    const auto start = Clock::now();
    Rng rng(2024);
    int mismatches = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        const int rows = 1 + static_cast<int>(rng.uniform_int(7));
        const int cols = 1 + static_cast<int>(rng.uniform_int(7));
        DistanceMatrix d(rows, cols);
        // Dyadic entries keep tie comparisons exact.
        for (auto& v : d.entries) v = static_cast<double>(rng.uniform_int(256)) / 128.0;
        const Assignment got = hungarian_match(d);
        const BruteAssignment want(d);
        if (got.cost != want.best_cost || got.pairs != want.best) ++mismatches;
    }
    const double secs = seconds_since(start);
    std::ostringstream os;
    os << trials << " matrices up to 7x7, " << mismatches << " mismatches, "
       << std::fixed << secs << " s";
    return {mismatches == 0 && secs < 30.0, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 2: finch_partition against first-neighbor adjacency components.

std::vector<int> components_oracle(const std::vector<FeatureVector>& f) {
    const int n = static_cast<int>(f.size());
    std::vector<int> nn(n, -1);
    for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dist = cosine_distance(f[i], f[j]);
            if (dist < best) {
                best = dist;
                nn[i] = j;
            }
        }
    }
    std::vector<std::vector<int>> adj(n);
    for (int i = 0; i < n; ++i) {
        adj[i].push_back(nn[i]);
        adj[nn[i]].push_back(i);
        for (int j = 0; j < i; ++j)
            if (nn[i] == nn[j]) {
                adj[i].push_back(j);
                adj[j].push_back(i);
            }
    }
    std::vector<int> label(n, -1);
    int next = 0;
    for (int s = 0; s < n; ++s) {
        if (label[s] >= 0) continue;
        std::vector<int> stack = {s};
        label[s] = next;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v : adj[u])
                if (label[v] < 0) {
                    label[v] = next;
                    stack.push_back(v);
                }
        }
        ++next;
    }
    return label;
}

Outcome criterion_clustering() {
    const auto start = Clock::now();
    Rng rng(4048);
    int mismatches = 0;
    const int trials = 500;
    for (int t = 0; t < trials; ++t) {
        const int n = 2 + static_cast<int>(rng.uniform_int(63));
        const int dim = 2 + static_cast<int>(rng.uniform_int(15));
        std::vector<FeatureVector> f(n, FeatureVector(dim));
        for (auto& v : f) {
            double norm2 = 0.0;
            for (auto& x : v) {
                x = rng.normal();
                norm2 += x * x;
            }
            if (norm2 < 1e-9) v[0] = 1.0;
        }
        const auto got = finch_partition(f);
        const auto want = components_oracle(f);
        if (got.labels != want) ++mismatches;
    }
    const double secs = seconds_since(start);
    std::ostringstream os;
    os << trials << " feature sets (n<=64, dim<=16), " << mismatches << " mismatches, "
       << std::fixed << secs << " s";
    return {mismatches == 0 && secs < 30.0, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 3: finite-difference gradient suite.

Outcome criterion_gradients() {
    const auto start = Clock::now();
    std::ostringstream log;
    const GradcheckReport report = run_gradcheck(50, 1e-5, 1e-4, log);
    const double secs = seconds_since(start);
    std::ostringstream os;
    os << report.configs << " configs, " << report.checks << " coordinates, "
       << report.failures << " failures, worst rel err " << std::scientific
       << report.worst_rel_err << ", " << std::fixed << secs << " s";
    if (!report.ok()) os << "\n" << log.str();
    return {report.ok() && secs < 120.0, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 4: negative-prompt calibration effect and tau sweep.

Outcome criterion_npc_effect() {
    const auto start = Clock::now();
    const auto scenes =
        protocol::make_dataset(protocol::kCalibDataSeed, protocol::kCalibScenes);
    const auto params = init_segmenter(SegmenterConfig{}, protocol::kSourceSeed);

    const DatasetCalibration at_default = calibrate_dataset(
        scenes, params, 0.1, 1, protocol::kCalibSelectSeed);

    std::ofstream csv("acceptance_tau_sweep.csv");
    csv << "tau,miou_initial,miou_refined,f1_initial,f1_refined,overlap_initial,"
           "overlap_refined\n";
    int declines = 0, rises = 0;
    double prev_refined = -1.0;
    bool past_peak = false;
    double peak = -1.0;
    for (int i = 0; i <= 9; ++i) {
        const double tau = 0.1 * i;
        const DatasetCalibration r =
            calibrate_dataset(scenes, params, tau, 1, protocol::kCalibSelectSeed);
        csv << tau << "," << r.miou_initial << "," << r.miou_refined << ","
            << r.f1_initial << "," << r.f1_refined << "," << r.mean_overlap_initial
            << "," << r.mean_overlap_refined << "\n";
        if (r.miou_refined > peak) {
            peak = r.miou_refined;
        } else {
            past_peak = true;
        }
        if (past_peak && prev_refined >= 0.0) {
            (r.miou_refined <= prev_refined ? declines : rises)++;
        }
        prev_refined = r.miou_refined;
    }
    const double secs = seconds_since(start);

    const bool miou_ok = at_default.miou_refined >= at_default.miou_initial;
    const bool overlap_ok =
        at_default.mean_overlap_refined <= at_default.mean_overlap_initial;
    std::ostringstream os;
    os << protocol::kCalibScenes << " scenes, tau=0.1 k=1: mIoU "
       << at_default.miou_initial << " -> " << at_default.miou_refined << " ("
       << (miou_ok ? "ok" : "REGRESSED") << "), overlap "
       << at_default.mean_overlap_initial << " -> " << at_default.mean_overlap_refined
       << " (" << (overlap_ok ? "ok" : "REGRESSED")
       << "); sweep in acceptance_tau_sweep.csv, above-peak trend " << declines
       << " down / " << rises << " up (reported, not asserted), " << std::fixed << secs
       << " s";
    return {miou_ok && overlap_ok && secs < 120.0, os.str()};
}

// ---------------------------------------------------------------------------
// Criteria 5 and 6 share the adaptation runs, so they are computed together.

struct AblationRuns {
    double direct_n1 = 0.0, direct_n3 = 0.0;
    double st_n1[3] = {0, 0, 0};
    double full_n1[3] = {0, 0, 0};
    double st_n3[3] = {0, 0, 0};
    double full_n3[3] = {0, 0, 0};
    double ablation_secs = 0.0;
    double points_secs = 0.0;
    bool ready = false;
};

AblationRuns& ablation_runs() {
    static AblationRuns runs;
    if (runs.ready) return runs;
    const auto train_set =
        protocol::make_dataset(protocol::kTrainBenchSeed, protocol::kTrainScenes);
    const auto test_set =
        protocol::make_dataset(protocol::kTestBenchSeed, protocol::kTestScenes);
    const auto source = init_segmenter(SegmenterConfig{}, protocol::kSourceSeed);

    auto t0 = Clock::now();
    runs.direct_n1 = protocol::test_miou(test_set, source, 1);
    for (int i = 0; i < 3; ++i) {
        const std::uint64_t seed = static_cast<std::uint64_t>(i + 1);
        const auto st =
            run_adaptation(train_set, protocol::ablation_config(seed, false, false, 1));
        runs.st_n1[i] = protocol::test_miou(test_set, st.params, 1);
        const auto full =
            run_adaptation(train_set, protocol::ablation_config(seed, true, true, 1));
        runs.full_n1[i] = protocol::test_miou(test_set, full.params, 1);
    }
    runs.ablation_secs = seconds_since(t0);

    t0 = Clock::now();
    runs.direct_n3 = protocol::test_miou(test_set, source, 3);
    for (int i = 0; i < 3; ++i) {
        const std::uint64_t seed = static_cast<std::uint64_t>(i + 1);
        const auto st =
            run_adaptation(train_set, protocol::ablation_config(seed, false, false, 3));
        runs.st_n3[i] = protocol::test_miou(test_set, st.params, 3);
        const auto full =
            run_adaptation(train_set, protocol::ablation_config(seed, true, true, 3));
        runs.full_n3[i] = protocol::test_miou(test_set, full.params, 3);
    }
    runs.points_secs = seconds_since(t0);
    runs.ready = true;
    return runs;
}

double mean3(const double (&v)[3]) { return (v[0] + v[1] + v[2]) / 3.0; }

Outcome criterion_ablation_ordering() {
    const AblationRuns& runs = ablation_runs();
    const double direct = runs.direct_n1;
    const double st = mean3(runs.st_n1);
    const double full = mean3(runs.full_n1);
    const bool direct_le_st = direct <= st;
    const bool margin_ok = full - st >= protocol::kAblationMargin;
    std::ostringstream os;
    os << std::fixed;
    os.precision(4);
    os << "seed means over {1,2,3}: Direct " << direct << " <= ST " << st << " ("
       << (direct_le_st ? "ok" : "VIOLATED") << "), ST+PBR+NPC " << full << " - ST = "
       << (full - st) << " (need >= " << protocol::kAblationMargin << ", "
       << (margin_ok ? "ok" : "SHORT") << "), " << runs.ablation_secs << " s";
    return {direct_le_st && margin_ok && runs.ablation_secs < 900.0, os.str()};
}

Outcome criterion_more_points() {
    const AblationRuns& runs = ablation_runs();
    const double full_n1 = mean3(runs.full_n1);
    const double full_n3 = mean3(runs.full_n3);
    const bool stable = full_n3 >= full_n1 - protocol::kPointsMargin;

    std::ostringstream table;
    table << std::fixed;
    table.precision(4);
    table << "\n    config        N=1      N=3     (test mIoU per training seed)\n";
    for (int i = 0; i < 3; ++i)
        table << "    ST    seed " << (i + 1) << "  " << runs.st_n1[i] << "   "
              << runs.st_n3[i] << "\n";
    for (int i = 0; i < 3; ++i)
        table << "    full  seed " << (i + 1) << "  " << runs.full_n1[i] << "   "
              << runs.full_n3[i] << "\n";
    table << "    direct        " << runs.direct_n1 << "   " << runs.direct_n3 << "\n";
    table << "    full mean     " << full_n1 << "   " << full_n3
          << "  (ST-only may degrade; reported, not asserted)";

    std::ostringstream os;
    os << std::fixed;
    os.precision(4);
    os << "full-toggle mean mIoU N=3 " << full_n3 << " vs N=1 " << full_n1
       << " (allowed drop " << protocol::kPointsMargin << ", "
       << (stable ? "ok" : "DEGRADED") << "), " << runs.points_secs << " s"
       << table.str();
    return {stable, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 7: LoRA identity and merge agreement.

Outcome criterion_lora() {
    const auto start = Clock::now();
    Rng rng(77);
    const auto base = init_segmenter(SegmenterConfig{}, 5);

    // B1 = 0 at init: forward must be bit-identical to an explicitly zeroed
    // LoRA stack, whatever A1 holds.
    auto zeroed = base;
    for (auto& v : zeroed.a1) v = 0.0;
    int identity_mismatches = 0;
    for (int t = 0; t < 10; ++t) {
        Image img(1, 32, 32);
        for (auto& v : img.values) v = rng.uniform01();
        if (encode(img, base).values != encode(img, zeroed).values)
            ++identity_mismatches;
    }

    // Nonzero factors: merged forward within 1e-6 of unmerged.
    auto tuned = base;
    for (auto& v : tuned.a1) v = rng.uniform(-0.3, 0.3);
    for (auto& v : tuned.b1) v = rng.uniform(-0.3, 0.3);
    const auto merged = merge_lora(tuned);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        Image img(1, 24, 24);
        for (auto& v : img.values) v = rng.uniform01();
        const auto fa = encode(img, tuned);
        const auto fb = encode(img, merged);
        for (std::size_t i = 0; i < fa.values.size(); ++i)
            worst = std::max(worst, std::abs(fa.values[i] - fb.values[i]));
    }
    const double secs = seconds_since(start);
    std::ostringstream os;
    os << "identity mismatches " << identity_mismatches << "/10, merge max |diff| "
       << std::scientific << worst << " over 100 inputs, " << std::fixed << secs
       << " s";
    return {identity_mismatches == 0 && worst < 1e-6, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 8: bank invariants and byte-identical reruns.

std::vector<char> file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

bool dirs_byte_identical(const fs::path& a, const fs::path& b) {
    std::vector<std::string> names_a, names_b;
    for (const auto& e : fs::directory_iterator(a))
        names_a.push_back(e.path().filename().string());
    for (const auto& e : fs::directory_iterator(b))
        names_b.push_back(e.path().filename().string());
    std::sort(names_a.begin(), names_a.end());
    std::sort(names_b.begin(), names_b.end());
    if (names_a != names_b) return false;
    for (const auto& n : names_a)
        if (file_bytes(a / n) != file_bytes(b / n)) return false;
    return true;
}

Outcome criterion_determinism() {
    const auto start = Clock::now();

    Rng rng(88);
    bool bank_ok = true;
    for (const std::size_t cap : {std::size_t{1}, std::size_t{7}, std::size_t{64}}) {
        MemoryBank bank(cap);
        std::vector<FeatureVector> shadow;
        for (int i = 0; i < 300; ++i) {
            FeatureVector f = {static_cast<double>(i), rng.uniform01()};
            bank.push(f);
            shadow.push_back(f);
            if (shadow.size() > cap) shadow.erase(shadow.begin());
            if (bank.size() != shadow.size() || bank.size() > cap) bank_ok = false;
            for (std::size_t j = 0; j < shadow.size() && bank_ok; ++j)
                if (bank.queue()[j] != shadow[j]) bank_ok = false;
        }
    }

    // Two identical adaptation runs, checkpoints and histories written twice.
    GeneratorSpec spec = protocol::benchmark_spec();
    Rng seed_rng = Rng::substream(31, "scene-seeds");
    std::vector<Scene> scenes;
    for (int i = 0; i < 6; ++i) {
        scenes.push_back(generate_scene(spec, seed_rng.next_u64()));
        scenes.back().id = i;
    }
    TrainConfig cfg;
    cfg.seed = 9;
    cfg.steps = 30;
    const fs::path root =
        fs::temp_directory_path() / "pointadapt_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    for (const char* run : {"a", "b"}) {
        const AdaptationResult result = run_adaptation(scenes, cfg);
        const fs::path dir = root / run;
        save_checkpoint(dir.string(), result.params, cfg.seed, cfg.steps);
        write_history_csv((dir / "history.csv").string(), result.history);
        save_prototypes(result.targets, (dir / "target_prototypes.tnsr").string());
    }
    const bool files_ok = dirs_byte_identical(root / "a", root / "b");
    fs::remove_all(root);

    const double secs = seconds_since(start);
    std::ostringstream os;
    os << "bank invariants " << (bank_ok ? "ok" : "VIOLATED")
       << ", rerun checkpoint+history bytes " << (files_ok ? "identical" : "DIFFER")
       << ", " << std::fixed << secs << " s";
    return {bank_ok && files_ok, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 9: metric fixture with hand-counted values.

Outcome criterion_metrics() {
    struct Fixture {
        BinaryMask a, b;
        double iou, dice;
    };
    auto mask_of = [](int h, int w, std::initializer_list<std::pair<int, int>> yx) {
        BinaryMask m(h, w);
        for (auto [y, x] : yx) m.set(y, x);
        return m;
    };

    std::vector<Fixture> fixtures;
    // 1: the 2x2/2x2 offset squares: intersection 1, union 7.
    fixtures.push_back({mask_of(4, 4, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}),
                        mask_of(4, 4, {{1, 1}, {1, 2}, {2, 1}, {2, 2}}), 1.0 / 7.0,
                        0.25});
    // 2: both empty.
    fixtures.push_back({BinaryMask(3, 3), BinaryMask(3, 3), 1.0, 1.0});
    // 3: empty vs single pixel.
    fixtures.push_back({BinaryMask(3, 3), mask_of(3, 3, {{1, 1}}), 0.0, 0.0});
    // 4: identical three-pixel masks.
    fixtures.push_back({mask_of(3, 3, {{0, 0}, {1, 1}, {2, 2}}),
                        mask_of(3, 3, {{0, 0}, {1, 1}, {2, 2}}), 1.0, 1.0});
    // 5: disjoint same-size masks.
    fixtures.push_back({mask_of(2, 4, {{0, 0}, {0, 1}}), mask_of(2, 4, {{1, 2}, {1, 3}}),
                        0.0, 0.0});
    // 6: 2x2 nested in 4x4: intersection 4, union 16, dice 8/20.
    {
        BinaryMask outer(6, 6), inner(6, 6);
        for (int y = 1; y < 5; ++y)
            for (int x = 1; x < 5; ++x) outer.set(y, x);
        inner.set(2, 2);
        inner.set(2, 3);
        inner.set(3, 2);
        inner.set(3, 3);
        fixtures.push_back({outer, inner, 4.0 / 16.0, 8.0 / 20.0});
    }
    // 7: half-overlapping rows: intersection 2, union 6, dice 4/8.
    fixtures.push_back({mask_of(1, 8, {{0, 0}, {0, 1}, {0, 2}, {0, 3}}),
                        mask_of(1, 8, {{0, 2}, {0, 3}, {0, 4}, {0, 5}}), 2.0 / 6.0,
                        0.5});
    // 8: single shared pixel out of 3+1.
    fixtures.push_back({mask_of(2, 2, {{0, 0}, {0, 1}, {1, 0}}), mask_of(2, 2, {{0, 0}}),
                        1.0 / 3.0, 2.0 / 4.0});
    // 9: checkerboard vs its complement.
    {
        BinaryMask even(4, 4), odd(4, 4);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) ((y + x) % 2 == 0 ? even : odd).set(y, x);
        fixtures.push_back({even, odd, 0.0, 0.0});
    }
    // 10: full frame vs half frame: intersection 8, union 16.
    {
        BinaryMask full(4, 4), half(4, 4);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) {
                full.set(y, x);
                if (y < 2) half.set(y, x);
            }
        fixtures.push_back({full, half, 0.5, 2.0 * 8.0 / 24.0});
    }

    int failures = 0;
    double want_miou = 0.0, want_f1 = 0.0;
    std::vector<BinaryMask> preds, gts;
    for (const auto& f : fixtures) {
        if (std::abs(mask_iou(f.a, f.b) - f.iou) > 1e-12) ++failures;
        if (std::abs(dice_score(f.a, f.b) - f.dice) > 1e-12) ++failures;
        if (std::abs(mask_iou(f.b, f.a) - f.iou) > 1e-12) ++failures;  // symmetry
        want_miou += f.iou;
        want_f1 += f.dice;
        preds.push_back(f.a);
        gts.push_back(f.b);
    }
    want_miou /= fixtures.size();
    want_f1 /= fixtures.size();
    const EvalResult agg = evaluate(preds, gts);
    if (std::abs(agg.miou - want_miou) > 1e-12) ++failures;
    if (std::abs(agg.f1 - want_f1) > 1e-12) ++failures;

    std::ostringstream os;
    os << fixtures.size() << " hand-counted pairs plus the aggregate, " << failures
       << " deviations beyond 1e-12";
    return {failures == 0, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 10: enclosing boxes and the boxgen CSV round-trip.

Outcome criterion_boxes() {
    const auto start = Clock::now();
    Rng rng(99);
    int violations = 0;
    const int trials = 1000;
    std::vector<BinaryMask> sample;
    for (int t = 0; t < trials; ++t) {
        const int h = 2 + static_cast<int>(rng.uniform_int(62));
        const int w = 2 + static_cast<int>(rng.uniform_int(62));
        BinaryMask m(h, w);
        const double density = 0.02 + 0.3 * rng.uniform01();
        for (auto& b : m.bits) b = rng.bernoulli(density) ? 1 : 0;
        if (m.count() == 0) m.set(static_cast<int>(rng.uniform_int(h)),
                                  static_cast<int>(rng.uniform_int(w)));
        const HorizontalBox box = min_enclosing_box(m);
        bool l = false, r = false, top = false, bot = false;
        for (int y = 0; y < h && violations == 0; ++y)
            for (int x = 0; x < w; ++x) {
                if (!m.get(y, x)) continue;
                if (x < box.x_min || x > box.x_max || y < box.y_min || y > box.y_max) {
                    ++violations;
                    break;
                }
                l |= x == box.x_min;
                r |= x == box.x_max;
                top |= y == box.y_min;
                bot |= y == box.y_max;
            }
        if (violations == 0 && !(l && r && top && bot)) ++violations;
        if (sample.size() < 12 && m.height == sample.size() + 2) sample.push_back(m);
        if (t < 10) sample.push_back(m);
    }

    // CSV round-trip through the CLI.
    const fs::path root = fs::temp_directory_path() / "pointadapt_acceptance_boxgen";
    fs::remove_all(root);
    fs::create_directories(root);
    bool roundtrip_ok = true;
    {
        MaskSet set;
        // Pad to one common frame so the set is well-formed.
        int h = 0, w = 0;
        for (const auto& m : sample) {
            h = std::max(h, m.height);
            w = std::max(w, m.width);
        }
        set.height = h;
        set.width = w;
        for (std::size_t i = 0; i < sample.size(); ++i) {
            BinaryMask padded(h, w);
            for (int y = 0; y < sample[i].height; ++y)
                for (int x = 0; x < sample[i].width; ++x)
                    if (sample[i].get(y, x)) padded.set(y, x);
            set.ids.push_back(static_cast<int>(i));
            set.masks.push_back(std::move(padded));
        }
        const std::string masks_path = (root / "masks.json").string();
        const std::string csv_path = (root / "boxes.csv").string();
        write_masks_json(masks_path, set);

        std::vector<std::string> args = {"pointadapt", "boxgen", "--masks", masks_path,
                                         "--out", csv_path};
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        if (cli_dispatch(static_cast<int>(argv.size()), argv.data()) != 0) {
            roundtrip_ok = false;
        } else {
            std::ifstream in(csv_path);
            std::string line;
            std::getline(in, line);  // header
            std::size_t row = 0;
            while (std::getline(in, line)) {
                int id, x_min, y_min, x_max, y_max;
                if (std::sscanf(line.c_str(), "%d,%d,%d,%d,%d", &id, &x_min, &y_min,
                                &x_max, &y_max) != 5) {
                    roundtrip_ok = false;
                    break;
                }
                if (row >= set.masks.size()) {
                    roundtrip_ok = false;
                    break;
                }
                const HorizontalBox want = min_enclosing_box(set.masks[row]);
                if (id != set.ids[row] || x_min != want.x_min || y_min != want.y_min ||
                    x_max != want.x_max || y_max != want.y_max)
                    roundtrip_ok = false;
                ++row;
            }
            if (row != set.masks.size()) roundtrip_ok = false;
        }
    }
    fs::remove_all(root);

    const double secs = seconds_since(start);
    std::ostringstream os;
    os << trials << " random masks, " << violations
       << " containment/tightness violations, boxgen csv round-trip "
       << (roundtrip_ok ? "ok" : "FAILED") << ", " << std::fixed << secs << " s";
    return {violations == 0 && roundtrip_ok, os.str()};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"assignment oracle", criterion_assignment},
        {"clustering oracle", criterion_clustering},
        {"gradient suite", criterion_gradients},
        {"npc effect", criterion_npc_effect},
        {"ablation ordering", criterion_ablation_ordering},
        {"more-points stability", criterion_more_points},
        {"lora identity and merge", criterion_lora},
        {"fifo and determinism", criterion_determinism},
        {"metric cross-check", criterion_metrics},
        {"box generator", criterion_boxes},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome outcome;
        try {
            outcome = criteria[i].run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        if (!outcome.pass) ++failures;
        std::cout << "criterion " << (i + 1) << " (" << criteria[i].name
                  << "): " << (outcome.pass ? "PASS" : "FAIL") << " — " << outcome.detail
                  << "\n";
        std::cout.flush();
    }
    if (failures > 0) std::cout << failures << " criteria failed\n";
    return failures;
}
