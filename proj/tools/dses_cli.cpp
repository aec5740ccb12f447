// dses: command-line front end for registration, benchmarks and checks.

#include "dses/cloud_io.hpp"
#include "dses/errors.hpp"
#include "dses/harness.hpp"
#include "dses/oracle_check.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace dses;

constexpr int kEngineFailure = 1;
constexpr int kUsageError = 2;

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) throw IoError("cannot write '" + path + "'");
}

struct RegisterArgs {
    std::string source, reference;
    double rot_range = 10.0, rot_step = 1.0, trans_range = 0.1, trans_bin = 0.01;
    std::string metric = "trunc-l1";
    double trunc = 0.0;
    double q = 0.5;
    std::string center_pose, out;
    bool exhaustive = false, json = false, pivot_centroid = false;
    int threads = 0;
};

int cmd_register(const RegisterArgs& a) {
    SearchConfig cfg = SearchConfig::from_ranges(a.rot_range, a.rot_step, a.trans_range, a.trans_bin);
    cfg.q = a.q;
    cfg.threads = a.threads;
    double param = a.trunc;
    if (param <= 0.0) param = a.metric == "inliers" ? a.trans_bin : 5.0 * a.trans_bin;
    cfg.metric = ErrorMetric::parse(a.metric, param);
    if (!a.center_pose.empty()) cfg.center = transform_from_json(read_json_file(a.center_pose));
    if (a.pivot_centroid) cfg.pivot = PivotMode::SourceCentroid;
    cfg.validate();

    const PointCloud source = io::read_point_cloud(a.source);
    const PointCloud reference = io::read_point_cloud(a.reference);
    const RegisterReport report =
        register_clouds(source, reference, cfg, a.exhaustive ? EngineKind::Exhaustive : EngineKind::Dses);

    if (!a.out.empty()) io::write_xyz(a.out, apply_transform(report.result.best, source));

    if (a.json) {
        std::cout << register_report_to_json(report).dump(2) << '\n';
        return 0;
    }
    const auto& best = report.result.best;
    std::printf("engine          %s\n", report.engine.c_str());
    std::printf("points          source %zu, reference %zu\n", report.source_points, report.reference_points);
    std::printf("euler (deg)     theta %.6f  phi %.6f  xi %.6f\n", rad2deg(report.angles.theta),
                rad2deg(report.angles.phi), rad2deg(report.angles.xi));
    std::printf("translation (m) %.9g %.9g %.9g\n", best.translation.x(), best.translation.y(),
                best.translation.z());
    std::printf("error           %.9g (%s)\n", report.result.best_error, cfg.resolved_metric().name().c_str());
    std::printf("inliers         %zu\n", report.result.best_inliers);
    std::printf("chamfer         before %.9g  after %.9g\n", report.chamfer_before, report.chamfer_after);
    std::printf("time (ms)       %.3f\n", report.result.elapsed.total_ms);
    return 0;
}

struct BenchmarkArgs {
    std::string scenario, search, csv, json;
    int trials = 10;
    std::uint64_t seed = 0;
    bool timings = false, exhaustive = false, local = false;
    double relaxed_rot = kRecallRotationDeg, relaxed_trans = kRecallTranslation;
    int threads = -1;
};

int cmd_benchmark(const BenchmarkArgs& a) {
    const ScenarioConfig scenario = scenario_from_json(read_json_file(a.scenario));
    SearchConfig search = search_from_json(read_json_file(a.search));
    if (a.threads >= 0) search.threads = a.threads;
    BatchOptions options;
    options.engine = a.exhaustive ? EngineKind::Exhaustive : EngineKind::Dses;
    options.relaxed = {a.relaxed_rot, a.relaxed_trans};
    options.local = a.local;
    const BatchResult batch = run_batch(scenario, search, a.trials, a.seed, options);

    if (!a.csv.empty()) {
        std::ostringstream csv;
        write_batch_csv(csv, batch, a.timings);
        write_text_file(a.csv, csv.str());
    }
    if (!a.json.empty()) write_text_file(a.json, batch_to_json(batch).dump(2) + "\n");

    const BatchSummary& s = batch.summary;
    std::printf("trials %zu  failed %zu\n", s.n_trials, s.n_failed);
    std::printf("MIE(R) %.4f deg  MIE(t) %.5f  MAE(R) %.4f deg  MAE(t) %.5f\n", s.mean_mie_r, s.mean_mie_t,
                s.mean_mae_r, s.mean_mae_t);
    std::printf("median MIE(R) %.4f deg\n", s.median_mie_r);
    std::printf("recall %.4f  relaxed recall %.4f (MAE(R) < %g deg, MAE(t) < %g)\n", s.recall, s.recall_relaxed,
                batch.relaxed.rot_deg, batch.relaxed.trans);
    std::printf("chamfer success %.4f\n", s.success_rate);
    std::printf("time mean %.1f ms  median %.1f ms\n", s.mean_ms, s.median_ms);
    return 0;
}

int cmd_generate(const std::string& scenario_path, std::uint64_t seed, const std::string& prefix) {
    ScenarioConfig scenario = scenario_from_json(read_json_file(scenario_path));
    scenario.rng_seed = seed;
    const ScenarioInstance instance = make_instance(scenario);
    write_instance(instance, prefix);
    std::printf("wrote %s_source.xyz (%zu points), %s_reference.xyz (%zu points), %s_gt.json\n", prefix.c_str(),
                instance.source.size(), prefix.c_str(), instance.reference.size(), prefix.c_str());
    return 0;
}

int cmd_oracle(std::size_t trials, std::uint64_t seed) {
    const OracleReport r = run_oracle_check(trials, seed);
    for (const auto& m : r.messages) std::printf("%s\n", m.c_str());
    std::printf("mode oracle     %zu instances, %zu sweep points, %zu violations\n", r.mode_instances,
                r.mode_sweep_points, r.mode_violations);
    std::printf("search oracle   %zu instances, %zu violations\n", r.search_instances, r.search_violations);
    std::printf("%s\n", r.passed() ? "PASS" : "FAIL");
    return r.passed() ? 0 : kEngineFailure;
}

struct ScalingArgs {
    std::string scenario, search, csv;
    std::vector<double> rot_ranges, trans_ranges;
    std::uint64_t seed = 0;
    int repetitions = 3;
};

int cmd_scaling(const ScalingArgs& a) {
    const ScenarioConfig scenario = scenario_from_json(read_json_file(a.scenario));
    SearchConfig search;
    if (a.search.empty()) {
        search = SearchConfig::from_ranges(10.0, 2.0, 0.2, 0.02);
    } else {
        search = search_from_json(read_json_file(a.search));
    }
    const auto rows = run_scaling_study(scenario, search, a.rot_ranges, a.trans_ranges, a.seed, a.repetitions);
    std::ostringstream csv;
    write_scaling_csv(csv, rows);
    if (a.csv.empty()) {
        std::cout << csv.str();
    } else {
        write_text_file(a.csv, csv.str());
        for (const auto& r : rows) {
            std::printf("%-11s range %-8g phase1 %s ms  [%s]\n", r.axis.c_str(), r.range,
                        r.phase1_ms ? std::to_string(*r.phase1_ms).c_str() : "-", r.status.c_str());
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grid-based rigid point cloud registration"};
    app.require_subcommand(1);

    RegisterArgs reg;
    auto* c_reg = app.add_subcommand("register", "Register a source cloud onto a reference cloud");
    c_reg->add_option("source", reg.source, "Source cloud (.xyz or .ply)")->required();
    c_reg->add_option("reference", reg.reference, "Reference cloud (.xyz or .ply)")->required();
    c_reg->add_option("--rot-range", reg.rot_range, "Rotation half-range per Euler axis (deg)");
    c_reg->add_option("--rot-step", reg.rot_step, "Rotation grid step (deg)");
    c_reg->add_option("--trans-range", reg.trans_range, "Translation half-range per axis (m)");
    c_reg->add_option("--trans-bin", reg.trans_bin, "Translation bin width (m)");
    c_reg->add_option("--metric", reg.metric, "Refinement metric")
        ->check(CLI::IsMember({"l2", "l1", "trunc-l1", "inliers"}));
    c_reg->add_option("--trunc", reg.trunc, "Truncation threshold for trunc-l1 (default 5 bins)");
    c_reg->add_option("--q", reg.q, "Refinement fraction in (0, 1]");
    c_reg->add_option("--center-pose", reg.center_pose, "JSON transform to center the search on");
    c_reg->add_flag("--pivot-centroid", reg.pivot_centroid, "Rotate grid offsets about the source centroid");
    c_reg->add_flag("--exhaustive", reg.exhaustive, "Use the exhaustive 6-D grid search");
    c_reg->add_option("--out", reg.out, "Write the aligned source cloud (.xyz)");
    c_reg->add_flag("--json", reg.json, "Print a JSON report");
    c_reg->add_option("--threads", reg.threads, "Worker threads (0 = default)");

    BenchmarkArgs bench;
    auto* c_bench = app.add_subcommand("benchmark", "Run a batch of synthetic registration trials");
    c_bench->add_option("--scenario", bench.scenario, "Scenario JSON")->required();
    c_bench->add_option("--search", bench.search, "Search JSON")->required();
    c_bench->add_option("--trials", bench.trials, "Number of trials")->check(CLI::PositiveNumber);
    c_bench->add_option("--seed", bench.seed, "Base seed; trial k uses seed + k");
    c_bench->add_option("--csv", bench.csv, "Per-trial CSV output");
    c_bench->add_option("--json", bench.json, "JSON report output");
    c_bench->add_flag("--timings", bench.timings, "Include phase timings in the CSV");
    c_bench->add_flag("--exhaustive", bench.exhaustive, "Use the exhaustive engine");
    c_bench->add_flag("--local", bench.local, "Center each search on a perturbed initial guess");
    c_bench->add_option("--relaxed-rot", bench.relaxed_rot, "Relaxed recall rotation threshold (deg)");
    c_bench->add_option("--relaxed-trans", bench.relaxed_trans, "Relaxed recall translation threshold (m)");
    c_bench->add_option("--threads", bench.threads, "Override the search thread count");

    std::string gen_scenario, gen_prefix;
    std::uint64_t gen_seed = 0;
    auto* c_gen = app.add_subcommand("generate", "Write one synthetic instance to disk");
    c_gen->add_option("--scenario", gen_scenario, "Scenario JSON")->required();
    c_gen->add_option("--seed", gen_seed, "Instance seed");
    c_gen->add_option("--out-prefix", gen_prefix, "Output path prefix")->required();

    std::size_t oracle_trials = 200;
    std::uint64_t oracle_seed = 1;
    auto* c_oracle = app.add_subcommand("oracle-check", "Run the small-instance equivalence suite");
    c_oracle->add_option("--trials", oracle_trials, "Mode-oracle instances")->check(CLI::PositiveNumber);
    c_oracle->add_option("--seed", oracle_seed, "Seed");

    ScalingArgs scale;
    auto* c_scale = app.add_subcommand("scaling", "Time DSES over rotation and translation ranges");
    c_scale->add_option("--scenario", scale.scenario, "Scenario JSON")->required();
    c_scale->add_option("--search", scale.search, "Base search JSON");
    c_scale->add_option("--rot-ranges", scale.rot_ranges, "Rotation half-ranges (deg)");
    c_scale->add_option("--trans-ranges", scale.trans_ranges, "Translation half-ranges (m)");
    c_scale->add_option("--csv", scale.csv, "CSV output");
    c_scale->add_option("--seed", scale.seed, "Instance seed");
    c_scale->add_option("--repetitions", scale.repetitions, "Timed repetitions per point");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    try {
        if (*c_reg) return cmd_register(reg);
        if (*c_bench) return cmd_benchmark(bench);
        if (*c_gen) return cmd_generate(gen_scenario, gen_seed, gen_prefix);
        if (*c_oracle) return cmd_oracle(oracle_trials, oracle_seed);
        if (*c_scale) return cmd_scaling(scale);
    } catch (const NoCandidateError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kEngineFailure;
    } catch (const SearchTooLargeError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kEngineFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsageError;
    }
    return kUsageError;
}
