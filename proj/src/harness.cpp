#include "dses/harness.hpp"

#include "dses/cloud_io.hpp"
#include "dses/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace dses {

namespace {

std::string failure_code(const std::exception_ptr& error) {
    try {
        std::rethrow_exception(error);
    } catch (const NoCandidateError&) {
        return "no-candidate";
    } catch (const SearchTooLargeError&) {
        return "search-too-large";
    } catch (const PreconditionError&) {
        return "precondition";
    } catch (...) {
        return "error";
    }
}

RegistrationResult run_engine(EngineKind engine, const PointCloud& source, const PointCloud& reference,
                              const SearchConfig& search) {
    return engine == EngineKind::Exhaustive ? exhaustive_search(source, reference, search)
                                            : dses(source, reference, search);
}

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Search center for local registration: an initial guess whose grid offset
// (r_off, t_off) about the source centroid leads back to the ground truth.
RigidTransform perturbed_center(const RigidTransform& truth, const PointCloud& source,
                                const RigidTransform& offset) {
    const Vec3 pivot = truth.apply(source.centroid()) - offset.translation;
    RigidTransform about_pivot;
    about_pivot.rotation = offset.rotation;
    about_pivot.translation = pivot - offset.rotation * pivot + offset.translation;
    return compose(about_pivot.inverse(), truth);
}

}  // namespace

TrialRecord run_trial(const ScenarioInstance& instance, const SearchConfig& search, const BatchOptions& options) {
    TrialRecord rec;
    rec.seed = instance.config.rng_seed;
    rec.shape = instance.config.shape.name();
    rec.ground_truth = instance.ground_truth;

    SearchConfig cfg = search;
    if (options.local) {
        const RigidTransform offset =
            sample_transform(rad2deg(search.rot_half_width * search.rot_step),
                             search.trans_half_width * search.trans_bin, derive_seed(instance.config.rng_seed, 11));
        cfg.center = perturbed_center(instance.ground_truth, instance.source, offset);
        cfg.pivot = PivotMode::SourceCentroid;
    }
    rec.chamfer_before = chamfer_distance(apply_transform(cfg.center, instance.source), instance.reference);

    RegistrationResult result;
    try {
        result = run_engine(options.engine, instance.source, instance.reference, cfg);
    } catch (...) {
        rec.failure = failure_code(std::current_exception());
        return rec;
    }
    rec.estimate = result.best;
    rec.inliers = result.best_inliers;
    rec.candidates_evaluated = result.candidates_evaluated;
    rec.candidates_refined = result.candidates_refined;
    rec.timings = result.elapsed;

    EvalReport eval = evaluate_pose(result.best, instance.ground_truth);
    eval.chamfer = chamfer_distance(apply_transform(result.best, instance.source), instance.reference);
    rec.improved = *eval.chamfer < rec.chamfer_before;
    rec.relaxed_hit = options.relaxed.hit(eval);
    rec.eval = eval;
    return rec;
}

BatchSummary summarize(const std::vector<TrialRecord>& records) {
    BatchSummary s;
    s.n_trials = records.size();
    if (records.empty()) return s;
    std::size_t hits = 0, relaxed = 0, improved = 0;
    std::vector<double> mie_r, times;
    for (const auto& r : records) {
        times.push_back(r.timings.total_ms);
        if (!r.ok()) {
            ++s.n_failed;
            mie_r.push_back(180.0);
            continue;
        }
        const EvalReport& e = *r.eval;
        s.mean_mie_r += e.mie_r;
        s.mean_mie_t += e.mie_t;
        s.mean_mae_r += e.mae_r;
        s.mean_mae_t += e.mae_t;
        mie_r.push_back(e.mie_r);
        hits += e.is_recall_hit ? 1 : 0;
        relaxed += r.relaxed_hit ? 1 : 0;
        improved += r.improved ? 1 : 0;
    }
    const std::size_t ok = s.n_trials - s.n_failed;
    if (ok > 0) {
        s.mean_mie_r /= static_cast<double>(ok);
        s.mean_mie_t /= static_cast<double>(ok);
        s.mean_mae_r /= static_cast<double>(ok);
        s.mean_mae_t /= static_cast<double>(ok);
    }
    const auto n = static_cast<double>(s.n_trials);
    s.median_mie_r = median(mie_r);
    s.recall = static_cast<double>(hits) / n;
    s.recall_relaxed = static_cast<double>(relaxed) / n;
    s.success_rate = static_cast<double>(improved) / n;
    double total = 0.0;
    for (const double t : times) total += t;
    s.mean_ms = total / n;
    s.median_ms = median(times);
    return s;
}

BatchResult run_batch(const ScenarioConfig& scenario, const SearchConfig& search, int n_trials,
                      std::uint64_t base_seed, const BatchOptions& options) {
    if (n_trials < 1) throw PreconditionError("n_trials must be >= 1");
    BatchResult batch;
    batch.relaxed = options.relaxed;
    for (int k = 0; k < n_trials; ++k) {
        ScenarioConfig cfg = scenario;
        cfg.rng_seed = base_seed + static_cast<std::uint64_t>(k);
        TrialRecord rec = run_trial(make_instance(cfg), search, options);
        rec.trial = static_cast<std::size_t>(k);
        batch.records.push_back(std::move(rec));
    }
    batch.summary = summarize(batch.records);
    return batch;
}

ScenarioInstance rotate_frame(const ScenarioInstance& instance, const Mat3& shared) {
    RigidTransform s;
    s.rotation = shared;
    ScenarioInstance out{apply_transform(s, instance.source), apply_transform(s, instance.reference),
                         compose(s, compose(instance.ground_truth, s.inverse())), instance.config};
    return out;
}

FrameRotationStudy run_frame_rotation_study(const ScenarioConfig& scenario, const SearchConfig& search,
                                            int n_trials, std::uint64_t base_seed, double frame_rot_range_deg,
                                            const BatchOptions& options) {
    if (n_trials < 1) throw PreconditionError("n_trials must be >= 1");
    FrameRotationStudy study;
    study.original.relaxed = options.relaxed;
    study.rotated.relaxed = options.relaxed;
    for (int k = 0; k < n_trials; ++k) {
        ScenarioConfig cfg = scenario;
        cfg.rng_seed = base_seed + static_cast<std::uint64_t>(k);
        const ScenarioInstance instance = make_instance(cfg);
        const Mat3 shared = sample_transform(frame_rot_range_deg, 0.0, derive_seed(cfg.rng_seed, 21)).rotation;
        study.shared_rotations.push_back(shared);

        TrialRecord a = run_trial(instance, search, options);
        TrialRecord b = run_trial(rotate_frame(instance, shared), search, options);
        a.trial = b.trial = static_cast<std::size_t>(k);
        study.original.records.push_back(std::move(a));
        study.rotated.records.push_back(std::move(b));
    }
    study.original.summary = summarize(study.original.records);
    study.rotated.summary = summarize(study.rotated.records);
    return study;
}

std::vector<ScalingRow> run_scaling_study(const ScenarioConfig& scenario, const SearchConfig& base_search,
                                          const std::vector<double>& rot_ranges_deg,
                                          const std::vector<double>& trans_ranges, std::uint64_t seed,
                                          int repetitions) {
    if (rot_ranges_deg.empty() && trans_ranges.empty()) throw PreconditionError("no ranges to time");
    if (repetitions < 1) throw PreconditionError("repetitions must be >= 1");
    ScenarioConfig cfg = scenario;
    cfg.rng_seed = seed;
    const ScenarioInstance instance = make_instance(cfg);

    auto time_one = [&](const std::string& axis, double range, const SearchConfig& search) {
        ScalingRow row;
        row.axis = axis;
        row.range = range;
        row.rotations = static_cast<std::size_t>(std::pow(2 * search.rot_half_width + 1, 3));
        row.trans_half_width = search.trans_half_width;
        row.source_points = instance.source.size();
        row.reference_points = instance.reference.size();
        std::vector<double> phase1, total;
        try {
            for (int r = 0; r < repetitions; ++r) {
                const auto result = dses(instance.source, instance.reference, search);
                phase1.push_back(result.elapsed.phase1_ms);
                total.push_back(result.elapsed.total_ms);
            }
            row.phase1_ms = median(phase1);
            row.total_ms = median(total);
            row.status = "ok";
        } catch (...) {
            row.status = failure_code(std::current_exception());
        }
        return row;
    };

    std::vector<ScalingRow> rows;
    for (const double range : rot_ranges_deg) {
        SearchConfig s = base_search;
        s.rot_half_width = static_cast<int>(std::floor(deg2rad(range) / s.rot_step + 1e-9));
        rows.push_back(time_one("rotation", range, s));
    }
    for (const double range : trans_ranges) {
        SearchConfig s = base_search;
        s.trans_half_width = static_cast<int>(std::floor(range / s.trans_bin + 1e-9));
        rows.push_back(time_one("translation", range, s));
    }
    return rows;
}

RegisterReport register_clouds(const PointCloud& source, const PointCloud& reference, const SearchConfig& search,
                               EngineKind engine) {
    RegisterReport report;
    report.engine = engine == EngineKind::Exhaustive ? "exhaustive" : "dses";
    report.source_points = source.size();
    report.reference_points = reference.size();
    report.chamfer_before = chamfer_distance(apply_transform(search.center, source), reference);
    report.result = run_engine(engine, source, reference, search);
    report.angles = euler_from_rotation(report.result.best.rotation);
    report.chamfer_after = chamfer_distance(apply_transform(report.result.best, source), reference);
    return report;
}

RegisterReport register_files(const std::filesystem::path& source_path,
                              const std::filesystem::path& reference_path, const SearchConfig& search,
                              EngineKind engine) {
    const PointCloud source = io::read_point_cloud(source_path);
    const PointCloud reference = io::read_point_cloud(reference_path);
    return register_clouds(source, reference, search, engine);
}

void write_instance(const ScenarioInstance& instance, const std::string& prefix) {
    io::write_xyz(prefix + "_source.xyz", instance.source);
    io::write_xyz(prefix + "_reference.xyz", instance.reference);
    nlohmann::json j = transform_to_json(instance.ground_truth);
    j["convention"] = "ground truth maps the source cloud onto the reference cloud";
    j["scenario"] = scenario_to_json(instance.config);
    std::ofstream out(prefix + "_gt.json");
    if (!out) throw IoError("cannot write '" + prefix + "_gt.json'");
    out << j.dump(2) << '\n';
}

}  // namespace dses
