#pragma once

#include "dses/benchgen.hpp"
#include "dses/engines.hpp"
#include "dses/metrics.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dses {

enum class EngineKind { Dses, Exhaustive };

/// Recall thresholds on MAE(R) (degrees) and MAE(t) (meters).
struct RecallThresholds {
    double rot_deg = kRecallRotationDeg;
    double trans = kRecallTranslation;

    bool hit(const EvalReport& e) const { return e.mae_r < rot_deg && e.mae_t < trans; }
};

struct BatchOptions {
    EngineKind engine = EngineKind::Dses;
    /// Secondary recall criterion reported next to the standard one.
    RecallThresholds relaxed;
    /// Local-registration mode: the search is centered on an initial guess
    /// that differs from the ground truth by a random offset inside the
    /// search grid's span, pivoting about the source centroid.
    bool local = false;
};

struct TrialRecord {
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::string shape;
    /// Empty when the engine returned a pose; otherwise a failure code.
    std::string failure;
    std::optional<EvalReport> eval;
    bool relaxed_hit = false;
    double chamfer_before = 0.0;  ///< chamfer with the source in the search center pose
    bool improved = false;        ///< pose returned and chamfer strictly decreased
    std::size_t inliers = 0;
    std::size_t candidates_evaluated = 0;
    std::size_t candidates_refined = 0;
    PhaseTimings timings;
    RigidTransform ground_truth;
    RigidTransform estimate;

    bool ok() const { return failure.empty(); }
};

struct BatchSummary {
    std::size_t n_trials = 0;
    std::size_t n_failed = 0;
    double mean_mie_r = 0.0;
    double mean_mie_t = 0.0;
    double mean_mae_r = 0.0;
    double mean_mae_t = 0.0;
    double median_mie_r = 0.0;
    double recall = 0.0;          ///< MAE(R) < 1 deg and MAE(t) < 0.1
    double recall_relaxed = 0.0;  ///< against BatchOptions::relaxed
    double success_rate = 0.0;    ///< fraction of trials with `improved`
    double mean_ms = 0.0;
    double median_ms = 0.0;
};

struct BatchResult {
    BatchSummary summary;
    std::vector<TrialRecord> records;
    RecallThresholds relaxed;
};

/// Runs one registration on an existing instance and evaluates it.
TrialRecord run_trial(const ScenarioInstance& instance, const SearchConfig& search, const BatchOptions& options);

/// Aggregates records; failed trials count as recall misses.
BatchSummary summarize(const std::vector<TrialRecord>& records);

/// Trial k uses scenario seed base_seed + k.
BatchResult run_batch(const ScenarioConfig& scenario, const SearchConfig& search, int n_trials,
                      std::uint64_t base_seed, const BatchOptions& options = {});

struct FrameRotationStudy {
    BatchResult original;
    BatchResult rotated;
    std::vector<Mat3> shared_rotations;
};

/// Rotates both clouds by `shared` and conjugates the ground truth so that the
/// relative pose between the clouds is unchanged.
ScenarioInstance rotate_frame(const ScenarioInstance& instance, const Mat3& shared);

/// Runs every trial as is and again in a frame rotated by one shared rotation
/// per trial (Euler angles uniform in +-frame_rot_range_deg).
FrameRotationStudy run_frame_rotation_study(const ScenarioConfig& scenario, const SearchConfig& search,
                                            int n_trials, std::uint64_t base_seed, double frame_rot_range_deg,
                                            const BatchOptions& options = {});

struct ScalingRow {
    std::string axis;  ///< "rotation" or "translation"
    double range = 0.0;
    std::size_t rotations = 0;
    int trans_half_width = 0;
    std::size_t source_points = 0;
    std::size_t reference_points = 0;
    std::optional<double> phase1_ms;  ///< median over repetitions
    std::optional<double> total_ms;
    std::string status;  ///< "ok" or failure code
};

/// Times DSES over rotation ranges (at the base translation range) and over
/// translation ranges (at the base rotation range). Median of `repetitions`.
std::vector<ScalingRow> run_scaling_study(const ScenarioConfig& scenario, const SearchConfig& base_search,
                                          const std::vector<double>& rot_ranges_deg,
                                          const std::vector<double>& trans_ranges, std::uint64_t seed,
                                          int repetitions = 3);

struct RegisterReport {
    RegistrationResult result;
    EulerAngles angles;  ///< of result.best, radians
    double chamfer_before = 0.0;
    double chamfer_after = 0.0;
    std::size_t source_points = 0;
    std::size_t reference_points = 0;
    std::string engine;
};

RegisterReport register_clouds(const PointCloud& source, const PointCloud& reference, const SearchConfig& search,
                               EngineKind engine = EngineKind::Dses);
RegisterReport register_files(const std::filesystem::path& source_path,
                              const std::filesystem::path& reference_path, const SearchConfig& search,
                              EngineKind engine = EngineKind::Dses);

// Reports. CSV output excludes timings unless asked, so that reruns compare
// byte for byte.
void write_batch_csv(std::ostream& out, const BatchResult& batch, bool include_timings = false);
nlohmann::json batch_to_json(const BatchResult& batch);
void write_scaling_csv(std::ostream& out, const std::vector<ScalingRow>& rows);
nlohmann::json register_report_to_json(const RegisterReport& report);

// Config files.
nlohmann::json transform_to_json(const RigidTransform& t);
RigidTransform transform_from_json(const nlohmann::json& j);
ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& c);
SearchConfig search_from_json(const nlohmann::json& j);
nlohmann::json search_to_json(const SearchConfig& c);
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Writes <prefix>_source.xyz, <prefix>_reference.xyz and <prefix>_gt.json.
void write_instance(const ScenarioInstance& instance, const std::string& prefix);

}  // namespace dses
