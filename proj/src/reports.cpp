#include "dses/harness.hpp"

#include "dses/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace dses {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

json mat_to_json(const Mat3& m) {
    json out = json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out.push_back(m(r, c));
    return out;
}

json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json euler_deg_json(const Mat3& r) {
    const EulerAngles e = euler_from_rotation(r);
    return json::array({rad2deg(e.theta), rad2deg(e.phi), rad2deg(e.xi)});
}

json timings_json(const PhaseTimings& t) {
    return {{"phase1_ms", t.phase1_ms}, {"phase2_ms", t.phase2_ms}, {"phase3_ms", t.phase3_ms},
            {"total_ms", t.total_ms}};
}

template <typename T>
void read_opt(const json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

void check_keys(const json& j, std::initializer_list<const char*> known, const char* what) {
    if (!j.is_object()) throw PreconditionError(std::string(what) + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw PreconditionError(std::string("unknown ") + what + " key '" + key + "'");
    }
}

}  // namespace

void write_batch_csv(std::ostream& out, const BatchResult& batch, bool include_timings) {
    out << "# dses-batch-csv v1\n";
    out << "trial,seed,shape,status,mie_r_deg,mie_t,mae_r_deg,mae_t,recall_hit,relaxed_hit,chamfer_before,"
           "chamfer_after,improved,inliers,candidates_evaluated,candidates_refined,est_theta_deg,est_phi_deg,"
           "est_xi_deg,est_tx,est_ty,est_tz";
    if (include_timings) out << ",phase1_ms,phase2_ms,phase3_ms,total_ms";
    out << '\n';
    for (const auto& r : batch.records) {
        out << r.trial << ',' << r.seed << ',' << r.shape << ',' << (r.ok() ? "ok" : r.failure) << ',';
        if (r.ok()) {
            const EvalReport& e = *r.eval;
            const EulerAngles a = euler_from_rotation(r.estimate.rotation);
            out << fmt(e.mie_r) << ',' << fmt(e.mie_t) << ',' << fmt(e.mae_r) << ',' << fmt(e.mae_t) << ','
                << (e.is_recall_hit ? 1 : 0) << ',' << (r.relaxed_hit ? 1 : 0) << ',' << fmt(r.chamfer_before)
                << ',' << fmt(*e.chamfer) << ',' << (r.improved ? 1 : 0) << ',' << r.inliers << ','
                << r.candidates_evaluated << ',' << r.candidates_refined << ',' << fmt(rad2deg(a.theta)) << ','
                << fmt(rad2deg(a.phi)) << ',' << fmt(rad2deg(a.xi)) << ',' << fmt(r.estimate.translation.x())
                << ',' << fmt(r.estimate.translation.y()) << ',' << fmt(r.estimate.translation.z());
        } else {
            out << ",,,,0,0," << fmt(r.chamfer_before) << ",,0,,,,,,,,,";
        }
        if (include_timings) {
            out << ',' << fmt(r.timings.phase1_ms) << ',' << fmt(r.timings.phase2_ms) << ','
                << fmt(r.timings.phase3_ms) << ',' << fmt(r.timings.total_ms);
        }
        out << '\n';
    }
}

json batch_to_json(const BatchResult& batch) {
    const BatchSummary& s = batch.summary;
    json j;
    j["schema"] = "dses-batch-json v1";
    j["summary"] = {{"n_trials", s.n_trials},
                    {"n_failed", s.n_failed},
                    {"mean_mie_r_deg", s.mean_mie_r},
                    {"mean_mie_t", s.mean_mie_t},
                    {"mean_mae_r_deg", s.mean_mae_r},
                    {"mean_mae_t", s.mean_mae_t},
                    {"median_mie_r_deg", s.median_mie_r},
                    {"recall", s.recall},
                    {"recall_relaxed", s.recall_relaxed},
                    {"relaxed_thresholds", {{"rot_deg", batch.relaxed.rot_deg}, {"trans", batch.relaxed.trans}}},
                    {"success_rate", s.success_rate},
                    {"mean_ms", s.mean_ms},
                    {"median_ms", s.median_ms}};
    json rows = json::array();
    for (const auto& r : batch.records) {
        json row = {{"trial", r.trial},
                    {"seed", r.seed},
                    {"shape", r.shape},
                    {"status", r.ok() ? "ok" : r.failure},
                    {"chamfer_before", r.chamfer_before},
                    {"ground_truth", transform_to_json(r.ground_truth)},
                    {"timings", timings_json(r.timings)}};
        if (r.ok()) {
            const EvalReport& e = *r.eval;
            row["mie_r_deg"] = e.mie_r;
            row["mie_t"] = e.mie_t;
            row["mae_r_deg"] = e.mae_r;
            row["mae_t"] = e.mae_t;
            row["recall_hit"] = e.is_recall_hit;
            row["relaxed_hit"] = r.relaxed_hit;
            row["chamfer_after"] = *e.chamfer;
            row["improved"] = r.improved;
            row["inliers"] = r.inliers;
            row["candidates_evaluated"] = r.candidates_evaluated;
            row["candidates_refined"] = r.candidates_refined;
            row["estimate"] = transform_to_json(r.estimate);
        }
        rows.push_back(std::move(row));
    }
    j["trials"] = std::move(rows);
    return j;
}

void write_scaling_csv(std::ostream& out, const std::vector<ScalingRow>& rows) {
    out << "# dses-scaling-csv v1\n";
    out << "axis,range,rotations,trans_half_width,source_points,reference_points,phase1_ms,total_ms,status\n";
    for (const auto& r : rows) {
        out << r.axis << ',' << fmt(r.range) << ',' << r.rotations << ',' << r.trans_half_width << ','
            << r.source_points << ',' << r.reference_points << ',' << (r.phase1_ms ? fmt(*r.phase1_ms) : "")
            << ',' << (r.total_ms ? fmt(*r.total_ms) : "") << ',' << r.status << '\n';
    }
}

json register_report_to_json(const RegisterReport& report) {
    const RegistrationResult& res = report.result;
    json j = transform_to_json(res.best);
    j["euler_deg"] = {rad2deg(report.angles.theta), rad2deg(report.angles.phi), rad2deg(report.angles.xi)};
    j["engine"] = report.engine;
    j["error"] = res.best_error;
    j["inliers"] = res.best_inliers;
    j["chamfer_before"] = report.chamfer_before;
    j["chamfer_after"] = report.chamfer_after;
    j["source_points"] = report.source_points;
    j["reference_points"] = report.reference_points;
    j["candidates_evaluated"] = res.candidates_evaluated;
    j["candidates_refined"] = res.candidates_refined;
    j["timings"] = timings_json(res.elapsed);
    if (res.best.grid_coords) j["grid_index"] = *res.best.grid_coords;
    return j;
}

json transform_to_json(const RigidTransform& t) {
    return {{"rotation", mat_to_json(t.rotation)}, {"translation", vec_to_json(t.translation)},
            {"euler_deg", euler_deg_json(t.rotation)}};
}

RigidTransform transform_from_json(const json& j) {
    if (!j.is_object()) throw PreconditionError("transform must be a JSON object");
    RigidTransform t;
    if (j.contains("rotation")) {
        const auto& r = j.at("rotation");
        if (!r.is_array() || r.size() != 9) throw PreconditionError("rotation must hold 9 numbers (row-major)");
        for (int k = 0; k < 9; ++k) t.rotation(k / 3, k % 3) = r.at(k).get<double>();
    } else if (j.contains("euler_deg")) {
        const auto& e = j.at("euler_deg");
        if (!e.is_array() || e.size() != 3) throw PreconditionError("euler_deg must hold 3 numbers");
        t.rotation = rotation_from_euler({deg2rad(e.at(0).get<double>()), deg2rad(e.at(1).get<double>()),
                                          deg2rad(e.at(2).get<double>())});
    }
    if (j.contains("translation")) {
        const auto& v = j.at("translation");
        if (!v.is_array() || v.size() != 3) throw PreconditionError("translation must hold 3 numbers");
        t.translation = Vec3(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>());
    }
    t.validate();
    return t;
}

ScenarioConfig scenario_from_json(const json& j) {
    check_keys(j,
               {"shape", "blob_seed", "points_reference", "points_source", "pool_points", "rot_range_deg",
                "trans_range", "noise_sigma", "noise_clip", "keep_fraction", "rng_seed", "scale",
                "shared_base_sample", "snap_rot_step_deg", "snap_trans_bin"},
               "scenario");
    ScenarioConfig c;
    if (j.contains("shape")) c.shape = ShapeSpec::parse(j.at("shape").get<std::string>());
    read_opt(j, "blob_seed", c.shape.blob_seed);
    read_opt(j, "points_reference", c.points_reference);
    read_opt(j, "points_source", c.points_source);
    read_opt(j, "pool_points", c.pool_points);
    read_opt(j, "rot_range_deg", c.rot_range_deg);
    read_opt(j, "trans_range", c.trans_range);
    read_opt(j, "noise_sigma", c.noise_sigma);
    read_opt(j, "noise_clip", c.noise_clip);
    read_opt(j, "keep_fraction", c.keep_fraction);
    read_opt(j, "rng_seed", c.rng_seed);
    read_opt(j, "scale", c.scale);
    read_opt(j, "shared_base_sample", c.shared_base_sample);
    if (j.contains("snap_rot_step_deg")) c.snap_rot_step_deg = j.at("snap_rot_step_deg").get<double>();
    if (j.contains("snap_trans_bin")) c.snap_trans_bin = j.at("snap_trans_bin").get<double>();
    c.validate();
    return c;
}

json scenario_to_json(const ScenarioConfig& c) {
    json j = {{"shape", c.shape.name()},
              {"blob_seed", c.shape.blob_seed},
              {"points_reference", c.points_reference},
              {"points_source", c.points_source},
              {"pool_points", c.pool_points},
              {"rot_range_deg", c.rot_range_deg},
              {"trans_range", c.trans_range},
              {"noise_sigma", c.noise_sigma},
              {"noise_clip", c.noise_clip},
              {"keep_fraction", c.keep_fraction},
              {"rng_seed", c.rng_seed},
              {"scale", c.scale},
              {"shared_base_sample", c.shared_base_sample}};
    if (c.snap_rot_step_deg) j["snap_rot_step_deg"] = *c.snap_rot_step_deg;
    if (c.snap_trans_bin) j["snap_trans_bin"] = *c.snap_trans_bin;
    return j;
}

SearchConfig search_from_json(const json& j) {
    check_keys(j,
               {"rot_range_deg", "rot_step_deg", "rot_half_width", "trans_range", "trans_bin", "trans_half_width",
                "metric", "trunc", "q", "threads", "pivot", "max_candidates", "center_pose", "vote_mode"},
               "search");
    const double rot_step_deg = j.value("rot_step_deg", 1.0);
    const double trans_bin = j.value("trans_bin", 0.01);
    SearchConfig c = SearchConfig::from_ranges(j.value("rot_range_deg", 0.0), rot_step_deg,
                                               j.value("trans_range", 0.0), trans_bin);
    read_opt(j, "rot_half_width", c.rot_half_width);
    read_opt(j, "trans_half_width", c.trans_half_width);
    read_opt(j, "q", c.q);
    read_opt(j, "threads", c.threads);
    read_opt(j, "max_candidates", c.max_candidates);
    if (j.contains("metric")) {
        const std::string name = j.at("metric").get<std::string>();
        double param = j.value("trunc", 0.0);
        if (name == "trunc-l1" && !j.contains("trunc")) param = 5.0 * c.trans_bin;
        if (name == "inliers") param = j.value("trunc", c.trans_bin);
        c.metric = ErrorMetric::parse(name, param);
    } else if (j.contains("trunc")) {
        c.metric = ErrorMetric::truncated_l1(j.at("trunc").get<double>());
    }
    if (j.contains("pivot")) {
        const std::string p = j.at("pivot").get<std::string>();
        if (p == "origin") c.pivot = PivotMode::Origin;
        else if (p == "source-centroid") c.pivot = PivotMode::SourceCentroid;
        else throw PreconditionError("pivot must be 'origin' or 'source-centroid'");
    }
    if (j.contains("vote_mode")) {
        const std::string v = j.at("vote_mode").get<std::string>();
        if (v == "distinct-sources") c.vote_mode = VoteMode::DistinctSources;
        else if (v == "raw-pairs") c.vote_mode = VoteMode::RawPairs;
        else throw PreconditionError("vote_mode must be 'distinct-sources' or 'raw-pairs'");
    }
    if (j.contains("center_pose")) c.center = transform_from_json(j.at("center_pose"));
    c.validate();
    return c;
}

json search_to_json(const SearchConfig& c) {
    const ErrorMetric m = c.resolved_metric();
    json j = {{"rot_half_width", c.rot_half_width},
              {"rot_step_deg", rad2deg(c.rot_step)},
              {"trans_half_width", c.trans_half_width},
              {"trans_bin", c.trans_bin},
              {"metric", m.name()},
              {"q", c.q},
              {"threads", c.threads},
              {"pivot", c.pivot == PivotMode::Origin ? "origin" : "source-centroid"},
              {"vote_mode", c.vote_mode == VoteMode::DistinctSources ? "distinct-sources" : "raw-pairs"},
              {"max_candidates", c.max_candidates},
              {"center_pose", transform_to_json(c.center)}};
    if (m.kind == MetricKind::TruncatedL1 || m.kind == MetricKind::SaturatedL0) j["trunc"] = m.param;
    return j;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("malformed JSON in '" + path.string() + "': " + e.what());
    }
}

}  // namespace dses
