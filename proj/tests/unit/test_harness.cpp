#include "dses/cloud_io.hpp"
#include "dses/errors.hpp"
#include "dses/harness.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace dses;

namespace {

ScenarioConfig small_scenario() {
    ScenarioConfig s;
    s.shape = ShapeSpec::parse("l-bracket");
    s.points_reference = s.points_source = 160;
    s.rot_range_deg = 6.0;
    s.trans_range = 0.05;
    s.noise_sigma = 0.005;
    s.noise_clip = 0.02;
    return s;
}

SearchConfig small_search() { return SearchConfig::from_ranges(6.0, 3.0, 0.1, 0.025); }

std::string csv_of(const BatchResult& b, bool timings = false) {
    std::ostringstream out;
    write_batch_csv(out, b, timings);
    return out.str();
}

}  // namespace

TEST(Batch, ReproducibleAcrossRunsAndThreadCounts) {
    SearchConfig search = small_search();
    search.threads = 1;
    const std::string a = csv_of(run_batch(small_scenario(), search, 4, 100));
    const std::string b = csv_of(run_batch(small_scenario(), search, 4, 100));
    search.threads = 3;
    const std::string c = csv_of(run_batch(small_scenario(), search, 4, 100));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
    EXPECT_EQ(a.rfind("# dses-batch-csv v1\n", 0), 0u);
    EXPECT_EQ(a.find("nan"), std::string::npos);
}

TEST(Batch, SummaryRecomputesFromRecords) {
    BatchOptions opt;
    opt.relaxed = {6.0, 0.05};
    const BatchResult r = run_batch(small_scenario(), small_search(), 5, 7, opt);
    ASSERT_EQ(r.records.size(), 5u);
    std::size_t hits = 0, relaxed = 0, improved = 0;
    for (std::size_t k = 0; k < r.records.size(); ++k) {
        const auto& rec = r.records[k];
        EXPECT_EQ(rec.trial, k);
        EXPECT_EQ(rec.seed, 7 + k);
        ASSERT_TRUE(rec.ok());
        hits += rec.eval->is_recall_hit;
        relaxed += rec.relaxed_hit;
        improved += rec.improved;
        EXPECT_EQ(rec.relaxed_hit, opt.relaxed.hit(*rec.eval));
    }
    EXPECT_DOUBLE_EQ(r.summary.recall, hits / 5.0);
    EXPECT_DOUBLE_EQ(r.summary.recall_relaxed, relaxed / 5.0);
    EXPECT_DOUBLE_EQ(r.summary.success_rate, improved / 5.0);
    EXPECT_EQ(summarize(r.records).recall, r.summary.recall);
}

TEST(Batch, FailedTrialsAreExplicitRows) {
    TrialRecord ok;
    ok.eval = EvalReport{2.0, 0.01, 1.0, 0.01, 0.1, false};
    ok.relaxed_hit = true;
    TrialRecord bad;
    bad.trial = 1;
    bad.failure = "no-candidate";
    const BatchSummary s = summarize({ok, bad});
    EXPECT_EQ(s.n_failed, 1u);
    EXPECT_DOUBLE_EQ(s.recall_relaxed, 0.5);
    EXPECT_DOUBLE_EQ(s.mean_mie_r, 2.0);
    EXPECT_DOUBLE_EQ(s.median_mie_r, 0.5 * (2.0 + 180.0));

    BatchResult b;
    b.records = {ok, bad};
    b.summary = s;
    const std::string csv = csv_of(b);
    EXPECT_NE(csv.find("\n1,0,,no-candidate,,,,"), std::string::npos);
    EXPECT_EQ(csv.find("nan"), std::string::npos);
    const auto j = batch_to_json(b);
    EXPECT_EQ(j["trials"][1]["status"], "no-candidate");
}

TEST(Batch, NoCandidateWindowRecordedAsFailure) {
    ScenarioConfig s = small_scenario();
    s.trans_range = 0.0;
    SearchConfig search = small_search();
    search.center.translation = Vec3(50, 0, 0);
    const BatchResult r = run_batch(s, search, 2, 1);
    for (const auto& rec : r.records) EXPECT_EQ(rec.failure, "no-candidate");
    EXPECT_EQ(r.summary.n_failed, 2u);
    EXPECT_EQ(r.summary.recall, 0.0);
}

TEST(Batch, TimingsOnlyWhenRequested) {
    const BatchResult r = run_batch(small_scenario(), small_search(), 1, 3);
    EXPECT_EQ(csv_of(r).find("total_ms"), std::string::npos);
    EXPECT_NE(csv_of(r, true).find("total_ms"), std::string::npos);
}

TEST(LocalMode, CenterIsPerturbedWithinGrid) {
    ScenarioConfig s = small_scenario();
    s.scale = 0.1;
    s.noise_sigma = 0.001;
    s.noise_clip = 0.005;
    s.rot_range_deg = 45.0;
    s.trans_range = 0.5;
    BatchOptions opt;
    opt.local = true;
    const BatchResult r = run_batch(s, SearchConfig::from_ranges(3.0, 1.0, 0.01, 0.002), 3, 50, opt);
    for (const auto& rec : r.records) {
        ASSERT_TRUE(rec.ok());
        EXPECT_TRUE(rec.improved);
    }
}

TEST(FrameStudy, ZeroRotationGivesIdenticalSummaries) {
    const FrameRotationStudy st = run_frame_rotation_study(small_scenario(), small_search(), 3, 11, 0.0);
    ASSERT_EQ(st.shared_rotations.size(), 3u);
    for (const auto& r : st.shared_rotations) EXPECT_TRUE(r.isIdentity(0.0));
    EXPECT_EQ(csv_of(st.original), csv_of(st.rotated));
}

TEST(FrameStudy, ConjugatedTruthKeepsRelativePose) {
    ScenarioConfig s = small_scenario();
    s.noise_sigma = 0.0;
    s.shared_base_sample = true;
    const ScenarioInstance inst = make_instance(s);
    const Mat3 shared = rotation_from_euler({0.5, -0.3, 1.2});
    const ScenarioInstance rot = rotate_frame(inst, shared);
    EXPECT_EQ(count_inliers(rot.source, rot.reference, rot.ground_truth, 1e-6), rot.source.size());
    EXPECT_NEAR(rotation_geodesic_angle(rot.ground_truth.rotation, Mat3::Identity()),
                rotation_geodesic_angle(inst.ground_truth.rotation, Mat3::Identity()), 1e-9);
}

TEST(Scaling, OneRowPerRangeAndCapFailures) {
    SearchConfig base = small_search();
    auto rows = run_scaling_study(small_scenario(), base, {3.0}, {}, 1, 1);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].axis, "rotation");
    EXPECT_EQ(rows[0].rotations, 27u);
    EXPECT_EQ(rows[0].status, "ok");
    EXPECT_TRUE(rows[0].phase1_ms);

    base.max_candidates = 10;
    rows = run_scaling_study(small_scenario(), base, {3.0}, {0.05}, 1, 1);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].status, "search-too-large");
    EXPECT_FALSE(rows[0].phase1_ms);
    std::ostringstream out;
    write_scaling_csv(out, rows);
    EXPECT_EQ(out.str().find("nan"), std::string::npos);
    EXPECT_THROW(run_scaling_study(small_scenario(), base, {}, {}, 1), PreconditionError);
}

TEST(Register, SelfAlignmentIsIdentity) {
    const PointCloud c = sample_shape(ShapeSpec::parse("box"), 200, 4);
    const RegisterReport r = register_clouds(c, c, small_search());
    EXPECT_TRUE(r.result.best.rotation.isIdentity(1e-12));
    EXPECT_EQ(r.chamfer_after, 0.0);
    const auto j = register_report_to_json(r);
    EXPECT_EQ(j["inliers"], 200);
}

TEST(Register, FilesAndInstanceWriter) {
    ScenarioConfig s = small_scenario();
    s.rng_seed = 3;
    const auto dir = std::filesystem::temp_directory_path() / "dses_harness_test";
    std::filesystem::create_directories(dir);
    const std::string prefix = (dir / "inst").string();
    write_instance(make_instance(s), prefix);
    const auto gt = transform_from_json(read_json_file(prefix + "_gt.json"));
    const RegisterReport r = register_files(prefix + "_source.xyz", prefix + "_reference.xyz", small_search());
    EXPECT_LT(r.chamfer_after, r.chamfer_before);
    EXPECT_LT(rotation_geodesic_angle(r.result.best.rotation, gt.rotation), 6.0);
    EXPECT_THROW(register_files(dir / "missing.xyz", prefix + "_reference.xyz", small_search()), IoError);
    std::filesystem::remove_all(dir);
}

TEST(Json, ConfigRoundTrips) {
    ScenarioConfig s = small_scenario();
    s.pool_points = 400;
    s.snap_rot_step_deg = 2.0;
    s.shared_base_sample = true;
    const ScenarioConfig s2 = scenario_from_json(scenario_to_json(s));
    EXPECT_EQ(scenario_to_json(s2), scenario_to_json(s));
    EXPECT_EQ(s2.pool_points, 400);
    EXPECT_EQ(*s2.snap_rot_step_deg, 2.0);

    SearchConfig c = small_search();
    c.metric = ErrorMetric::l1();
    c.pivot = PivotMode::SourceCentroid;
    c.center = RigidTransform::from_euler({0.1, 0.2, 0.3}, Vec3(1, 2, 3));
    const SearchConfig c2 = search_from_json(search_to_json(c));
    EXPECT_EQ(search_to_json(c2), search_to_json(c));
    EXPECT_EQ(c2.rot_half_width, c.rot_half_width);
    EXPECT_TRUE(c2.center.rotation.isApprox(c.center.rotation, 1e-12));

    const auto t = RigidTransform::from_euler({0.3, -0.2, 0.1}, Vec3(0.5, 0, -1));
    EXPECT_TRUE(transform_from_json(transform_to_json(t)).rotation.isApprox(t.rotation, 1e-12));
    nlohmann::json euler = {{"euler_deg", {10.0, 0.0, 0.0}}, {"translation", {0, 0, 0}}};
    EXPECT_NEAR(rotation_geodesic_angle(transform_from_json(euler).rotation, Mat3::Identity()), 10.0, 1e-9);
}

TEST(Json, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(scenario_from_json({{"shape", "box"}, {"colour", "red"}}), PreconditionError);
    EXPECT_THROW(search_from_json({{"rot_step_deg", 1.0}, {"speed", 2}}), PreconditionError);
    EXPECT_THROW(scenario_from_json({{"shape", "sphere"}}), PreconditionError);
    EXPECT_THROW(search_from_json({{"metric", "huber"}}), PreconditionError);
    EXPECT_THROW(read_json_file("/nonexistent/dses.json"), IoError);
}
