#include "dses/benchgen.hpp"
#include "dses/errors.hpp"
#include "dses/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace dses;

TEST(Shapes, NormalisedToUnitSphere) {
    for (const char* name : {"box", "cylinder", "torus", "l-bracket", "random-blob"}) {
        const PointCloud c = sample_shape(ShapeSpec::parse(name), 500, 3);
        ASSERT_EQ(c.size(), 500u) << name;
        EXPECT_LT(c.centroid().norm(), 1e-12) << name;
        double max_norm = 0.0;
        for (const auto& p : c) max_norm = std::max(max_norm, p.norm());
        EXPECT_NEAR(max_norm, 1.0, 1e-12) << name;
    }
    EXPECT_THROW(ShapeSpec::parse("sphere"), PreconditionError);
    EXPECT_EQ(ShapeSpec::parse("file:/tmp/x.xyz").name(), "file:/tmp/x.xyz");
}

TEST(Shapes, SeedsAreReproducible) {
    const PointCloud a = sample_shape(ShapeSpec::parse("l-bracket"), 100, 42);
    const PointCloud b = sample_shape(ShapeSpec::parse("l-bracket"), 100, 42);
    const PointCloud c = sample_shape(ShapeSpec::parse("l-bracket"), 100, 43);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
    EXPECT_NE(a[0], c[0]);
}

// Area-uniform sampling of a torus: the tube angle v has density
// proportional to R + r cos v.
TEST(Shapes, TorusTubeAngleChiSquare) {
    const int n = 20000;
    const PointCloud c = sample_shape(ShapeSpec::parse("torus"), n, 8);
    const double major = 1.0, minor = 0.35, scale = major + minor;
    const int bins = 8;
    std::vector<int> counts(bins, 0);
    for (const auto& p : c) {
        const double ring = std::hypot(p.x(), p.y()) * scale - major;
        double v = std::atan2(p.z() * scale, ring);
        if (v < 0) v += 2 * std::numbers::pi;
        counts[std::min(bins - 1, static_cast<int>(v / (2 * std::numbers::pi) * bins))]++;
    }
    double chi2 = 0.0;
    for (int b = 0; b < bins; ++b) {
        const double v0 = 2 * std::numbers::pi * b / bins, v1 = 2 * std::numbers::pi * (b + 1) / bins;
        const double mass = (major * (v1 - v0) + minor * (std::sin(v1) - std::sin(v0))) / (2 * std::numbers::pi * major);
        const double expected = mass * n;
        chi2 += (counts[b] - expected) * (counts[b] - expected) / expected;
    }
    EXPECT_LT(chi2, 24.3);  // df 7, p = 0.001
}

TEST(Transforms, SampledWithinRanges) {
    for (std::uint64_t s = 0; s < 200; ++s) {
        const RigidTransform t = sample_transform(30.0, 0.2, s);
        const EulerAngles e = euler_from_rotation(t.rotation);
        EXPECT_LE(std::abs(rad2deg(e.theta)), 30.0 + 1e-9);
        EXPECT_LE(std::abs(rad2deg(e.phi)), 30.0 + 1e-9);
        EXPECT_LE(std::abs(rad2deg(e.xi)), 30.0 + 1e-9);
        EXPECT_LE(t.translation.cwiseAbs().maxCoeff(), 0.2);
    }
    EXPECT_THROW(sample_transform(-1.0, 0.1, 0), PreconditionError);
}

TEST(Jitter, StandardDeviationAndClip) {
    std::vector<Vec3> zeros(20000, Vec3::Zero());
    const PointCloud base(zeros);
    const PointCloud noisy = jitter(base, 0.01, 0.05, 5);
    double sum2 = 0.0;
    for (const auto& p : noisy) sum2 += p.squaredNorm();
    EXPECT_NEAR(std::sqrt(sum2 / (3.0 * noisy.size())), 0.01, 0.0005);

    const PointCloud clipped = jitter(base, 0.01, 0.005, 5);
    double max_abs = 0.0;
    for (const auto& p : clipped) max_abs = std::max(max_abs, p.cwiseAbs().maxCoeff());
    EXPECT_LE(max_abs, 0.005);
    EXPECT_EQ(max_abs, 0.005);
}

TEST(Crop, KeptCountRounding) {
    EXPECT_EQ(kept_count(1024, 0.7), 717u);
    EXPECT_EQ(kept_count(10, 0.25), 3u);
    EXPECT_EQ(kept_count(10, 0.01), 1u);
    EXPECT_EQ(kept_count(10, 1.0), 10u);
}

TEST(Crop, KeepsAHalfspaceInOriginalOrder) {
    const PointCloud c = sample_shape(ShapeSpec::parse("box"), 400, 1);
    const PointCloud kept = halfspace_crop(c, 0.6, 9);
    ASSERT_EQ(kept.size(), 240u);
    // Survivors form an ordered subsequence of the input.
    std::size_t j = 0;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        while (j < c.size() && c[j] != kept[i]) ++j;
        ASSERT_LT(j, c.size());
    }
    EXPECT_THROW(halfspace_crop(c, 0.0, 1), PreconditionError);
}

// Points on a line: any crop direction keeps either the lowest or the
// highest x values.
TEST(Crop, CollinearPointsKeepAnEndOfTheLine) {
    std::vector<Vec3> line;
    for (int i = 0; i < 50; ++i) line.emplace_back((i * 37 % 50) * 0.1, 0.0, 0.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const PointCloud kept = halfspace_crop(PointCloud(line), 0.3, seed);
        ASSERT_EQ(kept.size(), 15u);
        std::vector<double> xs;
        for (const auto& p : kept) xs.push_back(p.x());
        std::sort(xs.begin(), xs.end());
        const bool low = xs.back() < 1.5 - 1e-9;
        const bool high = xs.front() > 3.5 - 1e-9;
        EXPECT_TRUE(low || high) << "seed " << seed;
    }
}

TEST(Instance, GroundTruthMapsSourceOntoReference) {
    ScenarioConfig cfg;
    cfg.points_reference = 300;
    cfg.noise_sigma = 0.0;
    cfg.shared_base_sample = true;
    cfg.rng_seed = 17;
    const ScenarioInstance inst = make_instance(cfg);
    EXPECT_EQ(inst.source.size(), kept_count(300, 0.7));
    EXPECT_EQ(count_inliers(inst.source, inst.reference, inst.ground_truth, 1e-6), inst.source.size());
    EXPECT_EQ(alignment_error(inst.source, inst.reference, inst.ground_truth, ErrorMetric::l2()) <
                  1e-9 * static_cast<double>(inst.source.size()),
              true);
}

TEST(Instance, DeterministicAndSnapped) {
    ScenarioConfig cfg;
    cfg.points_reference = cfg.points_source = 200;
    cfg.rng_seed = 5;
    cfg.snap_rot_step_deg = 3.0;
    cfg.snap_trans_bin = 0.025;
    const ScenarioInstance a = make_instance(cfg);
    const ScenarioInstance b = make_instance(cfg);
    EXPECT_EQ(a.ground_truth.rotation, b.ground_truth.rotation);
    for (std::size_t i = 0; i < a.source.size(); ++i) EXPECT_EQ(a.source[i], b.source[i]);
    const EulerAngles e = euler_from_rotation(a.ground_truth.rotation);
    for (double v : {e.theta, e.phi, e.xi}) {
        const double steps = rad2deg(v) / 3.0;
        EXPECT_NEAR(steps, std::round(steps), 1e-9);
    }
    for (int k = 0; k < 3; ++k) {
        const double bins = a.ground_truth.translation[k] / 0.025;
        EXPECT_NEAR(bins, std::round(bins), 1e-9);
    }
}

TEST(Instance, PoolDrawsBothCloudsFromOneSample) {
    ScenarioConfig cfg;
    cfg.points_reference = cfg.points_source = 100;
    cfg.pool_points = 150;
    cfg.noise_sigma = 0.0;
    cfg.keep_fraction = 1.0;
    cfg.rng_seed = 2;
    const ScenarioInstance inst = make_instance(cfg);
    // 100 + 100 draws from 150 points share at least 50.
    EXPECT_GE(count_inliers(inst.source, inst.reference, inst.ground_truth, 1e-6), 50u);
    cfg.pool_points = 50;
    EXPECT_THROW(make_instance(cfg), PreconditionError);
}

TEST(Instance, ConfigValidation) {
    ScenarioConfig cfg;
    cfg.keep_fraction = 0.0;
    EXPECT_THROW(cfg.validate(), PreconditionError);
    cfg = {};
    cfg.scale = -1.0;
    EXPECT_THROW(cfg.validate(), PreconditionError);
    cfg = {};
    cfg.snap_trans_bin = 0.0;
    EXPECT_THROW(cfg.validate(), PreconditionError);
}

TEST(Seeds, DerivedStreamsDiffer) {
    EXPECT_NE(derive_seed(1, 1), derive_seed(1, 2));
    EXPECT_NE(derive_seed(1, 1), derive_seed(2, 1));
    EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}
