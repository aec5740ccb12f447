#include "dses/errors.hpp"
#include "dses/metrics.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dses;

namespace {

std::vector<Vec3> random_points(std::mt19937_64& rng, int n, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<Vec3> out;
    for (int i = 0; i < n; ++i) out.emplace_back(u(rng), u(rng), u(rng));
    return out;
}

// Same objective, loops reversed and summed back to front.
double reversed_alignment_error(const std::vector<Vec3>& src, const std::vector<Vec3>& ref,
                                const RigidTransform& t, const ErrorMetric& m) {
    double sum = 0.0;
    for (std::size_t i = src.size(); i-- > 0;) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = ref.size(); j-- > 0;) best = std::min(best, point_residual(m, t.apply(src[i]) - ref[j]));
        sum += best;
    }
    return sum;
}

double nn(const Vec3& p, const std::vector<Vec3>& cloud) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : cloud) best = std::min(best, (p - q).norm());
    return best;
}

}  // namespace

TEST(Residual, EachKind) {
    const Vec3 d(0.3, -0.4, 0.0);
    EXPECT_DOUBLE_EQ(point_residual(ErrorMetric::l2(), d), 0.5);
    EXPECT_DOUBLE_EQ(point_residual(ErrorMetric::l1(), d), 0.7);
    EXPECT_DOUBLE_EQ(point_residual(ErrorMetric::truncated_l1(0.5), d), 0.5);
    EXPECT_DOUBLE_EQ(point_residual(ErrorMetric::truncated_l1(1.0), d), 0.7);
    EXPECT_EQ(point_residual(ErrorMetric::saturated_l0(1.0), d), 0.0);
    EXPECT_EQ(point_residual(ErrorMetric::saturated_l0(0.81), d), 0.0);
    // The half-bin boundary itself is an outlier.
    EXPECT_EQ(point_residual(ErrorMetric::saturated_l0(0.8), d), 1.0);
}

TEST(Metric, ParseAndValidate) {
    EXPECT_EQ(ErrorMetric::parse("l2", 0.0), ErrorMetric::l2());
    EXPECT_EQ(ErrorMetric::parse("trunc-l1", 0.2), ErrorMetric::truncated_l1(0.2));
    EXPECT_EQ(ErrorMetric::parse("inliers", 0.05), ErrorMetric::saturated_l0(0.05));
    EXPECT_THROW(ErrorMetric::parse("huber", 1.0), PreconditionError);
    EXPECT_THROW(ErrorMetric::truncated_l1(0.0), PreconditionError);
    EXPECT_THROW(ErrorMetric::saturated_l0(-1.0), PreconditionError);
}

TEST(AlignmentError, MatchesReversedLoopOracle) {
    std::mt19937_64 rng(21);
    const ErrorMetric metrics[] = {ErrorMetric::l2(), ErrorMetric::l1(), ErrorMetric::truncated_l1(0.15),
                                   ErrorMetric::saturated_l0(0.1)};
    for (int k = 0; k < 20; ++k) {
        const auto src = random_points(rng, 40);
        const auto ref = random_points(rng, 55);
        const auto t = RigidTransform::from_euler({0.1 * k, -0.05 * k, 0.2}, Vec3(0.1, -0.2, 0.05 * k));
        for (const auto& m : metrics) {
            const double got = alignment_error(PointCloud(src), PointCloud(ref), t, m);
            EXPECT_NEAR(got, reversed_alignment_error(src, ref, t, m), 1e-9) << m.name();
        }
    }
}

TEST(AlignmentError, CountInliersIsComplement) {
    std::mt19937_64 rng(4);
    const PointCloud src(random_points(rng, 60));
    const PointCloud ref(random_points(rng, 80));
    const auto t = RigidTransform::from_euler({0.2, 0.1, -0.3}, Vec3(0.05, 0, 0));
    const double err = alignment_error(src, ref, t, ErrorMetric::saturated_l0(0.2));
    EXPECT_EQ(count_inliers(src, ref, t, 0.2), src.size() - static_cast<std::size_t>(err));
}

TEST(AlignmentError, ResidualSumAbandonsEarly) {
    std::mt19937_64 rng(8);
    const auto src = random_points(rng, 100);
    const auto ref = random_points(rng, 100, 0.1);
    const double full = residual_sum(src, ref, ErrorMetric::l1());
    const double partial = residual_sum(src, ref, ErrorMetric::l1(), full / 4.0);
    EXPECT_GT(partial, full / 4.0);
    EXPECT_LT(partial, full);
}

TEST(Chamfer, MatchesDoubleLoopAndIsSymmetric) {
    std::mt19937_64 rng(13);
    const auto a = random_points(rng, 30);
    const auto b = random_points(rng, 45);
    double sa = 0.0, sb = 0.0;
    for (const auto& p : a) sa += nn(p, b);
    for (const auto& p : b) sb += nn(p, a);
    const double expected = 0.5 * (sa / a.size() + sb / b.size());
    EXPECT_NEAR(chamfer_distance(PointCloud(a), PointCloud(b)), expected, 1e-12);
    EXPECT_NEAR(chamfer_distance(PointCloud(b), PointCloud(a)), expected, 1e-12);
    EXPECT_EQ(chamfer_distance(PointCloud(a), PointCloud(a)), 0.0);
}

TEST(Evaluate, IdentityAndKnownOffsets) {
    const auto gt = RigidTransform::from_euler({0.1, 0.2, 0.3}, Vec3(0.1, 0.2, 0.3));
    const EvalReport same = evaluate_pose(gt, gt);
    EXPECT_NEAR(same.mie_r, 0.0, 1e-6);
    EXPECT_EQ(same.mie_t, 0.0);
    EXPECT_TRUE(same.is_recall_hit);

    const auto off = RigidTransform::from_euler({0.1 + deg2rad(3.0), 0.2, 0.3}, Vec3(0.1, 0.2, 0.6));
    const EvalReport e = evaluate_pose(off, gt);
    EXPECT_NEAR(e.mae_r, 1.0, 1e-9);
    EXPECT_NEAR(e.mae_t, 0.1, 1e-12);
    EXPECT_NEAR(e.mie_r, 3.0, 1e-6);
    EXPECT_NEAR(e.mie_t, 0.3, 1e-12);
    EXPECT_FALSE(e.is_recall_hit);
}

TEST(Evaluate, EulerDifferencesWrapAroundPi) {
    const auto a = RigidTransform::from_euler({deg2rad(179.0), 0, 0}, Vec3::Zero());
    const auto b = RigidTransform::from_euler({deg2rad(-179.0), 0, 0}, Vec3::Zero());
    EXPECT_NEAR(evaluate_pose(a, b).mae_r, 2.0 / 3.0, 1e-9);
}
