#include "dses/errors.hpp"
#include "dses/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace dses;

namespace {

Mat3 reference_rotation(const EulerAngles& e) {
    return (Eigen::AngleAxisd(e.xi, Vec3::UnitZ()) * Eigen::AngleAxisd(e.phi, Vec3::UnitY()) *
            Eigen::AngleAxisd(e.theta, Vec3::UnitX()))
        .toRotationMatrix();
}

// Geodesic angle through unit quaternions: 2 acos |<qa, qb>|.
double quaternion_angle_deg(const Mat3& a, const Mat3& b) {
    const Eigen::Quaterniond qa(a), qb(b);
    const double d = std::min(1.0, std::abs(qa.dot(qb)));
    return rad2deg(2.0 * std::acos(d));
}

EulerAngles random_angles(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> full(-3.1, 3.1);
    std::uniform_real_distribution<double> half(-1.5, 1.5);
    return {full(rng), half(rng), full(rng)};
}

}  // namespace

TEST(Euler, MatchesAxisAngleProduct) {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 200; ++k) {
        const EulerAngles e = random_angles(rng);
        EXPECT_TRUE(rotation_from_euler(e).isApprox(reference_rotation(e), 1e-12));
    }
}

TEST(Euler, RoundTripAwayFromGimbalLock) {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 500; ++k) {
        const EulerAngles e = random_angles(rng);
        const EulerAngles back = euler_from_rotation(rotation_from_euler(e));
        EXPECT_NEAR(back.theta, e.theta, 1e-9);
        EXPECT_NEAR(back.phi, e.phi, 1e-9);
        EXPECT_NEAR(back.xi, e.xi, 1e-9);
    }
}

TEST(Euler, GimbalLockStillReproducesMatrix) {
    for (double phi : {std::numbers::pi / 2, -std::numbers::pi / 2}) {
        const Mat3 r = rotation_from_euler({0.3, phi, -0.7});
        EXPECT_TRUE(rotation_from_euler(euler_from_rotation(r)).isApprox(r, 1e-9));
    }
}

TEST(Geodesic, AgreesWithQuaternionOracle) {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 300; ++k) {
        const Mat3 a = rotation_from_euler(random_angles(rng));
        const Mat3 b = rotation_from_euler(random_angles(rng));
        EXPECT_NEAR(rotation_geodesic_angle(a, b), quaternion_angle_deg(a, b), 1e-6);
    }
}

TEST(Geodesic, EdgeValues) {
    const Mat3 r = rotation_from_euler({0.4, 0.2, -1.0});
    EXPECT_NEAR(rotation_geodesic_angle(r, r), 0.0, 1e-6);
    const Mat3 flip = rotation_from_euler({std::numbers::pi, 0.0, 0.0});
    EXPECT_NEAR(rotation_geodesic_angle(Mat3::Identity(), flip), 180.0, 1e-6);
    EXPECT_NEAR(rotation_geodesic_angle(Mat3::Identity(), rotation_from_euler({0, 0, deg2rad(30)})), 30.0, 1e-9);
}

TEST(RigidTransform, ComposeAndInverse) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 50; ++k) {
        const auto a = RigidTransform::from_euler(random_angles(rng), Vec3(u(rng), u(rng), u(rng)));
        const auto b = RigidTransform::from_euler(random_angles(rng), Vec3(u(rng), u(rng), u(rng)));
        const Vec3 p(u(rng), u(rng), u(rng));
        EXPECT_TRUE(compose(a, b).apply(p).isApprox(a.apply(b.apply(p)), 1e-12));
        EXPECT_TRUE(a.inverse().apply(a.apply(p)).isApprox(p, 1e-12));
        EXPECT_NO_THROW(compose(a, a.inverse()).validate());
    }
}

TEST(RigidTransform, ValidateRejectsBadRotations) {
    RigidTransform t;
    t.rotation(0, 0) = 1.1;
    EXPECT_THROW(t.validate(), PreconditionError);
    RigidTransform mirror;
    mirror.rotation(2, 2) = -1.0;
    EXPECT_THROW(mirror.validate(), PreconditionError);
    RigidTransform nan;
    nan.translation.x() = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(nan.validate(), PreconditionError);
}

TEST(PointCloud, RejectsEmptyAndNonFinite) {
    EXPECT_THROW(PointCloud(std::vector<Vec3>{}), PreconditionError);
    EXPECT_THROW(PointCloud({Vec3(0, std::numeric_limits<double>::infinity(), 0)}), PreconditionError);
}

TEST(PointCloud, CentroidAndSeparation) {
    const PointCloud c({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 0.2, 0)});
    EXPECT_TRUE(c.centroid().isApprox(Vec3(1.0 / 3, 0.2 / 3, 0)));
    EXPECT_TRUE(c.is_separated(0.19));
    EXPECT_FALSE(c.is_separated(0.2));
}

TEST(RotationGrid, SizeOrderAndFlatIndex) {
    const RotationGrid g = build_rotation_grid(2, deg2rad(5.0));
    ASSERT_EQ(g.size(), 125u);
    EXPECT_EQ(g[0].index, (GridIndex{-2, -2, -2}));
    EXPECT_EQ(g[1].index, (GridIndex{-2, -2, -1}));
    EXPECT_EQ(g[124].index, (GridIndex{2, 2, 2}));
    for (std::size_t k = 0; k < g.size(); ++k) {
        EXPECT_EQ(g.flat_index(g[k].index), k);
        const auto& e = g[k];
        EXPECT_DOUBLE_EQ(e.angles.theta, e.index[0] * deg2rad(5.0));
        EXPECT_TRUE(e.rotation.isApprox(rotation_from_euler(e.angles), 0.0));
        if (k > 0) EXPECT_LT(g[k - 1].index, g[k].index);
    }
}

TEST(RotationGrid, PreconditionsAndIdentityNode) {
    EXPECT_THROW(build_rotation_grid(-1, 0.1), PreconditionError);
    EXPECT_THROW(build_rotation_grid(1, 0.0), PreconditionError);
    EXPECT_THROW(build_rotation_grid(4, 1.0), PreconditionError);
    const RotationGrid g = build_rotation_grid(0, 0.1);
    ASSERT_EQ(g.size(), 1u);
    EXPECT_TRUE(g[0].rotation.isIdentity(0.0));
}
