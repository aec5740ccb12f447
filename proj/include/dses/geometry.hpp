#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace dses {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Integer coordinates of a node on the rotation grid (theta, phi, xi steps).
using GridIndex = std::array<int, 3>;

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Ordered, non-empty set of finite 3D points (meters).
class PointCloud {
public:
    /// Throws PreconditionError if `points` is empty or holds a non-finite value.
    explicit PointCloud(std::vector<Vec3> points);

    std::size_t size() const { return points_.size(); }
    const Vec3& operator[](std::size_t i) const { return points_[i]; }
    std::span<const Vec3> points() const { return points_; }
    auto begin() const { return points_.begin(); }
    auto end() const { return points_.end(); }

    Vec3 centroid() const;

    /// True when no two points lie within `delta` of each other in the
    /// Chebyshev (per-axis max) metric.
    bool is_separated(double delta) const;

private:
    std::vector<Vec3> points_;
};

/// Euler angles in radians. The rotation they describe is
/// R = Rz(xi) * Ry(phi) * Rx(theta), i.e. extrinsic X then Y then Z.
struct EulerAngles {
    double theta = 0.0;
    double phi = 0.0;
    double xi = 0.0;
};

Mat3 rotation_from_euler(const EulerAngles& angles);

/// Inverse of rotation_from_euler. phi is returned in [-pi/2, pi/2], theta and
/// xi in [-pi, pi].
EulerAngles euler_from_rotation(const Mat3& rotation);

/// Rigid transform x -> rotation * x + translation.
struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
    std::optional<GridIndex> grid_coords;

    static RigidTransform identity() { return {}; }
    static RigidTransform from_euler(const EulerAngles& angles, const Vec3& translation);

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    RigidTransform inverse() const;

    /// Throws PreconditionError unless the rotation is orthonormal with
    /// determinant +1 (1e-9 per entry) and every entry is finite.
    void validate() const;
};

/// Returns `outer` after `inner`: x -> outer(inner(x)).
RigidTransform compose(const RigidTransform& outer, const RigidTransform& inner);

PointCloud apply_transform(const RigidTransform& transform, const PointCloud& cloud);

/// Geodesic distance on SO(3) in degrees, in [0, 180].
double rotation_geodesic_angle(const Mat3& a, const Mat3& b);

struct RotationGridEntry {
    GridIndex index;
    EulerAngles angles;
    Mat3 rotation;
};

/// All (2K+1)^3 Euler triples {-K*step, ..., K*step}^3, enumerated
/// lexicographically in (theta, phi, xi) index order.
class RotationGrid {
public:
    RotationGrid(int half_width, double step);

    int half_width() const { return half_width_; }
    double step() const { return step_; }
    std::size_t size() const { return entries_.size(); }
    const RotationGridEntry& operator[](std::size_t i) const { return entries_[i]; }
    std::span<const RotationGridEntry> entries() const { return entries_; }

    /// Position of `index` in enumeration order.
    std::size_t flat_index(const GridIndex& index) const;

private:
    int half_width_;
    double step_;
    std::vector<RotationGridEntry> entries_;
};

/// Throws PreconditionError for K < 0, step <= 0 or K * step > pi.
RotationGrid build_rotation_grid(int half_width, double step);

}  // namespace dses
