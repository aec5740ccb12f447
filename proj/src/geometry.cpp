#include "dses/geometry.hpp"

#include "dses/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dses {

PointCloud::PointCloud(std::vector<Vec3> points) : points_(std::move(points)) {
    if (points_.empty()) {
        throw PreconditionError("point cloud must contain at least one point");
    }
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!points_[i].allFinite()) {
            throw PreconditionError("point " + std::to_string(i) + " is not finite");
        }
    }
}

Vec3 PointCloud::centroid() const {
    Vec3 sum = Vec3::Zero();
    for (const auto& p : points_) sum += p;
    return sum / static_cast<double>(points_.size());
}

bool PointCloud::is_separated(double delta) const {
    for (std::size_t i = 0; i < points_.size(); ++i) {
        for (std::size_t j = i + 1; j < points_.size(); ++j) {
            if ((points_[i] - points_[j]).cwiseAbs().maxCoeff() <= delta) return false;
        }
    }
    return true;
}

Mat3 rotation_from_euler(const EulerAngles& angles) {
    const double ct = std::cos(angles.theta), st = std::sin(angles.theta);
    const double cp = std::cos(angles.phi), sp = std::sin(angles.phi);
    const double cx = std::cos(angles.xi), sx = std::sin(angles.xi);
    Mat3 r;
    r << cx * cp, cx * sp * st - sx * ct, cx * sp * ct + sx * st,
         sx * cp, sx * sp * st + cx * ct, sx * sp * ct - cx * st,
         -sp,     cp * st,                cp * ct;
    return r;
}

EulerAngles euler_from_rotation(const Mat3& r) {
    EulerAngles e;
    const double sp = std::clamp(-r(2, 0), -1.0, 1.0);
    e.phi = std::asin(sp);
    const double cp = std::hypot(r(2, 1), r(2, 2));
    if (cp > 1e-12) {
        e.theta = std::atan2(r(2, 1), r(2, 2));
        e.xi = std::atan2(r(1, 0), r(0, 0));
    } else {
        // Gimbal lock: only theta - xi (or theta + xi) is observable; fold it into theta.
        e.theta = std::atan2(-r(1, 2), r(1, 1));
        e.xi = 0.0;
    }
    return e;
}

RigidTransform RigidTransform::from_euler(const EulerAngles& angles, const Vec3& translation) {
    RigidTransform t;
    t.rotation = rotation_from_euler(angles);
    t.translation = translation;
    return t;
}

RigidTransform RigidTransform::inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
}

void RigidTransform::validate() const {
    if (!rotation.allFinite() || !translation.allFinite()) {
        throw PreconditionError("rigid transform has non-finite entries");
    }
    const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (ortho > 1e-9) throw PreconditionError("rotation is not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > 1e-9) {
        throw PreconditionError("rotation determinant is not +1");
    }
}

RigidTransform compose(const RigidTransform& outer, const RigidTransform& inner) {
    RigidTransform out;
    out.rotation = outer.rotation * inner.rotation;
    out.translation = outer.rotation * inner.translation + outer.translation;
    return out;
}

PointCloud apply_transform(const RigidTransform& transform, const PointCloud& cloud) {
    std::vector<Vec3> out;
    out.reserve(cloud.size());
    for (const auto& p : cloud) out.push_back(transform.apply(p));
    return PointCloud(std::move(out));
}

double rotation_geodesic_angle(const Mat3& a, const Mat3& b) {
    const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
    return rad2deg(std::acos(c));
}

RotationGrid::RotationGrid(int half_width, double step) : half_width_(half_width), step_(step) {
    if (half_width < 0) throw PreconditionError("rotation grid half-width must be >= 0");
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw PreconditionError("rotation step must be positive");
    }
    if (half_width * step > std::numbers::pi + 1e-12) {
        throw PreconditionError("rotation grid K * step exceeds pi; the grid would wrap");
    }
    const int w = 2 * half_width + 1;
    entries_.reserve(static_cast<std::size_t>(w) * w * w);
    for (int i = -half_width; i <= half_width; ++i) {
        for (int j = -half_width; j <= half_width; ++j) {
            for (int k = -half_width; k <= half_width; ++k) {
                RotationGridEntry e;
                e.index = {i, j, k};
                e.angles = {i * step, j * step, k * step};
                e.rotation = rotation_from_euler(e.angles);
                entries_.push_back(e);
            }
        }
    }
}

std::size_t RotationGrid::flat_index(const GridIndex& index) const {
    const std::size_t w = 2 * half_width_ + 1;
    return (static_cast<std::size_t>(index[0] + half_width_) * w +
            static_cast<std::size_t>(index[1] + half_width_)) * w +
           static_cast<std::size_t>(index[2] + half_width_);
}

RotationGrid build_rotation_grid(int half_width, double step) { return RotationGrid(half_width, step); }

}  // namespace dses
