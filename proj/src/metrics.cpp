#include "dses/metrics.hpp"

#include "dses/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace dses {

ErrorMetric ErrorMetric::truncated_l1(double threshold) {
    if (!(threshold > 0.0)) throw PreconditionError("truncation threshold must be positive");
    return {MetricKind::TruncatedL1, threshold};
}

ErrorMetric ErrorMetric::saturated_l0(double bin) {
    if (!(bin > 0.0)) throw PreconditionError("inlier bin must be positive");
    return {MetricKind::SaturatedL0, bin};
}

ErrorMetric ErrorMetric::parse(std::string_view name, double param) {
    if (name == "l2") return l2();
    if (name == "l1") return l1();
    if (name == "trunc-l1") return truncated_l1(param);
    if (name == "inliers") return saturated_l0(param);
    throw PreconditionError("unknown metric '" + std::string(name) + "'");
}

std::string ErrorMetric::name() const {
    switch (kind) {
        case MetricKind::L2: return "l2";
        case MetricKind::L1: return "l1";
        case MetricKind::TruncatedL1: return "trunc-l1";
        case MetricKind::SaturatedL0: return "inliers";
    }
    return "?";
}

double point_residual(const ErrorMetric& metric, const Vec3& d) {
    switch (metric.kind) {
        case MetricKind::L2: return d.norm();
        case MetricKind::L1: return d.cwiseAbs().sum();
        case MetricKind::TruncatedL1: return std::min(d.cwiseAbs().sum(), metric.param);
        case MetricKind::SaturatedL0: return d.cwiseAbs().maxCoeff() < metric.param / 2.0 ? 0.0 : 1.0;
    }
    return 0.0;
}

namespace {

// Each kernel returns min over the reference of the residual for one
// transformed source point. The early exits only skip references that cannot
// lower the minimum, so results equal the plain double loop.

double min_l2(const Vec3& p, std::span<const Vec3> ref) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& y : ref) best = std::min(best, (y - p).squaredNorm());
    return std::sqrt(best);
}

double min_l1(const Vec3& p, std::span<const Vec3> ref, double cap) {
    double best = cap;
    for (const auto& y : ref) {
        const double dx = std::abs(y.x() - p.x());
        if (dx >= best) continue;
        const double s = dx + std::abs(y.y() - p.y()) + std::abs(y.z() - p.z());
        if (s < best) {
            best = s;
            if (best == 0.0) break;
        }
    }
    return best;
}

double min_l0(const Vec3& p, std::span<const Vec3> ref, double half) {
    for (const auto& y : ref) {
        if (std::abs(y.x() - p.x()) < half && std::abs(y.y() - p.y()) < half &&
            std::abs(y.z() - p.z()) < half) {
            return 0.0;
        }
    }
    return 1.0;
}

void require_non_empty(const PointCloud& a, const PointCloud& b) {
    // Only reachable through a moved-from cloud.
    if (a.size() == 0 || b.size() == 0) throw PreconditionError("point clouds must be non-empty");
}

}  // namespace

double residual_sum(std::span<const Vec3> moved, std::span<const Vec3> reference, const ErrorMetric& metric,
                    double abandon_above) {
    double total = 0.0;
    for (const auto& p : moved) {
        switch (metric.kind) {
            case MetricKind::L2: total += min_l2(p, reference); break;
            case MetricKind::L1: total += min_l1(p, reference, std::numeric_limits<double>::infinity()); break;
            case MetricKind::TruncatedL1: total += min_l1(p, reference, metric.param); break;
            case MetricKind::SaturatedL0: total += min_l0(p, reference, metric.param / 2.0); break;
        }
        if (total > abandon_above) return total;
    }
    return total;
}

double alignment_error(const PointCloud& source, const PointCloud& reference,
                       const RigidTransform& transform, const ErrorMetric& metric) {
    require_non_empty(source, reference);
    std::vector<Vec3> moved;
    moved.reserve(source.size());
    for (const auto& x : source) moved.push_back(transform.apply(x));
    return residual_sum(moved, reference.points(), metric);
}

std::size_t count_inliers(const PointCloud& source, const PointCloud& reference,
                          const RigidTransform& transform, double bin) {
    const double misses = alignment_error(source, reference, transform, ErrorMetric::saturated_l0(bin));
    return source.size() - static_cast<std::size_t>(misses);
}

namespace {

double mean_nearest(const PointCloud& from, const PointCloud& to) {
    double sum = 0.0;
    for (const auto& p : from) sum += min_l2(p, to.points());
    return sum / static_cast<double>(from.size());
}

double wrap_pi(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

}  // namespace

double chamfer_distance(const PointCloud& a, const PointCloud& b) {
    require_non_empty(a, b);
    return 0.5 * (mean_nearest(a, b) + mean_nearest(b, a));
}

EvalReport evaluate_pose(const RigidTransform& predicted, const RigidTransform& ground_truth) {
    EvalReport r;
    r.mie_r = rotation_geodesic_angle(ground_truth.rotation, predicted.rotation);
    r.mie_t = (predicted.translation - ground_truth.translation).norm();

    const EulerAngles ep = euler_from_rotation(predicted.rotation);
    const EulerAngles eg = euler_from_rotation(ground_truth.rotation);
    const double dr = std::abs(wrap_pi(ep.theta - eg.theta)) + std::abs(wrap_pi(ep.phi - eg.phi)) +
                      std::abs(wrap_pi(ep.xi - eg.xi));
    r.mae_r = rad2deg(dr / 3.0);
    r.mae_t = (predicted.translation - ground_truth.translation).cwiseAbs().sum() / 3.0;
    r.is_recall_hit = r.mae_r < kRecallRotationDeg && r.mae_t < kRecallTranslation;
    return r;
}

}  // namespace dses
