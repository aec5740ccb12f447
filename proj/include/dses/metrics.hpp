#pragma once

#include "dses/geometry.hpp"

#include <cstddef>
#include <limits>
#include <span>
#include <optional>
#include <string>
#include <string_view>

namespace dses {

enum class MetricKind { L2, L1, TruncatedL1, SaturatedL0 };

/// Per-point residual norm. `param` is the truncation threshold for
/// TruncatedL1 and the bin width for SaturatedL0; unused otherwise.
struct ErrorMetric {
    MetricKind kind = MetricKind::L2;
    double param = 0.0;

    static ErrorMetric l2() { return {MetricKind::L2, 0.0}; }
    static ErrorMetric l1() { return {MetricKind::L1, 0.0}; }
    static ErrorMetric truncated_l1(double threshold);
    static ErrorMetric saturated_l0(double bin);

    /// Accepts the CLI spellings: l2, l1, trunc-l1, inliers. `param` feeds the
    /// parametrised kinds.
    static ErrorMetric parse(std::string_view name, double param);
    std::string name() const;

    bool operator==(const ErrorMetric&) const = default;
};

/// L2: |d|_2. L1: |dx|+|dy|+|dz|. TruncatedL1(tau): min(L1, tau).
/// SaturatedL0(b): 0 if |d|_inf < b/2, else 1.
double point_residual(const ErrorMetric& metric, const Vec3& d);

/// Sum over `moved` (source points already transformed) of the residual to
/// their best reference point, in index order. Stops early and returns the
/// partial sum once it exceeds `abandon_above`.
double residual_sum(std::span<const Vec3> moved, std::span<const Vec3> reference, const ErrorMetric& metric,
                    double abandon_above = std::numeric_limits<double>::infinity());

/// Sum over source points of the residual to their best reference point
/// under `transform`. Exact double loop, summed in source index order.
double alignment_error(const PointCloud& source, const PointCloud& reference,
                       const RigidTransform& transform, const ErrorMetric& metric);

/// Number of source points that land within the Chebyshev half-bin of some
/// reference point; N - alignment_error(..., SaturatedL0(bin)).
std::size_t count_inliers(const PointCloud& source, const PointCloud& reference,
                          const RigidTransform& transform, double bin);

/// Symmetric mean nearest-neighbour distance.
double chamfer_distance(const PointCloud& a, const PointCloud& b);

struct EvalReport {
    double mie_r = 0.0;  ///< geodesic rotation error, degrees
    double mie_t = 0.0;  ///< translation error norm, meters
    double mae_r = 0.0;  ///< mean per-axis Euler error, degrees
    double mae_t = 0.0;  ///< mean per-axis translation error, meters
    std::optional<double> chamfer;
    bool is_recall_hit = false;
};

inline constexpr double kRecallRotationDeg = 1.0;
inline constexpr double kRecallTranslation = 0.1;

EvalReport evaluate_pose(const RigidTransform& predicted, const RigidTransform& ground_truth);

}  // namespace dses
