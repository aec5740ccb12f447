#pragma once

#include "dses/geometry.hpp"
#include "dses/metrics.hpp"
#include "dses/mode_search.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace dses {

/// Point the rotation offsets of the grid turn about.
enum class PivotMode {
    Origin,          ///< rotate about the coordinate origin
    SourceCentroid,  ///< rotate about the centroid of the source in the center pose
};

/// Search grid around a center pose. A grid pose applies the center pose first
/// and then an offset: rotation by a grid rotation about the pivot, followed by
/// a translation offset within +-trans_half_width * trans_bin per axis.
struct SearchConfig {
    int rot_half_width = 0;
    double rot_step = deg2rad(1.0);  ///< radians
    int trans_half_width = 0;
    double trans_bin = 0.01;  ///< meters
    double q = 0.5;
    /// Refinement metric; unset means TruncatedL1(5 * trans_bin).
    std::optional<ErrorMetric> metric;
    RigidTransform center;
    PivotMode pivot = PivotMode::Origin;
    VoteMode vote_mode = VoteMode::DistinctSources;
    /// Worker threads; 0 uses the OpenMP default.
    int threads = 0;
    /// Upper bound on grid poses (exhaustive) or grid rotations (DSES).
    std::uint64_t max_candidates = 100'000'000;

    /// Half-widths from symmetric ranges: K = floor(range / step).
    static SearchConfig from_ranges(double rot_range_deg, double rot_step_deg, double trans_range,
                                    double trans_bin);

    ErrorMetric resolved_metric() const;
    void validate() const;
};

struct PoseCandidate {
    RigidTransform transform;
    std::size_t inliers = 0;
    std::optional<double> refined_error;
    /// Position of the candidate's rotation in grid enumeration order.
    std::size_t grid_order = 0;
};

struct PhaseTimings {
    double phase1_ms = 0.0;  ///< per-rotation mode search (DSES) or full grid scan (exhaustive)
    double phase2_ms = 0.0;  ///< candidate sort
    double phase3_ms = 0.0;  ///< refinement under the chosen metric
    double total_ms = 0.0;
};

struct RegistrationResult {
    RigidTransform best;
    double best_error = 0.0;
    std::size_t best_inliers = 0;
    std::size_t candidates_evaluated = 0;
    std::size_t candidates_refined = 0;
    PhaseTimings elapsed;
};

/// Resolves center, pivot and per-rotation translation bounds of a search.
class SearchFrame {
public:
    SearchFrame(const SearchConfig& config, const PointCloud& source);

    const Vec3& pivot() const { return pivot_; }
    /// Absolute rotation of the grid pose with rotation offset `offset`.
    Mat3 rotation(const Mat3& offset) const { return offset * center_.rotation; }
    /// Translation of the grid pose with rotation offset `offset` and zero translation offset.
    Vec3 translation_center(const Mat3& offset) const;
    TranslationBounds bounds(const Mat3& offset) const;
    RigidTransform pose(const Mat3& offset, const Vec3& translation_offset) const;

private:
    RigidTransform center_;
    Vec3 pivot_;
    double half_extent_;
};

/// Scores every node of the 6-D grid and returns the minimiser of
/// alignment_error. Ties go to the lexicographically smallest (rotation,
/// translation) grid index. Cost O(K^6 M N).
RegistrationResult exhaustive_search(const PointCloud& source, const PointCloud& reference,
                                     const SearchConfig& config);

/// Direct semi-exhaustive search. For every grid rotation the inlier-maximising
/// translation comes from mode_translation; candidates are sorted by inlier
/// count and those with count >= q * max are rescored with the configured
/// metric. With SaturatedL0(trans_bin) the rescoring is skipped and the
/// highest-count candidate is returned directly.
RegistrationResult dses(const PointCloud& source, const PointCloud& reference, const SearchConfig& config);

/// Scores the prefix of `sorted` (descending inlier count) whose count is at
/// least q * max. The first candidate is always scored.
std::vector<PoseCandidate> refine_candidates(std::vector<PoseCandidate> sorted, const PointCloud& source,
                                             const PointCloud& reference, const ErrorMetric& metric, double q,
                                             int threads = 0);

}  // namespace dses
