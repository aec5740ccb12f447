#include "dses/engines.hpp"

#include "dses/errors.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace dses {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

int worker_count(int requested) { return requested > 0 ? requested : omp_get_max_threads(); }

std::uint64_t cube(std::uint64_t w) { return w * w * w; }

void require_clouds(const PointCloud& source, const PointCloud& reference) {
    if (source.size() == 0 || reference.size() == 0) {
        throw PreconditionError("point clouds must be non-empty");
    }
}

std::vector<Vec3> move_points(const PointCloud& cloud, const Mat3& rotation) {
    std::vector<Vec3> out;
    out.reserve(cloud.size());
    for (const auto& x : cloud) out.push_back(rotation * x);
    return out;
}

}  // namespace

SearchConfig SearchConfig::from_ranges(double rot_range_deg, double rot_step_deg, double trans_range,
                                       double trans_bin) {
    if (!(rot_step_deg > 0.0) || !(trans_bin > 0.0)) throw PreconditionError("steps must be positive");
    if (rot_range_deg < 0.0 || trans_range < 0.0) throw PreconditionError("ranges must be non-negative");
    SearchConfig c;
    c.rot_step = deg2rad(rot_step_deg);
    c.rot_half_width = static_cast<int>(std::floor(rot_range_deg / rot_step_deg + 1e-9));
    c.trans_bin = trans_bin;
    c.trans_half_width = static_cast<int>(std::floor(trans_range / trans_bin + 1e-9));
    return c;
}

ErrorMetric SearchConfig::resolved_metric() const {
    return metric ? *metric : ErrorMetric::truncated_l1(5.0 * trans_bin);
}

void SearchConfig::validate() const {
    if (rot_half_width < 0 || trans_half_width < 0) throw PreconditionError("grid half-widths must be >= 0");
    if (!(rot_step > 0.0) || !std::isfinite(rot_step)) throw PreconditionError("rotation step must be positive");
    if (!(trans_bin > 0.0) || !std::isfinite(trans_bin)) {
        throw PreconditionError("translation bin must be positive");
    }
    if (!(q > 0.0 && q <= 1.0)) throw PreconditionError("q must lie in (0, 1]");
    if (metric) {
        if ((metric->kind == MetricKind::TruncatedL1 || metric->kind == MetricKind::SaturatedL0) &&
            !(metric->param > 0.0)) {
            throw PreconditionError("metric parameter must be positive");
        }
    }
    center.validate();
}

SearchFrame::SearchFrame(const SearchConfig& config, const PointCloud& source)
    : center_(config.center),
      pivot_(Vec3::Zero()),
      half_extent_(config.trans_half_width * config.trans_bin) {
    if (config.pivot == PivotMode::SourceCentroid) pivot_ = center_.apply(source.centroid());
}

Vec3 SearchFrame::translation_center(const Mat3& offset) const {
    return offset * (center_.translation - pivot_) + pivot_;
}

TranslationBounds SearchFrame::bounds(const Mat3& offset) const {
    return TranslationBounds::centered(translation_center(offset), half_extent_);
}

RigidTransform SearchFrame::pose(const Mat3& offset, const Vec3& translation_offset) const {
    RigidTransform t;
    t.rotation = rotation(offset);
    t.translation = translation_center(offset) + translation_offset;
    return t;
}

RegistrationResult exhaustive_search(const PointCloud& source, const PointCloud& reference,
                                     const SearchConfig& config) {
    const auto start = Clock::now();
    config.validate();
    require_clouds(source, reference);
    const std::uint64_t rot_count = cube(2 * static_cast<std::uint64_t>(config.rot_half_width) + 1);
    const std::uint64_t trans_count = cube(2 * static_cast<std::uint64_t>(config.trans_half_width) + 1);
    if (rot_count > config.max_candidates || trans_count > config.max_candidates / rot_count) {
        throw SearchTooLargeError("exhaustive search over " + std::to_string(rot_count) + " rotations x " +
                                  std::to_string(trans_count) + " translations exceeds the cap of " +
                                  std::to_string(config.max_candidates) +
                                  " poses; cost scales as O(K^6 M N)");
    }

    const RotationGrid grid = build_rotation_grid(config.rot_half_width, config.rot_step);
    const SearchFrame frame(config, source);
    const ErrorMetric metric = config.resolved_metric();
    const int kt = config.trans_half_width;
    const auto ref = reference.points();

    struct Local {
        double error = std::numeric_limits<double>::infinity();
        Vec3 translation = Vec3::Zero();
    };
    std::vector<Local> per_rotation(grid.size());

#pragma omp parallel num_threads(worker_count(config.threads))
    {
        std::vector<Vec3> shifted(source.size());
#pragma omp for schedule(dynamic, 1)
        for (std::size_t r = 0; r < grid.size(); ++r) {
            const Mat3& offset = grid[r].rotation;
            const auto moved = move_points(source, frame.rotation(offset));
            const Vec3 center = frame.translation_center(offset);
            Local best;
            for (int dx = -kt; dx <= kt; ++dx) {
                for (int dy = -kt; dy <= kt; ++dy) {
                    for (int dz = -kt; dz <= kt; ++dz) {
                        const Vec3 t = center + Vec3(dx * config.trans_bin, dy * config.trans_bin,
                                                     dz * config.trans_bin);
                        for (std::size_t i = 0; i < moved.size(); ++i) shifted[i] = moved[i] + t;
                        const double e = residual_sum(shifted, ref, metric, best.error);
                        if (e < best.error) best = {e, t};
                    }
                }
            }
            per_rotation[r] = best;
        }
    }
    const double scan_ms = ms_since(start);

    std::size_t winner = 0;
    for (std::size_t r = 1; r < grid.size(); ++r) {
        if (per_rotation[r].error < per_rotation[winner].error) winner = r;
    }

    RegistrationResult result;
    result.best.rotation = frame.rotation(grid[winner].rotation);
    result.best.translation = per_rotation[winner].translation;
    result.best.grid_coords = grid[winner].index;
    result.best_error = alignment_error(source, reference, result.best, metric);
    result.best_inliers = count_inliers(source, reference, result.best, config.trans_bin);
    result.candidates_evaluated = static_cast<std::size_t>(rot_count * trans_count);
    result.candidates_refined = result.candidates_evaluated;
    result.elapsed.phase1_ms = scan_ms;
    result.elapsed.total_ms = ms_since(start);
    return result;
}

std::vector<PoseCandidate> refine_candidates(std::vector<PoseCandidate> sorted, const PointCloud& source,
                                             const PointCloud& reference, const ErrorMetric& metric, double q,
                                             int threads) {
    if (sorted.empty()) return sorted;
    const double cutoff = q * static_cast<double>(sorted.front().inliers);
    std::size_t prefix = 1;
    while (prefix < sorted.size() && static_cast<double>(sorted[prefix].inliers) >= cutoff) ++prefix;

#pragma omp parallel for schedule(dynamic, 4) num_threads(worker_count(threads))
    for (std::size_t k = 0; k < prefix; ++k) {
        sorted[k].refined_error = alignment_error(source, reference, sorted[k].transform, metric);
    }
    return sorted;
}

RegistrationResult dses(const PointCloud& source, const PointCloud& reference, const SearchConfig& config) {
    const auto start = Clock::now();
    config.validate();
    require_clouds(source, reference);
    const std::uint64_t rot_count = cube(2 * static_cast<std::uint64_t>(config.rot_half_width) + 1);
    if (rot_count > config.max_candidates) {
        throw SearchTooLargeError("rotation grid of " + std::to_string(rot_count) + " nodes exceeds the cap of " +
                                  std::to_string(config.max_candidates) + "; cost scales as O(K^3 M N)");
    }

    const RotationGrid grid = build_rotation_grid(config.rot_half_width, config.rot_step);
    const SearchFrame frame(config, source);
    const ErrorMetric metric = config.resolved_metric();

    // Phase 1: mode translation per rotation.
    std::vector<std::optional<ModeResult>> modes(grid.size());
#pragma omp parallel num_threads(worker_count(config.threads))
    {
        ModeSearcher searcher(reference, config.trans_bin, config.vote_mode);
        std::vector<Vec3> moved(source.size());
#pragma omp for schedule(dynamic, 8)
        for (std::size_t r = 0; r < grid.size(); ++r) {
            const Mat3& offset = grid[r].rotation;
            const Mat3 rotation = frame.rotation(offset);
            for (std::size_t i = 0; i < source.size(); ++i) moved[i] = rotation * source[i];
            modes[r] = searcher.search(moved, frame.bounds(offset));
        }
    }

    std::vector<PoseCandidate> candidates;
    candidates.reserve(grid.size());
    for (std::size_t r = 0; r < grid.size(); ++r) {
        if (!modes[r]) continue;
        PoseCandidate c;
        c.transform.rotation = frame.rotation(grid[r].rotation);
        c.transform.translation = modes[r]->t_star;
        c.transform.grid_coords = grid[r].index;
        c.inliers = modes[r]->count;
        c.grid_order = r;
        candidates.push_back(std::move(c));
    }
    if (candidates.empty()) {
        throw NoCandidateError("no rotation produced a translation candidate inside the search bounds");
    }

    RegistrationResult result;
    result.candidates_evaluated = candidates.size();
    result.elapsed.phase1_ms = ms_since(start);

    // Phase 2: descending inlier count; stable sort keeps grid order among ties.
    const auto sort_start = Clock::now();
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const PoseCandidate& a, const PoseCandidate& b) { return a.inliers > b.inliers; });
    result.elapsed.phase2_ms = ms_since(sort_start);

    // Phase 3: rescore the surviving prefix.
    const auto refine_start = Clock::now();
    const PoseCandidate* best = &candidates.front();
    if (!(metric.kind == MetricKind::SaturatedL0 && metric.param == config.trans_bin)) {
        candidates = refine_candidates(std::move(candidates), source, reference, metric, config.q, config.threads);
        best = &candidates.front();
        for (const auto& c : candidates) {
            if (!c.refined_error) break;
            ++result.candidates_refined;
            if (*c.refined_error < *best->refined_error ||
                (*c.refined_error == *best->refined_error && c.grid_order < best->grid_order)) {
                best = &c;
            }
        }
    }
    result.elapsed.phase3_ms = ms_since(refine_start);

    result.best = best->transform;
    result.best_inliers = best->inliers;
    result.best_error = alignment_error(source, reference, result.best, metric);
    result.elapsed.total_ms = ms_since(start);
    return result;
}

}  // namespace dses
