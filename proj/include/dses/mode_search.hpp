#pragma once

#include "dses/geometry.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace dses {

namespace detail {
struct IntegerBounds;
}

using BinIndex = std::array<std::int64_t, 3>;

/// Per-axis round-half-away-from-zero of v / bin.
BinIndex bin_index(const Vec3& v, double bin);
Vec3 bin_center(const BinIndex& index, double bin);

/// Axis-aligned box of admissible translations. A bin is admissible when its
/// center lies inside the box (inclusive, up to 1e-9 bin widths).
struct TranslationBounds {
    Vec3 lower;
    Vec3 upper;

    static TranslationBounds centered(const Vec3& center, double half_extent) {
        const Vec3 h = Vec3::Constant(half_extent);
        return {center - h, center + h};
    }
};

/// How a bin is credited for the pairs landing in it.
enum class VoteMode {
    DistinctSources,  ///< number of distinct source points voting for the bin
    RawPairs,         ///< number of (source, reference) pairs; diagnostic only
};

struct ModeResult {
    Vec3 t_star = Vec3::Zero();  ///< center of the winning bin
    BinIndex bin{};
    std::size_t count = 0;
    std::size_t num_tied_bins = 0;
};

/// Sparse histogram over discretised translation candidates.
class TranslationHistogram {
public:
    explicit TranslationHistogram(double bin, VoteMode mode = VoteMode::DistinctSources);

    /// Records the candidate `index` produced by source point `source`. Votes
    /// from the same source must arrive consecutively for DistinctSources.
    void add(const BinIndex& index, std::size_t source);

    double bin() const { return bin_; }
    VoteMode vote_mode() const { return mode_; }
    /// Pair votes offered so far, including those merged away by deduplication.
    std::size_t total() const { return total_; }
    std::size_t count(const BinIndex& index) const;
    std::size_t num_bins() const { return cells_.size(); }

    /// Highest-count bin; ties go to the lexicographically smallest index.
    std::optional<ModeResult> mode() const;

private:
    struct Hash {
        std::size_t operator()(const BinIndex& b) const noexcept;
    };
    struct Cell {
        std::size_t count = 0;
        std::size_t last_source = 0;  // source index + 1, 0 = none
    };

    double bin_;
    VoteMode mode_;
    std::size_t total_ = 0;
    std::unordered_map<BinIndex, Cell, Hash> cells_;
};

/// Inlier-maximising translation for a fixed rotation: the most populated bin
/// of { round(y_j - R x_i, bin) }. Pairs whose bin center falls outside
/// `bounds` are ignored. Throws NoCandidateError if no pair is admissible.
ModeResult mode_translation(const PointCloud& source, const PointCloud& reference, const Mat3& rotation,
                            double bin, const std::optional<TranslationBounds>& bounds = std::nullopt,
                            VoteMode mode = VoteMode::DistinctSources);

/// Bounded mode search against a fixed reference cloud, reusing a dense
/// histogram between calls. Not thread-safe; use one per thread.
class ModeSearcher {
public:
    ModeSearcher(const PointCloud& reference, double bin, VoteMode mode = VoteMode::DistinctSources);

    /// `moved_source` holds R * x_i for every source point. Returns nullopt when
    /// no pair lands inside `bounds`.
    std::optional<ModeResult> search(std::span<const Vec3> moved_source, const TranslationBounds& bounds);

    /// Largest dense histogram this searcher will allocate, in bins.
    static constexpr std::size_t kMaxDenseBins = std::size_t{1} << 22;

private:
    std::size_t bin_pairs(std::uint32_t first, std::uint32_t last, const Vec3& p, const detail::IntegerBounds& ib);

    double bin_;
    double inv_bin_;
    VoteMode mode_;
    struct Cell {
        std::uint32_t count = 0;
        std::uint32_t stamp = 0;  // stamp of the last vote; <= stamp_base_ means stale
    };

    // Reference points bucketed on a uniform grid, x-major then y then z, so
    // the cells of one (x, y) column are contiguous.
    Vec3 origin_ = Vec3::Zero();
    Vec3 cell_ = Vec3::Ones();
    std::array<int, 3> dims_{};
    std::vector<std::uint32_t> starts_;
    std::vector<double> xs_, ys_, zs_;
    std::vector<Cell> cells_;
    std::uint32_t stamp_base_ = 0;
    std::vector<std::uint32_t> pair_cell_;
    std::vector<std::uint8_t> pair_ok_;
};

}  // namespace dses
