#include "dses/mode_search.hpp"

#include "dses/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dses {

namespace detail {

struct IntegerBounds {
    BinIndex lo;
    BinIndex hi;

    bool empty() const { return lo[0] > hi[0] || lo[1] > hi[1] || lo[2] > hi[2]; }
    bool contains(const BinIndex& b) const {
        return b[0] >= lo[0] && b[0] <= hi[0] && b[1] >= lo[1] && b[1] <= hi[1] && b[2] >= lo[2] &&
               b[2] <= hi[2];
    }
    std::size_t extent(int axis) const { return static_cast<std::size_t>(hi[axis] - lo[axis] + 1); }
};

}  // namespace detail

namespace {

using detail::IntegerBounds;

// Round half away from zero of diff / bin. Every binning path goes through
// this so that the sparse and dense histograms agree bit for bit. Same result
// as std::llround; the fractional part of a double is exact, so no libm call
// is needed on the hot path.
inline std::int64_t axis_bin(double diff, double inv_bin) {
    const double f = diff * inv_bin;
    if (!(std::fabs(f) < 4.0e18)) return std::llround(f);
    auto t = static_cast<std::int64_t>(f);
    const double r = f - static_cast<double>(t);
    if (r >= 0.5) {
        ++t;
    } else if (r <= -0.5) {
        --t;
    }
    return t;
}

// Same rounding as axis_bin for |f| < 2^31.
inline std::int32_t axis_bin32(double f) {
    const auto t = static_cast<std::int32_t>(f);
    const double r = f - static_cast<double>(t);
    return t + static_cast<std::int32_t>(r >= 0.5) - static_cast<std::int32_t>(r <= -0.5);
}

constexpr int kGridCells[3] = {16, 4, 1};

void require_bin(double bin) {
    if (!(bin > 0.0) || !std::isfinite(bin)) throw PreconditionError("translation bin must be positive");
}

IntegerBounds to_integer_bounds(const TranslationBounds& bounds, double bin) {
    IntegerBounds ib;
    for (int a = 0; a < 3; ++a) {
        ib.lo[a] = static_cast<std::int64_t>(std::ceil(bounds.lower[a] / bin - 1e-9));
        ib.hi[a] = static_cast<std::int64_t>(std::floor(bounds.upper[a] / bin + 1e-9));
    }
    return ib;
}

}  // namespace

BinIndex bin_index(const Vec3& v, double bin) {
    require_bin(bin);
    const double inv = 1.0 / bin;
    return {axis_bin(v.x(), inv), axis_bin(v.y(), inv), axis_bin(v.z(), inv)};
}

Vec3 bin_center(const BinIndex& index, double bin) {
    return {static_cast<double>(index[0]) * bin, static_cast<double>(index[1]) * bin,
            static_cast<double>(index[2]) * bin};
}

std::size_t TranslationHistogram::Hash::operator()(const BinIndex& b) const noexcept {
    std::uint64_t h = 0x9E3779B97F4A7C15ull;
    for (const auto v : b) {
        h ^= static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
}

TranslationHistogram::TranslationHistogram(double bin, VoteMode mode) : bin_(bin), mode_(mode) {
    require_bin(bin);
}

void TranslationHistogram::add(const BinIndex& index, std::size_t source) {
    ++total_;
    Cell& cell = cells_[index];
    if (mode_ == VoteMode::DistinctSources) {
        if (cell.last_source == source + 1) return;
        cell.last_source = source + 1;
    }
    ++cell.count;
}

std::size_t TranslationHistogram::count(const BinIndex& index) const {
    const auto it = cells_.find(index);
    return it == cells_.end() ? 0 : it->second.count;
}

std::optional<ModeResult> TranslationHistogram::mode() const {
    if (cells_.empty()) return std::nullopt;
    ModeResult best;
    for (const auto& [index, cell] : cells_) {
        if (cell.count > best.count) {
            best.count = cell.count;
            best.bin = index;
            best.num_tied_bins = 1;
        } else if (cell.count == best.count) {
            ++best.num_tied_bins;
            best.bin = std::min(best.bin, index);
        }
    }
    best.t_star = bin_center(best.bin, bin_);
    return best;
}

ModeSearcher::ModeSearcher(const PointCloud& reference, double bin, VoteMode mode)
    : bin_(bin), inv_bin_(1.0 / bin), mode_(mode) {
    require_bin(bin);
    Vec3 lo = reference[0], hi = reference[0];
    for (const auto& y : reference) {
        lo = lo.cwiseMin(y);
        hi = hi.cwiseMax(y);
    }
    origin_ = lo;
    for (int a = 0; a < 3; ++a) {
        cell_[a] = std::max((hi[a] - lo[a]) / kGridCells[a], bin);
        dims_[a] = static_cast<int>(std::floor((hi[a] - lo[a]) / cell_[a])) + 1;
    }

    auto cell_of = [&](const Vec3& y) {
        std::size_t c[3];
        for (int a = 0; a < 3; ++a) {
            c[a] = static_cast<std::size_t>(std::clamp(static_cast<int>((y[a] - origin_[a]) / cell_[a]), 0, dims_[a] - 1));
        }
        return (c[0] * dims_[1] + c[1]) * dims_[2] + c[2];
    };
    const std::size_t n_cells = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
    starts_.assign(n_cells + 1, 0);
    std::vector<std::size_t> cell_index(reference.size());
    for (std::size_t k = 0; k < reference.size(); ++k) {
        cell_index[k] = cell_of(reference[k]);
        ++starts_[cell_index[k] + 1];
    }
    std::partial_sum(starts_.begin(), starts_.end(), starts_.begin());
    std::vector<std::uint32_t> fill(starts_.begin(), starts_.end() - 1);
    xs_.resize(reference.size());
    ys_.resize(reference.size());
    zs_.resize(reference.size());
    for (std::size_t k = 0; k < reference.size(); ++k) {
        const std::uint32_t slot = fill[cell_index[k]]++;
        xs_[slot] = reference[k].x();
        ys_[slot] = reference[k].y();
        zs_[slot] = reference[k].z();
    }
}

// Bins one contiguous run of reference points against p and leaves the dense
// cell indices of the admissible pairs at the front of pair_cell_. The first
// loop is branch-free so that it vectorises.
std::size_t ModeSearcher::bin_pairs(std::uint32_t first, std::uint32_t last, const Vec3& p,
                                   const IntegerBounds& ib) {
    const std::size_t len = last - first;
    if (pair_cell_.size() < len) {
        pair_cell_.resize(len);
        pair_ok_.resize(len);
    }
    const double* __restrict xs = xs_.data() + first;
    const double* __restrict ys = ys_.data() + first;
    const double* __restrict zs = zs_.data() + first;
    std::uint32_t* __restrict cell = pair_cell_.data();
    std::uint8_t* __restrict ok = pair_ok_.data();
    const double px = p.x(), py = p.y(), pz = p.z(), inv = inv_bin_;
    const auto lx = static_cast<std::int32_t>(ib.lo[0]);
    const auto ly = static_cast<std::int32_t>(ib.lo[1]);
    const auto lz = static_cast<std::int32_t>(ib.lo[2]);
    const auto ex = static_cast<std::uint32_t>(ib.extent(0));
    const auto ey = static_cast<std::uint32_t>(ib.extent(1));
    const auto ez = static_cast<std::uint32_t>(ib.extent(2));
    for (std::size_t k = 0; k < len; ++k) {
        const auto bx = static_cast<std::uint32_t>(axis_bin32((xs[k] - px) * inv) - lx);
        const auto by = static_cast<std::uint32_t>(axis_bin32((ys[k] - py) * inv) - ly);
        const auto bz = static_cast<std::uint32_t>(axis_bin32((zs[k] - pz) * inv) - lz);
        ok[k] = static_cast<std::uint8_t>((bx < ex) & (by < ey) & (bz < ez));
        cell[k] = (bx * ey + by) * ez + bz;
    }
    std::size_t n = 0;
    for (std::size_t k = 0; k < len; ++k) {
        cell[n] = cell[k];
        n += ok[k];
    }
    return n;
}

std::optional<ModeResult> ModeSearcher::search(std::span<const Vec3> moved_source,
                                               const TranslationBounds& bounds) {
    const IntegerBounds ib = to_integer_bounds(bounds, bin_);
    if (ib.empty() || moved_source.empty()) return std::nullopt;
    const std::size_t nx = ib.extent(0), ny = ib.extent(1), nz = ib.extent(2);
    const bool dense = nx * ny * nz <= kMaxDenseBins;

    // Real-valued window of reference coordinates per axis, slightly generous;
    // the integer test on each pair is exact.
    const double slack = 1e-6;
    double wlo[3], whi[3];
    for (int a = 0; a < 3; ++a) {
        wlo[a] = (static_cast<double>(ib.lo[a]) - 0.5 - slack) * bin_;
        whi[a] = (static_cast<double>(ib.hi[a]) + 0.5 + slack) * bin_;
    }

    std::optional<TranslationHistogram> sparse;
    if (dense) {
        const std::size_t n = nx * ny * nz;
        const std::uint64_t next_base = std::uint64_t{stamp_base_} + moved_source.size() + 1;
        if (cells_.size() < n || next_base > std::numeric_limits<std::uint32_t>::max()) {
            cells_.assign(std::max(n, cells_.size()), Cell{});
            stamp_base_ = 0;
        }
    } else {
        sparse.emplace(bin_, mode_);
    }
    const bool distinct = mode_ == VoteMode::DistinctSources;

    // Differences visited below lie within the window widened by one grid
    // cell; when they fit in 32 bits the vectorised binning is used.
    double reach = 0.0;
    for (int a = 0; a < 3; ++a) reach = std::max({reach, std::abs(wlo[a]), std::abs(whi[a])});
    reach = (reach + cell_.maxCoeff()) * inv_bin_;
    const bool narrow = dense && reach < 1.0e9;

    // Cells whose stamp predates this search hold stale counts. The running
    // maximum is kept as votes arrive; every bin passes through each count
    // value once, so the tie count stays exact.
    std::uint32_t best_count = 0;
    std::uint32_t best_cell = 0;
    std::size_t ties = 0;
    const std::uint32_t base = stamp_base_;
    auto vote = [&](std::uint32_t idx, std::uint32_t stamp) {
        Cell& cell = cells_[idx];
        if (distinct && cell.stamp == stamp) return;
        cell.count = cell.stamp > base ? cell.count + 1 : 1;
        cell.stamp = stamp;
        if (cell.count > best_count) {
            best_count = cell.count;
            best_cell = idx;
            ties = 1;
        } else if (cell.count == best_count) {
            ++ties;
            best_cell = std::min(best_cell, idx);
        }
    };

    auto cell_range = [&](double lo, double hi, int axis, int& c0, int& c1) {
        const double a = (lo - origin_[axis]) / cell_[axis];
        const double b = (hi - origin_[axis]) / cell_[axis];
        if (b < 0.0 || a >= dims_[axis]) return false;
        c0 = std::max(0, static_cast<int>(std::floor(a)));
        c1 = std::min(dims_[axis] - 1, static_cast<int>(std::floor(b)));
        return c0 <= c1;
    };

    for (std::size_t i = 0; i < moved_source.size(); ++i) {
        const Vec3& p = moved_source[i];
        int c0[3], c1[3];
        bool any = true;
        for (int a = 0; a < 3 && any; ++a) any = cell_range(p[a] + wlo[a], p[a] + whi[a], a, c0[a], c1[a]);
        if (!any) continue;
        const auto stamp = static_cast<std::uint32_t>(base + i + 1);
        auto visit = [&](std::uint32_t first, std::uint32_t last) {
            if (narrow) {
                const std::size_t n = bin_pairs(first, last, p, ib);
                for (std::size_t k = 0; k < n; ++k) vote(pair_cell_[k], stamp);
                return;
            }
            for (std::uint32_t j = first; j < last; ++j) {
                const BinIndex b{axis_bin(xs_[j] - p.x(), inv_bin_), axis_bin(ys_[j] - p.y(), inv_bin_),
                                 axis_bin(zs_[j] - p.z(), inv_bin_)};
                if (!ib.contains(b)) continue;
                if (!dense) {
                    sparse->add(b, i);
                    continue;
                }
                vote(static_cast<std::uint32_t>((static_cast<std::size_t>(b[0] - ib.lo[0]) * ny +
                                                 static_cast<std::size_t>(b[1] - ib.lo[1])) * nz +
                                                static_cast<std::size_t>(b[2] - ib.lo[2])),
                     stamp);
            }
        };
        // Neighbouring columns that are adjacent in storage are merged so the
        // binning loop sees long contiguous runs.
        std::uint32_t run_first = 0, run_last = 0;
        for (int cx = c0[0]; cx <= c1[0]; ++cx) {
            for (int cy = c0[1]; cy <= c1[1]; ++cy) {
                const std::size_t column = (static_cast<std::size_t>(cx) * dims_[1] + cy) * dims_[2];
                const std::uint32_t first = starts_[column + c0[2]];
                const std::uint32_t last = starts_[column + c1[2] + 1];
                if (first == run_last) {
                    run_last = last;
                    continue;
                }
                if (run_first < run_last) visit(run_first, run_last);
                run_first = first;
                run_last = last;
            }
        }
        if (run_first < run_last) visit(run_first, run_last);
    }

    if (!dense) return sparse->mode();
    stamp_base_ = base + static_cast<std::uint32_t>(moved_source.size());
    if (best_count == 0) return std::nullopt;

    // Cell order is lexicographic in bin index, so the smallest cell among the
    // maxima is the canonical winner.
    ModeResult r;
    r.count = best_count;
    r.num_tied_bins = ties;
    r.bin = {ib.lo[0] + static_cast<std::int64_t>(best_cell / (ny * nz)),
             ib.lo[1] + static_cast<std::int64_t>((best_cell / nz) % ny),
             ib.lo[2] + static_cast<std::int64_t>(best_cell % nz)};
    r.t_star = bin_center(r.bin, bin_);
    return r;
}

ModeResult mode_translation(const PointCloud& source, const PointCloud& reference, const Mat3& rotation,
                            double bin, const std::optional<TranslationBounds>& bounds, VoteMode mode) {
    require_bin(bin);
    std::optional<ModeResult> result;
    if (bounds) {
        std::vector<Vec3> moved;
        moved.reserve(source.size());
        for (const auto& x : source) moved.push_back(rotation * x);
        ModeSearcher searcher(reference, bin, mode);
        result = searcher.search(moved, *bounds);
    } else {
        TranslationHistogram hist(bin, mode);
        const double inv = 1.0 / bin;
        for (std::size_t i = 0; i < source.size(); ++i) {
            const Vec3 p = rotation * source[i];
            for (const auto& y : reference) {
                const Vec3 d = y - p;
                hist.add({axis_bin(d.x(), inv), axis_bin(d.y(), inv), axis_bin(d.z(), inv)}, i);
            }
        }
        result = hist.mode();
    }
    if (!result) throw NoCandidateError("no translation candidate inside the search bounds");
    return *result;
}

}  // namespace dses
