#include "dses/oracle_check.hpp"

#include "dses/benchgen.hpp"
#include "dses/engines.hpp"
#include "dses/errors.hpp"
#include "dses/mode_search.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace dses {

namespace {

using Rng = std::mt19937_64;

constexpr double kLatticeBin = 0.125;

std::vector<Mat3> axis_permuting_rotations() {
    std::vector<Mat3> out;
    const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (const auto& p : perms) {
        for (int signs = 0; signs < 8; ++signs) {
            Mat3 m = Mat3::Zero();
            for (int r = 0; r < 3; ++r) m(r, p[r]) = (signs >> r) & 1 ? -1.0 : 1.0;
            if (m.determinant() > 0.0) out.push_back(m);
        }
    }
    return out;
}

double chebyshev(const Vec3& a, const Vec3& b) { return (a - b).cwiseAbs().maxCoeff(); }

bool separated_from(const std::vector<Vec3>& pts, const Vec3& p, double delta) {
    return std::all_of(pts.begin(), pts.end(), [&](const Vec3& q) { return chebyshev(p, q) > delta; });
}

// Source points i with some reference point inside the open Chebyshev ball of
// radius bin/2 around R x_i + t.
std::size_t brute_inliers(const std::vector<Vec3>& moved, const std::vector<Vec3>& ref, const Vec3& t, double bin) {
    std::size_t n = 0;
    for (const auto& x : moved) {
        for (const auto& y : ref) {
            if (chebyshev(x + t, y) < bin / 2.0) {
                ++n;
                break;
            }
        }
    }
    return n;
}

struct SweepOutcome {
    std::size_t best = 0;
    std::size_t points = 0;
    Vec3 where = Vec3::Zero();
};

// Any translation with a nonzero count lies within bin/2 of some candidate
// y_j - R x_i, so sweeping those neighbourhoods covers the whole span.
SweepOutcome sweep(const std::vector<Vec3>& moved, const std::vector<Vec3>& ref, double bin) {
    SweepOutcome out;
    const double step = bin / 4.0;
    for (const auto& x : moved) {
        for (const auto& y : ref) {
            const Vec3 c = y - x;
            for (int a = -2; a <= 2; ++a)
                for (int b = -2; b <= 2; ++b)
                    for (int d = -2; d <= 2; ++d) {
                        const Vec3 t = c + Vec3(a, b, d) * step;
                        const std::size_t n = brute_inliers(moved, ref, t, bin);
                        ++out.points;
                        if (n > out.best) out = {n, out.points, t};
                    }
        }
    }
    return out;
}

struct ModeInstance {
    std::vector<Vec3> source;
    std::vector<Vec3> reference;
    Mat3 rotation;
};

ModeInstance lattice_instance(Rng& rng, const std::vector<Mat3>& rotations) {
    std::uniform_int_distribution<int> size(3, 15);
    std::uniform_int_distribution<int> coord(-10, 10);
    std::uniform_int_distribution<int> shift(-4, 4);
    std::uniform_int_distribution<std::size_t> pick(0, rotations.size() - 1);
    auto lattice = [&](std::uniform_int_distribution<int>& d) -> Vec3 {
        const double a = d(rng), b = d(rng), c = d(rng);
        return Vec3(a, b, c) * kLatticeBin;
    };
    auto lattice_point = [&]() -> Vec3 { return lattice(coord); };

    ModeInstance inst;
    inst.rotation = rotations[pick(rng)];
    const int n = size(rng);
    const int m = size(rng);
    while (static_cast<int>(inst.source.size()) < n) {
        const Vec3 p = lattice_point();
        if (separated_from(inst.source, p, kLatticeBin)) inst.source.push_back(p);
    }
    const Vec3 t = lattice(shift);
    std::uniform_int_distribution<int> planted_count(0, std::min(n, m));
    const int planted = planted_count(rng);
    for (int i = 0; i < planted; ++i) {
        const Vec3 p = inst.rotation * inst.source[static_cast<std::size_t>(i)] + t;
        if (separated_from(inst.reference, p, kLatticeBin)) inst.reference.push_back(p);
    }
    while (static_cast<int>(inst.reference.size()) < m) {
        const Vec3 p = lattice_point();
        if (separated_from(inst.reference, p, kLatticeBin)) inst.reference.push_back(p);
    }
    std::shuffle(inst.reference.begin(), inst.reference.end(), rng);
    return inst;
}

ModeInstance generic_instance(Rng& rng) {
    std::uniform_int_distribution<int> size(3, 15);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::uniform_real_distribution<double> angle(-M_PI, M_PI);
    std::uniform_real_distribution<double> noise(-0.03, 0.03);
    auto point = [&] { return Vec3(coord(rng), coord(rng), coord(rng)); };

    ModeInstance inst;
    inst.rotation = rotation_from_euler({angle(rng), angle(rng) / 2.0, angle(rng)});
    const int n = size(rng);
    const int m = size(rng);
    while (static_cast<int>(inst.source.size()) < n) {
        const Vec3 p = point();
        if (separated_from(inst.source, p, kLatticeBin)) inst.source.push_back(p);
    }
    const Vec3 t = point() * 0.5;
    for (int i = 0; i < std::min(n, m) / 2 + 1; ++i) {
        const Vec3 p = inst.rotation * inst.source[static_cast<std::size_t>(i)] + t +
                       Vec3(noise(rng), noise(rng), noise(rng));
        if (separated_from(inst.reference, p, kLatticeBin)) inst.reference.push_back(p);
    }
    while (static_cast<int>(inst.reference.size()) < m) {
        const Vec3 p = point();
        if (separated_from(inst.reference, p, kLatticeBin)) inst.reference.push_back(p);
    }
    return inst;
}

std::vector<Vec3> rotate_all(const std::vector<Vec3>& pts, const Mat3& r) {
    std::vector<Vec3> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(r * p);
    return out;
}

}  // namespace

OracleReport run_mode_oracle(std::size_t trials, std::uint64_t seed, std::size_t generic_trials) {
    OracleReport report;
    const auto rotations = axis_permuting_rotations();
    Rng rng(derive_seed(seed, 101));
    for (std::size_t k = 0; k < trials; ++k) {
        const ModeInstance inst = lattice_instance(rng, rotations);
        const PointCloud source(inst.source);
        const PointCloud reference(inst.reference);
        const ModeResult mode = mode_translation(source, reference, inst.rotation, kLatticeBin);
        const auto moved = rotate_all(inst.source, inst.rotation);
        const std::size_t at_mode = brute_inliers(moved, inst.reference, mode.t_star, kLatticeBin);
        const SweepOutcome s = sweep(moved, inst.reference, kLatticeBin);
        ++report.mode_instances;
        report.mode_sweep_points += s.points;

        // The bounded searcher must agree with the unbounded histogram when the
        // bounds cover every candidate.
        ModeSearcher searcher(reference, kLatticeBin);
        const auto bounded = searcher.search(moved, TranslationBounds::centered(Vec3::Zero(), 8.0));

        if (s.best > at_mode || at_mode != mode.count || !bounded || bounded->count != mode.count ||
            bounded->bin != mode.bin) {
            ++report.mode_violations;
            std::ostringstream msg;
            msg << "mode instance " << k << ": mode count " << mode.count << ", recount at t* " << at_mode
                << ", sweep best " << s.best;
            report.messages.push_back(msg.str());
        }
    }
    for (std::size_t k = 0; k < generic_trials; ++k) {
        const ModeInstance inst = generic_instance(rng);
        const ModeResult mode =
            mode_translation(PointCloud(inst.source), PointCloud(inst.reference), inst.rotation, kLatticeBin);
        const auto moved = rotate_all(inst.source, inst.rotation);
        const SweepOutcome s = sweep(moved, inst.reference, kLatticeBin);
        ++report.generic_instances;
        if (s.best > brute_inliers(moved, inst.reference, mode.t_star, kLatticeBin)) ++report.generic_exceedances;
    }
    return report;
}

OracleReport run_search_oracle(std::size_t trials, std::uint64_t seed) {
    OracleReport report;
    Rng rng(derive_seed(seed, 202));
    const double bin = 0.1;
    const double step = deg2rad(10.0);
    std::uniform_int_distribution<int> size(4, 12);
    std::uniform_int_distribution<int> rot_index(-1, 1);
    std::uniform_int_distribution<int> trans_index(-3, 3);
    std::uniform_real_distribution<double> coord(-0.6, 0.6);
    std::uniform_real_distribution<double> noise(-0.02, 0.02);

    SearchConfig cfg;
    cfg.rot_half_width = 1;
    cfg.rot_step = step;
    cfg.trans_half_width = 3;
    cfg.trans_bin = bin;
    cfg.metric = ErrorMetric::saturated_l0(bin);
    cfg.threads = 1;

    for (std::size_t k = 0; k < trials; ++k) {
        const int n = size(rng);
        const int m = size(rng);
        std::vector<Vec3> src, ref;
        for (int i = 0; i < n; ++i) src.emplace_back(coord(rng), coord(rng), coord(rng));
        const double ri = rot_index(rng), rj = rot_index(rng), rk = rot_index(rng);
        const double ti = trans_index(rng), tj = trans_index(rng), tk = trans_index(rng);
        const RigidTransform truth = RigidTransform::from_euler({ri * step, rj * step, rk * step}, Vec3(ti, tj, tk) * bin);
        std::uniform_int_distribution<int> planted_count(1, std::min(n, m));
        const int planted = planted_count(rng);
        for (int i = 0; i < planted; ++i) {
            ref.push_back(truth.apply(src[static_cast<std::size_t>(i)]) + Vec3(noise(rng), noise(rng), noise(rng)));
        }
        while (static_cast<int>(ref.size()) < m) ref.emplace_back(coord(rng), coord(rng), coord(rng));
        std::shuffle(ref.begin(), ref.end(), rng);

        const PointCloud source(src);
        const PointCloud reference(ref);
        const auto exhaustive = exhaustive_search(source, reference, cfg);
        const auto fast = dses(source, reference, cfg);
        const auto exhaustive_max = static_cast<std::size_t>(std::llround(static_cast<double>(n) - exhaustive.best_error));
        const std::size_t recount =
            brute_inliers(rotate_all(src, fast.best.rotation), ref, fast.best.translation, bin);
        ++report.search_instances;
        if (fast.best_inliers != exhaustive_max || recount != fast.best_inliers) {
            ++report.search_violations;
            std::ostringstream msg;
            msg << "search instance " << k << ": dses " << fast.best_inliers << " (recount " << recount
                << "), exhaustive " << exhaustive_max;
            report.messages.push_back(msg.str());
        }
    }
    return report;
}

OracleReport run_oracle_check(std::size_t trials, std::uint64_t seed) {
    OracleReport report = run_mode_oracle(trials, seed);
    const OracleReport search = run_search_oracle(std::max<std::size_t>(1, trials / 4), seed);
    report.search_instances = search.search_instances;
    report.search_violations = search.search_violations;
    report.messages.insert(report.messages.end(), search.messages.begin(), search.messages.end());
    return report;
}

}  // namespace dses
