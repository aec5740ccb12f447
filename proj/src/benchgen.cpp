#include "dses/benchgen.hpp"

#include "dses/cloud_io.hpp"
#include "dses/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace dses {

namespace {

using Rng = std::mt19937_64;

struct Triangle {
    Vec3 a, b, c;
    double area() const { return 0.5 * (b - a).cross(c - a).norm(); }
};

class TriangleMesh {
public:
    void add_triangle(const Vec3& a, const Vec3& b, const Vec3& c) { tris_.push_back({a, b, c}); }
    void add_quad(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
        add_triangle(a, b, c);
        add_triangle(a, c, d);
    }

    std::vector<Vec3> sample(int n, Rng& rng) const {
        std::vector<double> cumulative(tris_.size());
        double total = 0.0;
        for (std::size_t k = 0; k < tris_.size(); ++k) {
            total += tris_[k].area();
            cumulative[k] = total;
        }
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::vector<Vec3> out;
        out.reserve(static_cast<std::size_t>(n));
        for (int s = 0; s < n; ++s) {
            const double pick = u01(rng) * total;
            auto k = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) -
                                              cumulative.begin());
            k = std::min(k, tris_.size() - 1);
            const double r1 = std::sqrt(u01(rng));
            const double r2 = u01(rng);
            const Triangle& t = tris_[k];
            out.push_back((1.0 - r1) * t.a + r1 * (1.0 - r2) * t.b + r1 * r2 * t.c);
        }
        return out;
    }

private:
    std::vector<Triangle> tris_;
};

void add_box(TriangleMesh& mesh, const Vec3& lo, const Vec3& hi) {
    const Vec3 v[8] = {{lo.x(), lo.y(), lo.z()}, {hi.x(), lo.y(), lo.z()}, {hi.x(), hi.y(), lo.z()},
                       {lo.x(), hi.y(), lo.z()}, {lo.x(), lo.y(), hi.z()}, {hi.x(), lo.y(), hi.z()},
                       {hi.x(), hi.y(), hi.z()}, {lo.x(), hi.y(), hi.z()}};
    mesh.add_quad(v[0], v[3], v[2], v[1]);
    mesh.add_quad(v[4], v[5], v[6], v[7]);
    mesh.add_quad(v[0], v[1], v[5], v[4]);
    mesh.add_quad(v[1], v[2], v[6], v[5]);
    mesh.add_quad(v[2], v[3], v[7], v[6]);
    mesh.add_quad(v[3], v[0], v[4], v[7]);
}

TriangleMesh box_mesh() {
    TriangleMesh mesh;
    add_box(mesh, Vec3(-0.5, -0.3, -0.175), Vec3(0.5, 0.3, 0.175));
    return mesh;
}

// L-shaped profile in the xy plane, extruded along z. Legs of unequal length
// keep the shape free of rotational symmetry.
TriangleMesh l_bracket_mesh() {
    const double depth = 0.4;
    const std::vector<Eigen::Vector2d> outline = {{0.0, 0.0},  {1.0, 0.0},  {1.0, 0.25},
                                                  {0.25, 0.25}, {0.25, 0.7}, {0.0, 0.7}};
    TriangleMesh mesh;
    auto at = [](const Eigen::Vector2d& p, double z) { return Vec3(p.x(), p.y(), z); };
    // Caps: the profile is the union of two rectangles.
    const std::pair<Eigen::Vector2d, Eigen::Vector2d> rects[2] = {{{0.0, 0.0}, {1.0, 0.25}},
                                                                  {{0.0, 0.25}, {0.25, 0.7}}};
    for (const auto& [lo, hi] : rects) {
        for (const double z : {0.0, depth}) {
            mesh.add_quad(at(lo, z), at({hi.x(), lo.y()}, z), at(hi, z), at({lo.x(), hi.y()}, z));
        }
    }
    for (std::size_t k = 0; k < outline.size(); ++k) {
        const auto& a = outline[k];
        const auto& b = outline[(k + 1) % outline.size()];
        mesh.add_quad(at(a, 0.0), at(b, 0.0), at(b, depth), at(a, depth));
    }
    return mesh;
}

TriangleMesh random_blob_mesh(std::uint64_t blob_seed) {
    // Icosphere, subdivided three times.
    const double g = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {{-1, g, 0}, {1, g, 0}, {-1, -g, 0}, {1, -g, 0}, {0, -1, g}, {0, 1, g},
                               {0, -1, -g}, {0, 1, -g}, {g, 0, -1}, {g, 0, 1}, {-g, 0, -1}, {-g, 0, 1}};
    for (auto& v : verts) v.normalize();
    std::vector<std::array<int, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int level = 0; level < 3; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const std::pair<int, int> key = std::minmax(a, b);
            if (const auto it = midpoint.find(key); it != midpoint.end()) return it->second;
            verts.push_back((verts[a] + verts[b]).normalized());
            const int idx = static_cast<int>(verts.size()) - 1;
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }

    Rng rng(derive_seed(blob_seed, 0xB10B));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> amp(-0.25, 0.45);
    struct Bump {
        Vec3 dir;
        double amplitude;
    };
    std::vector<Bump> bumps;
    for (int k = 0; k < 6; ++k) {
        Vec3 d(gauss(rng), gauss(rng), gauss(rng));
        bumps.push_back({d.normalized(), amp(rng)});
    }
    for (auto& v : verts) {
        double r = 1.0;
        for (const auto& b : bumps) r += b.amplitude * std::exp(4.0 * (v.dot(b.dir) - 1.0));
        v *= r;
    }

    TriangleMesh mesh;
    for (const auto& f : faces) mesh.add_triangle(verts[f[0]], verts[f[1]], verts[f[2]]);
    return mesh;
}

std::vector<Vec3> sample_cylinder(int n, Rng& rng) {
    const double radius = 0.5, height = 1.5;
    const double side = 2.0 * std::numbers::pi * radius * height;
    const double cap = std::numbers::pi * radius * radius;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        const double pick = u01(rng) * (side + 2.0 * cap);
        const double a = 2.0 * std::numbers::pi * u01(rng);
        if (pick < side) {
            out.emplace_back(radius * std::cos(a), radius * std::sin(a), height * (u01(rng) - 0.5));
        } else {
            const double r = radius * std::sqrt(u01(rng));
            const double z = pick < side + cap ? -0.5 * height : 0.5 * height;
            out.emplace_back(r * std::cos(a), r * std::sin(a), z);
        }
    }
    return out;
}

// Area element on the torus is proportional to (R + r cos v); rejection
// sampling against its maximum gives area-uniform points.
std::vector<Vec3> sample_torus(int n, Rng& rng) {
    const double major = 1.0, minor = 0.35;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(n));
    while (static_cast<int>(out.size()) < n) {
        const double u = 2.0 * std::numbers::pi * u01(rng);
        const double v = 2.0 * std::numbers::pi * u01(rng);
        const double w = u01(rng);
        if (w * (major + minor) > major + minor * std::cos(v)) continue;
        const double ring = major + minor * std::cos(v);
        out.emplace_back(ring * std::cos(u), ring * std::sin(u), minor * std::sin(v));
    }
    return out;
}

std::vector<Vec3> sample_file(const std::string& path, int n, Rng& rng) {
    const PointCloud cloud = io::read_point_cloud(path);
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(n));
    if (static_cast<std::size_t>(n) <= cloud.size()) {
        std::vector<std::size_t> order(cloud.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        for (int s = 0; s < n; ++s) out.push_back(cloud[order[static_cast<std::size_t>(s)]]);
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, cloud.size() - 1);
        for (int s = 0; s < n; ++s) out.push_back(cloud[pick(rng)]);
    }
    return out;
}

PointCloud normalize_unit_sphere(std::vector<Vec3> points) {
    Vec3 c = Vec3::Zero();
    for (const auto& p : points) c += p;
    c /= static_cast<double>(points.size());
    double max_norm = 0.0;
    for (auto& p : points) {
        p -= c;
        max_norm = std::max(max_norm, p.norm());
    }
    if (max_norm > 0.0) {
        for (auto& p : points) p /= max_norm;
    }
    return PointCloud(std::move(points));
}

PointCloud scaled(const PointCloud& cloud, double factor) {
    if (factor == 1.0) return cloud;
    std::vector<Vec3> out(cloud.begin(), cloud.end());
    for (auto& p : out) p *= factor;
    return PointCloud(std::move(out));
}

PointCloud subsample(const PointCloud& pool, int n, std::uint64_t seed) {
    if (static_cast<std::size_t>(n) > pool.size()) {
        throw PreconditionError("pool_points must be at least the per-cloud point count");
    }
    Rng rng(seed);
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) out.push_back(pool[order[static_cast<std::size_t>(s)]]);
    return PointCloud(std::move(out));
}

double snap(double value, double step) { return std::round(value / step) * step; }

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finaliser over the combined value.
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

ShapeSpec ShapeSpec::parse(std::string_view name) {
    ShapeSpec s;
    if (name == "box") s.kind = ShapeKind::Box;
    else if (name == "cylinder") s.kind = ShapeKind::Cylinder;
    else if (name == "torus") s.kind = ShapeKind::Torus;
    else if (name == "l-bracket") s.kind = ShapeKind::LBracket;
    else if (name == "random-blob") s.kind = ShapeKind::RandomBlob;
    else if (name.starts_with("file:")) {
        s.kind = ShapeKind::File;
        s.file = std::string(name.substr(5));
    } else {
        throw PreconditionError("unknown shape '" + std::string(name) + "'");
    }
    return s;
}

std::string ShapeSpec::name() const {
    switch (kind) {
        case ShapeKind::File: return "file:" + file;
        case ShapeKind::Box: return "box";
        case ShapeKind::Cylinder: return "cylinder";
        case ShapeKind::Torus: return "torus";
        case ShapeKind::LBracket: return "l-bracket";
        case ShapeKind::RandomBlob: return "random-blob";
    }
    return "?";
}

void ScenarioConfig::validate() const {
    if (points_reference < 1 || points_source < 1) throw PreconditionError("point counts must be >= 1");
    if (pool_points < 0) throw PreconditionError("pool_points must be >= 0");
    if (rot_range_deg < 0.0 || trans_range < 0.0) throw PreconditionError("ranges must be >= 0");
    if (noise_sigma < 0.0 || noise_clip < 0.0) throw PreconditionError("noise parameters must be >= 0");
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) throw PreconditionError("keep_fraction must lie in (0, 1]");
    if (!(scale > 0.0)) throw PreconditionError("scale must be positive");
    if (snap_rot_step_deg && !(*snap_rot_step_deg > 0.0)) throw PreconditionError("snap step must be positive");
    if (snap_trans_bin && !(*snap_trans_bin > 0.0)) throw PreconditionError("snap bin must be positive");
}

PointCloud sample_shape(const ShapeSpec& shape, int n, std::uint64_t seed) {
    if (n < 1) throw PreconditionError("sample_shape needs n >= 1");
    Rng rng(seed);
    std::vector<Vec3> points;
    switch (shape.kind) {
        case ShapeKind::Box: points = box_mesh().sample(n, rng); break;
        case ShapeKind::LBracket: points = l_bracket_mesh().sample(n, rng); break;
        case ShapeKind::RandomBlob: points = random_blob_mesh(shape.blob_seed).sample(n, rng); break;
        case ShapeKind::Cylinder: points = sample_cylinder(n, rng); break;
        case ShapeKind::Torus: points = sample_torus(n, rng); break;
        case ShapeKind::File: points = sample_file(shape.file, n, rng); break;
    }
    return normalize_unit_sphere(std::move(points));
}

RigidTransform sample_transform(double rot_range_deg, double trans_range, std::uint64_t seed) {
    if (rot_range_deg < 0.0 || trans_range < 0.0) throw PreconditionError("ranges must be >= 0");
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double r = deg2rad(rot_range_deg);
    EulerAngles e;
    e.theta = r * u(rng);
    e.phi = r * u(rng);
    e.xi = r * u(rng);
    Vec3 t;
    for (int a = 0; a < 3; ++a) t[a] = trans_range * u(rng);
    return RigidTransform::from_euler(e, t);
}

PointCloud jitter(const PointCloud& cloud, double sigma, double clip, std::uint64_t seed) {
    if (sigma < 0.0 || clip < 0.0) throw PreconditionError("jitter needs sigma >= 0 and clip >= 0");
    if (sigma == 0.0) return cloud;
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<Vec3> out(cloud.begin(), cloud.end());
    for (auto& p : out) {
        for (int a = 0; a < 3; ++a) p[a] += std::clamp(noise(rng), -clip, clip);
    }
    return PointCloud(std::move(out));
}

std::size_t kept_count(std::size_t n, double keep_fraction) {
    const auto k = static_cast<std::size_t>(std::floor(keep_fraction * static_cast<double>(n) + 0.5));
    return std::clamp<std::size_t>(k, 1, n);
}

PointCloud halfspace_crop(const PointCloud& cloud, double keep_fraction, std::uint64_t seed) {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
        throw PreconditionError("keep_fraction must lie in (0, 1]");
    }
    const std::size_t keep = kept_count(cloud.size(), keep_fraction);
    if (keep == cloud.size()) return cloud;

    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec3 dir;
    do {
        dir = Vec3(gauss(rng), gauss(rng), gauss(rng));
    } while (dir.norm() < 1e-12);
    dir.normalize();

    std::vector<std::size_t> order(cloud.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return cloud[a].dot(dir) < cloud[b].dot(dir); });
    order.resize(keep);
    std::sort(order.begin(), order.end());
    std::vector<Vec3> out;
    out.reserve(keep);
    for (const auto k : order) out.push_back(cloud[k]);
    return PointCloud(std::move(out));
}

ScenarioInstance make_instance(const ScenarioConfig& config) {
    config.validate();
    const std::uint64_t seed = config.rng_seed;

    RigidTransform gt = sample_transform(config.rot_range_deg, config.trans_range, derive_seed(seed, 1));
    if (config.snap_rot_step_deg || config.snap_trans_bin) {
        EulerAngles e = euler_from_rotation(gt.rotation);
        if (config.snap_rot_step_deg) {
            const double step = deg2rad(*config.snap_rot_step_deg);
            e = {snap(e.theta, step), snap(e.phi, step), snap(e.xi, step)};
        }
        Vec3 t = gt.translation;
        if (config.snap_trans_bin) {
            for (int a = 0; a < 3; ++a) t[a] = snap(t[a], *config.snap_trans_bin);
        }
        gt = RigidTransform::from_euler(e, t);
    }

    std::optional<PointCloud> pool;
    if (config.pool_points > 0) pool = sample_shape(config.shape, config.pool_points, derive_seed(seed, 2));
    auto draw = [&](int n, std::uint64_t stream) {
        return pool ? subsample(*pool, n, derive_seed(seed, stream))
                    : sample_shape(config.shape, n, derive_seed(seed, stream));
    };

    const PointCloud base_ref = scaled(draw(config.points_reference, 3), config.scale);
    const PointCloud base_src =
        config.shared_base_sample ? base_ref : scaled(draw(config.points_source, 4), config.scale);

    const PointCloud moved = apply_transform(gt.inverse(), base_src);
    const PointCloud source = halfspace_crop(
        jitter(moved, config.noise_sigma, config.noise_clip, derive_seed(seed, 5)), config.keep_fraction,
        derive_seed(seed, 6));
    const PointCloud reference = jitter(base_ref, config.noise_sigma, config.noise_clip, derive_seed(seed, 7));
    return ScenarioInstance{source, reference, gt, config};
}

}  // namespace dses
