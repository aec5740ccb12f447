#pragma once

#include "dses/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace dses {

enum class ShapeKind { File, Box, Cylinder, Torus, LBracket, RandomBlob };

struct ShapeSpec {
    ShapeKind kind = ShapeKind::LBracket;
    std::string file;             ///< point cloud path for ShapeKind::File
    std::uint64_t blob_seed = 7;  ///< fixes the surface of ShapeKind::RandomBlob

    /// box, cylinder, torus, l-bracket, random-blob, or file:<path>.
    static ShapeSpec parse(std::string_view name);
    std::string name() const;
};

/// Defaults follow the partial-to-full synthetic protocol: 1024 points per
/// cloud drawn from a 2048-point surface sample, +-45 deg / +-0.5 transforms,
/// sigma 0.01 clipped at 0.05, 70% kept.
struct ScenarioConfig {
    ShapeSpec shape;
    int points_reference = 1024;
    int points_source = 1024;
    /// When > 0, both clouds are drawn without replacement from one pool of
    /// this many surface samples; 0 samples each cloud directly from the
    /// surface.
    int pool_points = 2048;
    double rot_range_deg = 45.0;
    double trans_range = 0.5;
    double noise_sigma = 0.01;
    double noise_clip = 0.05;
    double keep_fraction = 0.7;
    std::uint64_t rng_seed = 0;
    /// Applied after unit-sphere normalisation.
    double scale = 1.0;
    /// Source and reference share one base sample (diagnostic mode);
    /// points_source is then ignored.
    bool shared_base_sample = false;
    /// Snap the sampled transform onto a search grid (Euler step in degrees,
    /// translation bin in meters).
    std::optional<double> snap_rot_step_deg;
    std::optional<double> snap_trans_bin;

    void validate() const;
};

/// `ground_truth` maps the source onto the reference: applying it to the
/// source's pre-noise points gives points of the reference surface sample.
/// This is the transform the engines are expected to return.
struct ScenarioInstance {
    PointCloud source;
    PointCloud reference;
    RigidTransform ground_truth;
    ScenarioConfig config;
};

/// n points uniformly by area on the surface, centered on their centroid and
/// scaled to max norm 1.
PointCloud sample_shape(const ShapeSpec& shape, int n, std::uint64_t seed);

/// Euler angles i.i.d. uniform in +-rot_range_deg, translation components
/// i.i.d. uniform in +-trans_range.
RigidTransform sample_transform(double rot_range_deg, double trans_range, std::uint64_t seed);

/// Adds N(0, sigma^2) per component, each clamped to +-clip.
PointCloud jitter(const PointCloud& cloud, double sigma, double clip, std::uint64_t seed);

/// Keeps the round(keep_fraction * n) points with the smallest projection onto
/// a direction drawn uniformly on the sphere. Survivors keep their order.
PointCloud halfspace_crop(const PointCloud& cloud, double keep_fraction, std::uint64_t seed);

/// round-half-up(keep_fraction * n), at least 1.
std::size_t kept_count(std::size_t n, double keep_fraction);

/// sample -> transform source -> jitter both -> crop source; fully determined
/// by config.rng_seed.
ScenarioInstance make_instance(const ScenarioConfig& config);

/// Derives an independent stream seed from (seed, stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace dses
