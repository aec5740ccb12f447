#pragma once

#include "dses/geometry.hpp"

#include <filesystem>
#include <iosfwd>

namespace dses::io {

/// ASCII XYZ: one point per line, three whitespace-separated numbers.
/// Blank lines and lines starting with '#' are skipped.
PointCloud read_xyz(std::istream& in);
PointCloud read_xyz(const std::filesystem::path& path);

/// PLY vertex positions (ascii or binary_little_endian). Only the x, y, z
/// properties of the `vertex` element are read; everything else is skipped.
PointCloud read_ply(std::istream& in);
PointCloud read_ply(const std::filesystem::path& path);

/// Dispatches on extension: `.ply` goes to read_ply, anything else to read_xyz.
PointCloud read_point_cloud(const std::filesystem::path& path);

/// Writes ASCII XYZ with 9 significant digits per coordinate.
void write_xyz(std::ostream& out, const PointCloud& cloud);
void write_xyz(const std::filesystem::path& path, const PointCloud& cloud);

}  // namespace dses::io
