#include "dses/cloud_io.hpp"

#include "dses/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace dses::io {

namespace {

std::ifstream open_input(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return in;
}

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

ScalarType parse_scalar_type(const std::string& name) {
    if (name == "char" || name == "int8") return ScalarType::Int8;
    if (name == "uchar" || name == "uint8") return ScalarType::UInt8;
    if (name == "short" || name == "int16") return ScalarType::Int16;
    if (name == "ushort" || name == "uint16") return ScalarType::UInt16;
    if (name == "int" || name == "int32") return ScalarType::Int32;
    if (name == "uint" || name == "uint32") return ScalarType::UInt32;
    if (name == "float" || name == "float32") return ScalarType::Float32;
    if (name == "double" || name == "float64") return ScalarType::Float64;
    throw IoError("ply: unknown property type '" + name + "'");
}

std::size_t scalar_size(ScalarType t) {
    switch (t) {
        case ScalarType::Int8:
        case ScalarType::UInt8: return 1;
        case ScalarType::Int16:
        case ScalarType::UInt16: return 2;
        case ScalarType::Int32:
        case ScalarType::UInt32:
        case ScalarType::Float32: return 4;
        case ScalarType::Float64: return 8;
    }
    return 0;
}

struct PlyProperty {
    std::string name;
    ScalarType type = ScalarType::Float32;
    bool is_list = false;
    ScalarType count_type = ScalarType::UInt8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

// Little-endian host assumed, as for every platform this builds on.
double read_binary_scalar(std::istream& in, ScalarType t) {
    char buf[8];
    in.read(buf, static_cast<std::streamsize>(scalar_size(t)));
    if (!in) throw IoError("ply: unexpected end of binary data");
    switch (t) {
        case ScalarType::Int8: { std::int8_t v; std::memcpy(&v, buf, 1); return v; }
        case ScalarType::UInt8: { std::uint8_t v; std::memcpy(&v, buf, 1); return v; }
        case ScalarType::Int16: { std::int16_t v; std::memcpy(&v, buf, 2); return v; }
        case ScalarType::UInt16: { std::uint16_t v; std::memcpy(&v, buf, 2); return v; }
        case ScalarType::Int32: { std::int32_t v; std::memcpy(&v, buf, 4); return v; }
        case ScalarType::UInt32: { std::uint32_t v; std::memcpy(&v, buf, 4); return v; }
        case ScalarType::Float32: { float v; std::memcpy(&v, buf, 4); return v; }
        case ScalarType::Float64: { double v; std::memcpy(&v, buf, 8); return v; }
    }
    return 0.0;
}

}  // namespace

PointCloud read_xyz(std::istream& in) {
    std::vector<Vec3> points;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream fields(line);
        Vec3 p;
        if (!(fields >> p.x() >> p.y() >> p.z())) {
            throw IoError("xyz: line " + std::to_string(line_no) + " does not hold three numbers");
        }
        points.push_back(p);
    }
    if (points.empty()) throw IoError("xyz: no points found");
    try {
        return PointCloud(std::move(points));
    } catch (const PreconditionError& e) {
        throw IoError(std::string("xyz: ") + e.what());
    }
}

PointCloud read_xyz(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_xyz(in);
}

PointCloud read_ply(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "ply") throw IoError("ply: missing magic");

    bool binary = false;
    std::vector<PlyElement> elements;
    bool header_done = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream tok(line);
        std::string key;
        tok >> key;
        if (key.empty() || key == "comment" || key == "obj_info") continue;
        if (key == "format") {
            std::string fmt;
            tok >> fmt;
            if (fmt == "ascii") binary = false;
            else if (fmt == "binary_little_endian") binary = true;
            else throw IoError("ply: unsupported format '" + fmt + "'");
        } else if (key == "element") {
            PlyElement e;
            tok >> e.name >> e.count;
            if (!tok) throw IoError("ply: malformed element line");
            elements.push_back(std::move(e));
        } else if (key == "property") {
            if (elements.empty()) throw IoError("ply: property before any element");
            PlyProperty p;
            std::string type;
            tok >> type;
            if (type == "list") {
                std::string count_type, item_type;
                tok >> count_type >> item_type >> p.name;
                p.is_list = true;
                p.count_type = parse_scalar_type(count_type);
                p.type = parse_scalar_type(item_type);
            } else {
                p.type = parse_scalar_type(type);
                tok >> p.name;
            }
            elements.back().properties.push_back(std::move(p));
        } else if (key == "end_header") {
            header_done = true;
            break;
        } else {
            throw IoError("ply: unexpected header line '" + line + "'");
        }
    }
    if (!header_done) throw IoError("ply: header not terminated");

    const auto vertex_it = std::find_if(elements.begin(), elements.end(),
                                        [](const PlyElement& e) { return e.name == "vertex"; });
    if (vertex_it == elements.end()) throw IoError("ply: no vertex element");
    int axis_of[3] = {-1, -1, -1};
    for (std::size_t k = 0; k < vertex_it->properties.size(); ++k) {
        const auto& p = vertex_it->properties[k];
        if (p.is_list) continue;
        if (p.name == "x") axis_of[0] = static_cast<int>(k);
        if (p.name == "y") axis_of[1] = static_cast<int>(k);
        if (p.name == "z") axis_of[2] = static_cast<int>(k);
    }
    if (axis_of[0] < 0 || axis_of[1] < 0 || axis_of[2] < 0) {
        throw IoError("ply: vertex element lacks x, y or z");
    }

    std::vector<Vec3> points;
    points.reserve(vertex_it->count);
    for (auto e = elements.begin(); e != elements.end(); ++e) {
        const bool is_vertex = e == vertex_it;
        for (std::size_t row = 0; row < e->count; ++row) {
            Vec3 p = Vec3::Zero();
            if (binary) {
                for (std::size_t k = 0; k < e->properties.size(); ++k) {
                    const auto& prop = e->properties[k];
                    if (prop.is_list) {
                        const auto n = static_cast<std::size_t>(read_binary_scalar(in, prop.count_type));
                        in.ignore(static_cast<std::streamsize>(n * scalar_size(prop.type)));
                        continue;
                    }
                    const double v = read_binary_scalar(in, prop.type);
                    for (int a = 0; a < 3; ++a) {
                        if (axis_of[a] == static_cast<int>(k)) p[a] = v;
                    }
                }
            } else {
                if (!std::getline(in, line)) throw IoError("ply: unexpected end of ascii data");
                if (!is_vertex) continue;
                std::istringstream fields(line);
                for (std::size_t k = 0; k < e->properties.size(); ++k) {
                    const auto& prop = e->properties[k];
                    if (prop.is_list) {
                        std::size_t n = 0;
                        fields >> n;
                        double skip;
                        for (std::size_t m = 0; m < n; ++m) fields >> skip;
                        continue;
                    }
                    double v = 0.0;
                    if (!(fields >> v)) throw IoError("ply: malformed vertex row " + std::to_string(row));
                    for (int a = 0; a < 3; ++a) {
                        if (axis_of[a] == static_cast<int>(k)) p[a] = v;
                    }
                }
            }
            if (is_vertex) points.push_back(p);
        }
        // Nothing after the vertex element matters.
        if (is_vertex) break;
    }
    if (points.empty()) throw IoError("ply: no points found");
    try {
        return PointCloud(std::move(points));
    } catch (const PreconditionError& e) {
        throw IoError(std::string("ply: ") + e.what());
    }
}

PointCloud read_ply(const std::filesystem::path& path) {
    auto in = open_input(path, std::ios::in | std::ios::binary);
    return read_ply(in);
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".ply") return read_ply(path);
    return read_xyz(path);
}

void write_xyz(std::ostream& out, const PointCloud& cloud) {
    char buf[96];
    for (const auto& p : cloud) {
        std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", p.x(), p.y(), p.z());
        out << buf;
    }
}

void write_xyz(const std::filesystem::path& path, const PointCloud& cloud) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    write_xyz(out, cloud);
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace dses::io
