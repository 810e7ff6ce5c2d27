#include "cbct/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "cbct/errors.hpp"

namespace cbct {
namespace {

std::uint32_t to_little(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
    }
}

void swap_floats_if_big_endian(std::vector<float>& data) {
    if constexpr (std::endian::native != std::endian::little) {
        for (auto& f : data) {
            auto bits = std::bit_cast<std::uint32_t>(f);
            f = std::bit_cast<float>(to_little(bits));
        }
    }
}

template <typename T>
T require(const nlohmann::json& j, const char* key, const std::filesystem::path& path) {
    if (!j.contains(key)) throw FormatError(path.string() + ": header is missing '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": bad header field '" + key + "': " + e.what());
    }
}

}  // namespace

void write_container(const std::filesystem::path& path, std::string_view magic,
                     const nlohmann::json& header, std::span<const float> payload) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    const std::string text = header.dump();
    const std::uint32_t len = to_little(static_cast<std::uint32_t>(text.size()));
    out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(payload.data()),
                  static_cast<std::streamsize>(payload.size_bytes()));
    } else {
        std::vector<float> copy(payload.begin(), payload.end());
        swap_floats_if_big_endian(copy);
        out.write(reinterpret_cast<const char*>(copy.data()), static_cast<std::streamsize>(payload.size_bytes()));
    }
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

Container read_container(const std::filesystem::path& path, std::string_view magic) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    const std::size_t head = magic.size() + sizeof(std::uint32_t);
    if (bytes.size() < head || std::string_view(bytes.data(), magic.size()) != magic) {
        throw FormatError(path.string() + ": expected magic '" + std::string(magic) + "'");
    }
    std::uint32_t len = 0;
    std::memcpy(&len, bytes.data() + magic.size(), sizeof(len));
    len = to_little(len);
    if (bytes.size() < head + len) throw FormatError(path.string() + ": truncated header");

    Container c;
    try {
        c.header = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(head),
                                         bytes.begin() + static_cast<std::ptrdiff_t>(head + len));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": malformed header: " + e.what());
    }
    if (!c.header.is_object()) throw FormatError(path.string() + ": header is not a JSON object");

    const std::size_t payload_bytes = bytes.size() - head - len;
    if (payload_bytes % sizeof(float) != 0) {
        throw FormatError(path.string() + ": payload is not a whole number of float32 values");
    }
    c.payload.resize(payload_bytes / sizeof(float));
    std::memcpy(c.payload.data(), bytes.data() + head + len, payload_bytes);
    swap_floats_if_big_endian(c.payload);
    return c;
}

void save_volume(const Volume& v, const std::filesystem::path& path) {
    const auto& g = v.grid();
    nlohmann::json h = {{"nx", g.nx},
                        {"ny", g.ny},
                        {"nz", g.nz},
                        {"voxel_size_mm", g.voxel_size},
                        {"origin_mm", {g.origin[0], g.origin[1], g.origin[2]}}};
    write_container(path, kVolumeMagic, h, v.data());
}

Volume load_volume(const std::filesystem::path& path) {
    Container c = read_container(path, kVolumeMagic);
    VolumeGrid g;
    g.nx = require<int>(c.header, "nx", path);
    g.ny = require<int>(c.header, "ny", path);
    g.nz = require<int>(c.header, "nz", path);
    g.voxel_size = require<double>(c.header, "voxel_size_mm", path);
    const auto origin = require<std::vector<double>>(c.header, "origin_mm", path);
    if (origin.size() != 3) throw FormatError(path.string() + ": origin_mm must have 3 entries");
    g.origin = {origin[0], origin[1], origin[2]};
    try {
        g.validate();
    } catch (const GeometryError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    if (static_cast<std::int64_t>(c.payload.size()) != g.voxel_count()) {
        throw FormatError(path.string() + ": payload holds " + std::to_string(c.payload.size()) +
                          " floats, header declares " + std::to_string(g.voxel_count()));
    }
    return Volume(g, std::move(c.payload));
}

nlohmann::json geometry_to_json(const ScanGeometry& g) {
    return {{"sod_mm", g.sod},           {"sdd_mm", g.sdd},       {"det_rows", g.det_rows},
            {"det_cols", g.det_cols},    {"det_pitch_mm", g.det_pitch}, {"n_views", g.n_views},
            {"arc_deg", g.arc_deg},      {"view_angles_rad", g.view_angles}};
}

ScanGeometry geometry_from_json(const nlohmann::json& j) {
    const std::filesystem::path where("<geometry>");
    ScanGeometry g;
    g.sod = require<double>(j, "sod_mm", where);
    g.sdd = require<double>(j, "sdd_mm", where);
    g.det_rows = require<int>(j, "det_rows", where);
    g.det_cols = require<int>(j, "det_cols", where);
    g.det_pitch = require<double>(j, "det_pitch_mm", where);
    g.n_views = require<int>(j, "n_views", where);
    g.arc_deg = require<double>(j, "arc_deg", where);
    g.view_angles = require<std::vector<double>>(j, "view_angles_rad", where);
    return g;
}

void save_projections(const ProjectionSet& p, const std::filesystem::path& path) {
    write_container(path, kProjectionMagic, geometry_to_json(p.geometry()), p.data());
}

ProjectionSet load_projections(const std::filesystem::path& path) {
    Container c = read_container(path, kProjectionMagic);
    ScanGeometry g;
    try {
        g = geometry_from_json(c.header);
        g.validate();
    } catch (const GeometryError& e) {
        throw FormatError(path.string() + ": " + e.what());
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    if (static_cast<std::int64_t>(c.payload.size()) != g.pixels_per_view() * g.n_views) {
        throw FormatError(path.string() + ": payload holds " + std::to_string(c.payload.size()) +
                          " floats, header declares " + std::to_string(g.pixels_per_view() * g.n_views));
    }
    return ProjectionSet(std::move(g), std::move(c.payload));
}

}  // namespace cbct
