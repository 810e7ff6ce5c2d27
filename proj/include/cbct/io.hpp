#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cbct/volume.hpp"

namespace cbct {

/// Binary container shared by volume, projection and parameter files:
///   8-byte ASCII magic
///   uint32 little-endian length L of the JSON header
///   L bytes of UTF-8 JSON
///   float32 little-endian payload
struct Container {
    nlohmann::json header;
    std::vector<float> payload;
};

inline constexpr std::string_view kVolumeMagic = "CBCTVOL1";
inline constexpr std::string_view kProjectionMagic = "CBCTPRJ1";
inline constexpr std::string_view kParamsMagic = "CBCTPAR1";

void write_container(const std::filesystem::path& path, std::string_view magic,
                     const nlohmann::json& header, std::span<const float> payload);

/// Throws FormatError on a wrong magic, unparsable header or a payload whose
/// byte count is not a whole number of floats.
Container read_container(const std::filesystem::path& path, std::string_view magic);

void save_volume(const Volume& v, const std::filesystem::path& path);
Volume load_volume(const std::filesystem::path& path);

void save_projections(const ProjectionSet& p, const std::filesystem::path& path);
ProjectionSet load_projections(const std::filesystem::path& path);

nlohmann::json geometry_to_json(const ScanGeometry& g);
ScanGeometry geometry_from_json(const nlohmann::json& j);

}  // namespace cbct
