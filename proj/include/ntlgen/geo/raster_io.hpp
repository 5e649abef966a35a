#pragma once

#include <filesystem>
#include <string_view>

#include "ntlgen/geo/preprocess.hpp"

namespace ntlgen::geo {

// Georeferenced flat raster: "NTLRAS01", u64 LE header length, JSON header
// {lat_min, lat_max, lon_min, lon_max, height, width}, then height * width
// little-endian float32 values, rows north to south.
inline constexpr std::string_view kRasterMagic = "NTLRAS01";

void write_raster(const std::filesystem::path& path, const GeoRaster& raster);
// FormatError on a malformed header or a value count that disagrees with it.
GeoRaster read_raster(const std::filesystem::path& path);

}  // namespace ntlgen::geo
