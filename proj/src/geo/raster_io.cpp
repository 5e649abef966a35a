#include "ntlgen/geo/raster_io.hpp"

#include <json.hpp>

#include "ntlgen/error.hpp"
#include "ntlgen/io/container.hpp"

namespace ntlgen::geo {

void write_raster(const std::filesystem::path& path, const GeoRaster& r) {
  r.validate();
  const nlohmann::ordered_json header = {{"lat_min", r.bbox.lat_min}, {"lat_max", r.bbox.lat_max},
                                         {"lon_min", r.bbox.lon_min}, {"lon_max", r.bbox.lon_max},
                                         {"height", r.height},        {"width", r.width}};
  io::write_container(path, kRasterMagic, header.dump(), r.values);
}

GeoRaster read_raster(const std::filesystem::path& path) {
  auto raw = io::read_container(path, kRasterMagic);
  GeoRaster r;
  try {
    const auto h = nlohmann::json::parse(raw.header);
    r.bbox = {h.at("lat_min").get<double>(), h.at("lat_max").get<double>(), h.at("lon_min").get<double>(),
              h.at("lon_max").get<double>()};
    h.at("height").get_to(r.height);
    h.at("width").get_to(r.width);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": malformed raster header: " + e.what());
  }
  r.values = std::move(raw.payload);
  try {
    r.validate();
  } catch (const Error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return r;
}

}  // namespace ntlgen::geo
