#include "ntlgen/geo/bundle.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <json.hpp>
#include <set>

#include "ntlgen/error.hpp"
#include "ntlgen/io/container.hpp"

namespace ntlgen::geo {

using nlohmann::json;
namespace fs = std::filesystem;

ChannelInfo reflectance_info(const std::string& name) { return {name, "reflectance", 0.0, 1.0}; }

ChannelInfo sm_info(double dataset_max) { return {"sm", "log1p count, 3x3 mean", 0.0, dataset_max}; }

ChannelInfo night_info() { return {"night", "nW cm-2 sr-1", 0.0, 300.0}; }

bool TileBundle::has(const std::string& name) const {
  return std::any_of(channels.begin(), channels.end(), [&](const Channel& c) { return c.info.name == name; });
}

const Channel& TileBundle::channel(const std::string& name) const {
  for (const auto& c : channels) {
    if (c.info.name == name) return c;
  }
  throw DataError("tile " + cell_id + " has no '" + name + "' channel");
}

Channel& TileBundle::channel(const std::string& name) {
  return const_cast<Channel&>(std::as_const(*this).channel(name));
}

void TileBundle::validate() const {
  if (height == 0 || width == 0) throw ShapeError("tile " + cell_id + " has empty dimensions");
  std::set<std::string> seen;
  for (const auto& c : channels) {
    if (!seen.insert(c.info.name).second) throw DataError("tile " + cell_id + " repeats channel " + c.info.name);
    if (c.values.size() != height * width) {
      throw ShapeError("tile " + cell_id + " channel " + c.info.name + " holds " + std::to_string(c.values.size()) +
                       " values, expected " + std::to_string(height * width));
    }
    if (c.info.name == "night" &&
        std::any_of(c.values.begin(), c.values.end(), [](float v) { return !(v >= 0.0f && v <= 300.0f); })) {
      throw DataError("tile " + cell_id + " night values fall outside [0, 300]");
    }
    if (c.info.name == "sm" && std::any_of(c.values.begin(), c.values.end(), [](float v) { return !(v >= 0.0f); })) {
      throw DataError("tile " + cell_id + " has negative sm values");
    }
  }
}

std::uint32_t channel_crc32(std::span<const float> values) {
  std::vector<unsigned char> bytes(values.size() * 4);
  std::memcpy(bytes.data(), values.data(), bytes.size());
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < bytes.size(); i += 4) {
      std::swap(bytes[i], bytes[i + 3]);
      std::swap(bytes[i + 1], bytes[i + 2]);
    }
  }
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in bounded pieces.
  constexpr std::size_t kChunk = 1u << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
    crc = crc32(crc, bytes.data() + off, static_cast<uInt>(std::min(kChunk, bytes.size() - off)));
  }
  return static_cast<std::uint32_t>(crc);
}

fs::path tile_dir(const fs::path& dataset, const std::string& cell_id) { return dataset / "tiles" / cell_id; }

void write_bundle(const fs::path& dataset, const TileBundle& bundle) {
  bundle.validate();
  const fs::path dir = tile_dir(dataset, bundle.cell_id);
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir, ec);
  if (ec) throw IOError("cannot create " + dir.string() + ": " + ec.message());
  json channels = json::array();
  for (const auto& c : bundle.channels) {
    io::write_f32(dir / (c.info.name + ".f32"), c.values);
    channels.push_back({{"name", c.info.name},
                        {"units", c.info.units},
                        {"standardize_min", c.info.standardize_min},
                        {"standardize_max", c.info.standardize_max},
                        {"crc32", channel_crc32(c.values)}});
  }
  nlohmann::ordered_json manifest = {{"cell_id", bundle.cell_id},
                                     {"lat_min", bundle.bbox.lat_min},
                                     {"lat_max", bundle.bbox.lat_max},
                                     {"lon_min", bundle.bbox.lon_min},
                                     {"lon_max", bundle.bbox.lon_max},
                                     {"width", bundle.width},
                                     {"height", bundle.height},
                                     {"channels", std::move(channels)}};
  io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

TileBundle read_bundle(const fs::path& dataset, const std::string& cell_id) {
  const fs::path dir = tile_dir(dataset, cell_id);
  if (!fs::is_regular_file(dir / "manifest.json")) throw DataError("no tile '" + cell_id + "' under " + dataset.string());
  TileBundle b;
  std::set<std::string> expected_files{"manifest.json"};
  try {
    const json m = json::parse(io::read_text(dir / "manifest.json"));
    m.at("cell_id").get_to(b.cell_id);
    if (b.cell_id != cell_id) throw FormatError("manifest names cell '" + b.cell_id + "'");
    b.bbox = {m.at("lat_min").get<double>(), m.at("lat_max").get<double>(), m.at("lon_min").get<double>(),
              m.at("lon_max").get<double>()};
    m.at("width").get_to(b.width);
    m.at("height").get_to(b.height);
    for (const auto& c : m.at("channels")) {
      Channel ch;
      c.at("name").get_to(ch.info.name);
      c.at("units").get_to(ch.info.units);
      c.at("standardize_min").get_to(ch.info.standardize_min);
      c.at("standardize_max").get_to(ch.info.standardize_max);
      const fs::path file = dir / (ch.info.name + ".f32");
      if (!fs::is_regular_file(file)) throw FormatError("channel file " + file.filename().string() + " is missing");
      if (fs::file_size(file) != b.width * b.height * 4) {
        throw FormatError(file.filename().string() + " has " + std::to_string(fs::file_size(file)) + " bytes, expected " +
                          std::to_string(b.width * b.height * 4));
      }
      ch.values = io::read_f32(file);
      if (channel_crc32(ch.values) != c.at("crc32").get<std::uint32_t>()) {
        throw FormatError(file.filename().string() + " fails its CRC32 check");
      }
      expected_files.insert(file.filename().string());
      b.channels.push_back(std::move(ch));
    }
  } catch (const json::exception& e) {
    throw FormatError("tile " + cell_id + ": malformed manifest: " + e.what());
  } catch (const FormatError& e) {
    throw FormatError("tile " + cell_id + ": " + e.what());
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (!expected_files.count(name)) throw FormatError("tile " + cell_id + ": unexpected file " + name + " not in manifest");
  }
  try {
    b.validate();
  } catch (const ShapeError& e) {
    throw FormatError(e.what());
  }
  return b;
}

std::vector<std::string> list_tiles(const fs::path& dataset) {
  std::vector<std::string> ids;
  const fs::path root = dataset / "tiles";
  if (!fs::is_directory(root)) return ids;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::is_regular_file(entry.path() / "manifest.json")) {
      ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

StackedTile stack_scenario(const TileBundle& bundle, const model::ScenarioConfig& scenario) {
  const std::size_t hw = bundle.height * bundle.width;
  std::vector<float> condition;
  condition.reserve(scenario.channel_count() * hw);
  for (const auto& name : scenario.channels) {
    const Channel& c = bundle.channel(name);
    const auto img = metrics::standardize(c.values, bundle.height, bundle.width, c.info.map());
    for (double v : img.values) condition.push_back(static_cast<float>(v));
  }
  const Channel& night = bundle.channel("night");
  const auto target = metrics::standardize(night.values, bundle.height, bundle.width, night.info.map());
  std::vector<float> t(target.values.begin(), target.values.end());
  return {Tensor<float>({scenario.channel_count(), bundle.height, bundle.width}, std::move(condition)),
          Tensor<float>({1, bundle.height, bundle.width}, std::move(t))};
}

}  // namespace ntlgen::geo
