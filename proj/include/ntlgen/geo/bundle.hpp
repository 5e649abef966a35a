#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ntlgen/geo/grid.hpp"
#include "ntlgen/metrics/metrics.hpp"
#include "ntlgen/model/scenario.hpp"
#include "ntlgen/tensor.hpp"

namespace ntlgen::geo {

struct ChannelInfo {
  std::string name;
  std::string units;
  double standardize_min = 0;
  double standardize_max = 1;

  metrics::AffineMap map() const { return {standardize_min, standardize_max}; }
  friend bool operator==(const ChannelInfo&, const ChannelInfo&) = default;
};

struct Channel {
  ChannelInfo info;
  std::vector<float> values;  // row-major, north to south

  friend bool operator==(const Channel&, const Channel&) = default;
};

ChannelInfo reflectance_info(const std::string& name);
ChannelInfo sm_info(double dataset_max);
ChannelInfo night_info();

// Co-registered rasters of one grid cell.
struct TileBundle {
  std::string cell_id;
  BBox bbox;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<Channel> channels;

  bool has(const std::string& name) const;
  // DataError if absent.
  const Channel& channel(const std::string& name) const;
  Channel& channel(const std::string& name);
  // ShapeError on mismatched channel sizes, DataError on duplicate names,
  // night values outside [0, 300] or negative sm values.
  void validate() const;

  friend bool operator==(const TileBundle&, const TileBundle&) = default;
};

// zlib CRC-32 of the little-endian bytes written for `values`.
std::uint32_t channel_crc32(std::span<const float> values);

std::filesystem::path tile_dir(const std::filesystem::path& dataset, const std::string& cell_id);

// <dataset>/tiles/<cell_id>/manifest.json plus <channel>.f32 per channel.
// The tile directory is replaced as a whole.
void write_bundle(const std::filesystem::path& dataset, const TileBundle& bundle);

// DataError if the tile does not exist; FormatError on a malformed
// manifest, wrong file lengths, checksum mismatch, or a channel file set
// that differs from the manifest.
TileBundle read_bundle(const std::filesystem::path& dataset, const std::string& cell_id);

// Ids of every tile directory holding a manifest, sorted.
std::vector<std::string> list_tiles(const std::filesystem::path& dataset);

struct StackedTile {
  Tensor<float> condition;  // C x H x W in [-1, 1]
  Tensor<float> target;     // 1 x H x W in [-1, 1]
};

// Channels in the scenario's order, each standardized with its manifest
// map. DataError when a channel is missing.
StackedTile stack_scenario(const TileBundle& bundle, const model::ScenarioConfig& scenario);

}  // namespace ntlgen::geo
