#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ntlgen/geo/bundle.hpp"
#include "ntlgen/geo/dataset.hpp"

namespace ntlgen::synth {

// Procedural stand-in for co-registered Landsat / social-media / VIIRS tiles.
// Urban areas are Gaussian blobs. Their RGB reflectance matches bare soil,
// so only NIR separates them. A share of the nighttime radiance follows
// social-media hotspots whose strength is independent of the urban density.
struct SceneParams {
  std::size_t tile_size = 64;
  std::uint64_t seed = 0;
  std::size_t blobs = 4;             // per tile count drawn from [ceil(blobs/2), blobs]
  double blob_radius_min = 0.05;     // fraction of the tile side
  double blob_radius_max = 0.16;
  double vegetation_nir = 0.45;
  double soil_nir = 0.30;
  double urban_nir = 0.12;
  double night_gain = 180.0;         // radiance of a fully urban, fully active pixel
  double noise = 0.02;               // night noise sigma as a fraction of the gain
  double reflectance_noise = 0.005;
  double sm_signal_share = 0.3;
  double sm_count_scale = 60.0;      // expected posts at a full-strength hotspot
  double urban_threshold = 0.3;      // density above which a pixel counts as urban

  // ConfigError on negative ranges or a share outside [0, 1].
  void validate() const;
};

// Diagnostic fields kept alongside the bundle.
struct SceneFields {
  std::vector<double> density;  // urban density in [0, 1]
  std::vector<double> hotspot;  // social activity in [0, 1]
  std::vector<bool> urban;      // density > urban_threshold
  std::vector<double> vegetation;
};

// Deterministic per (params, cell_id). Channels: red, green, blue, nir, sm,
// night. The sm channel's standardization max is `sm_max`.
geo::TileBundle generate_scene(const SceneParams& params, const geo::GridCell& cell, double sm_max = 1.0,
                               SceneFields* fields = nullptr);

struct DatasetSummary {
  std::size_t tiles = 0;
  std::size_t suitable = 0;
  double threshold = 0;
  double sm_max = 0;
  geo::SplitAssignment split;
};

// n bundles on the first n cells of the CONUS grid plus grid.json,
// suitable.json (threshold scaled by tile area), split.json (80/20 of the
// suitable tiles) and scene_params.json. IOError when `out` is a non-empty
// directory and `overwrite` is false; with `overwrite` only the dataset's
// own entries are replaced.
DatasetSummary generate_dataset(const std::filesystem::path& out, std::size_t n, const SceneParams& params,
                                bool overwrite = false);

// Suitability threshold for a tile of side `size`, scaled from 8000 at 256.
double scaled_threshold(std::size_t size);

std::string scene_params_json(const SceneParams& params);

}  // namespace ntlgen::synth
