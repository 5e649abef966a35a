#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ntlgen/geo/grid.hpp"
#include "ntlgen/model/checkpoint.hpp"
#include "ntlgen/model/trainer.hpp"

namespace ntlgen::pipeline {

struct ModelSpecs {
  model::UNetSpec generator;
  model::PatchGANSpec discriminator;
};

// Full-width networks for 256x256 tiles, reduced widths otherwise.
ModelSpecs default_specs(std::size_t condition_channels, std::size_t tile_size);

// Stacked (condition, target) pairs, each with a leading batch axis of 1.
std::vector<model::Sample<float>> load_samples(const std::filesystem::path& dataset,
                                               const model::ScenarioConfig& scenario,
                                               const std::vector<std::string>& ids);

struct TrainOutcome {
  model::Checkpoint checkpoint;
  std::vector<model::StepMetrics> history;
};

// Trains on the dataset's "train" split and writes <out>/model.ckpt,
// <out>/history.csv and, at the configured cadence, <out>/checkpoints/.
TrainOutcome train_dataset(const std::filesystem::path& dataset, const model::ScenarioConfig& scenario,
                           const model::TrainConfig& config, const std::filesystem::path& out,
                           const ModelSpecs* specs = nullptr);

std::string history_csv(const std::vector<model::StepMetrics>& history);

// Per-tile dropout seed for inference.
std::uint64_t tile_seed(std::uint64_t seed, const std::string& cell_id);

// Translates every tile of a split; writes bundles holding one "night"
// radiance channel under <out>/tiles/. Returns the translated ids.
std::vector<std::string> translate_split(const model::Checkpoint& checkpoint, const std::filesystem::path& dataset,
                                         const std::string& split, const std::filesystem::path& out,
                                         std::uint64_t seed);

// Held-out mean L1 between generated and target standardized tiles.
double mean_l1(const model::Checkpoint& checkpoint, const std::vector<model::Sample<float>>& samples,
               std::uint64_t seed);

// Pre-exported source rasters in the flat raster format.
struct IngestSources {
  std::map<std::string, std::filesystem::path> reflectance;  // red, green, blue, nir (any subset)
  std::filesystem::path night;
  std::optional<std::filesystem::path> sm_counts;
};

// Cuts every grid cell covered by all sources into a tile bundle:
// reflectance and night resampled bilinearly (night then capped), sm counts
// resampled nearest then log-transformed and smoothed. Writes grid.json and
// returns the ids written.
std::vector<std::string> ingest(const IngestSources& sources, const geo::GeoGrid& grid, std::size_t tile_size,
                                const std::filesystem::path& out);

}  // namespace ntlgen::pipeline
