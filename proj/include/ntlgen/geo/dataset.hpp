#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ntlgen/geo/grid.hpp"

namespace ntlgen::geo {

struct SplitAssignment {
  std::uint64_t seed = 0;
  std::vector<std::string> train;       // sorted
  std::vector<std::string> validation;  // sorted

  friend bool operator==(const SplitAssignment&, const SplitAssignment&) = default;
};

// Seeded uniform shuffle of the sorted ids, then a prefix split.
// ConfigError when the counts do not add up to the id count or ids repeat.
SplitAssignment split_dataset(std::vector<std::string> ids, std::size_t train_count, std::size_t val_count,
                              std::uint64_t seed);

// Dataset root manifests.
void write_grid(const std::filesystem::path& dataset, const GeoGrid& grid);
GeoGrid read_grid(const std::filesystem::path& dataset);

void write_suitable(const std::filesystem::path& dataset, const std::vector<std::string>& ids, double threshold);
std::vector<std::string> read_suitable(const std::filesystem::path& dataset);

void write_split(const std::filesystem::path& dataset, const SplitAssignment& split);
SplitAssignment read_split(const std::filesystem::path& dataset);

// Ids of the "train" or "validation" part; ConfigError for other names.
const std::vector<std::string>& split_part(const SplitAssignment& split, const std::string& name);

}  // namespace ntlgen::geo
