#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "ntlgen/geo/grid.hpp"

namespace ntlgen::geo {

inline constexpr float kRadianceCap = 300.0f;
inline constexpr double kSuitabilityThreshold = 8000.0;

// Row-major raster, rows north to south, covering `bbox` with square-ish
// pixels of (bbox.height / height) x (bbox.width / width) degrees.
struct GeoRaster {
  std::size_t height = 0;
  std::size_t width = 0;
  BBox bbox;
  std::vector<float> values;

  // ShapeError / ConfigError on inconsistent dimensions or an empty box.
  void validate() const;
};

struct CapStats {
  std::size_t negatives = 0;  // values raised to 0
  std::size_t capped = 0;     // values lowered to the cap
};

// min(v, 300) with negatives raised to 0 (counted in `stats`).
// DataError on NaN.
std::vector<float> cap_radiance(std::span<const float> raster, CapStats* stats = nullptr);

// ln(1 + count), then a 3x3 uniform mean with mirror edges (index -1 reads
// index 1). DataError on negative or non-finite counts.
std::vector<double> sm_transform(std::span<const float> counts, std::size_t height, std::size_t width);

// Cells whose capped radiance total is >= threshold, sorted by id.
std::vector<std::string> select_suitable(const std::map<std::string, std::vector<float>>& night_per_cell,
                                         double threshold = kSuitabilityThreshold);
double capped_total(std::span<const float> raster);

enum class Resample { kNearest, kBilinear };

// Samples `source` at the pixel centers of an out_height x out_width grid
// over `cell`; samples past the source edge clamp to the border pixels.
// DataError when the source does not overlap the cell.
std::vector<float> resample_to_tile(const GeoRaster& source, const BBox& cell, std::size_t out_height,
                                    std::size_t out_width, Resample method = Resample::kBilinear);

}  // namespace ntlgen::geo
