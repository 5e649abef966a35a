#pragma once

#include <optional>
#include <string>
#include <vector>

namespace ntlgen::geo {

// Plate-carree box in degrees.
struct BBox {
  double lat_min = 0;
  double lat_max = 0;
  double lon_min = 0;
  double lon_max = 0;

  double height() const { return lat_max - lat_min; }
  double width() const { return lon_max - lon_min; }
  // True when the open interiors intersect.
  bool overlaps(const BBox& other) const;

  friend bool operator==(const BBox&, const BBox&) = default;
};

// Contiguous US box whose 0.625 degree partition is 40 x 96 cells.
inline constexpr BBox kConusBBox{24.0, 49.0, -125.0, -65.0};
inline constexpr double kConusSpan = 0.625;

struct GridCell {
  std::string id;  // "r{row}c{col}"
  std::size_t row = 0;
  std::size_t col = 0;
  BBox bbox;
};

// Rows run north to south, columns west to east.
struct GeoGrid {
  BBox bbox;
  double span = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  GridCell cell(std::size_t row, std::size_t col) const;
  std::vector<GridCell> cells() const;  // row-major
  std::optional<GridCell> find(const std::string& id) const;

  friend bool operator==(const GeoGrid&, const GeoGrid&) = default;
};

std::string cell_id(std::size_t row, std::size_t col);

// ConfigError unless `span` divides both extents to within 1e-9 degrees.
GeoGrid partition_grid(const BBox& bbox, double span);

}  // namespace ntlgen::geo
