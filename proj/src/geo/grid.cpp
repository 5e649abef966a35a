#include "ntlgen/geo/grid.hpp"

#include <cmath>
#include <cstdio>

#include "ntlgen/error.hpp"

namespace ntlgen::geo {

namespace {

constexpr double kDivisibilityTol = 1e-9;

std::size_t exact_count(double extent, double span, const char* axis) {
  const double ratio = extent / span;
  const double n = std::round(ratio);
  if (n < 1 || std::fabs(n * span - extent) > kDivisibilityTol) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "span %.12g does not divide the %s extent %.12g", span, axis, extent);
    throw ConfigError(buf);
  }
  return static_cast<std::size_t>(n);
}

// Edge k of n between a and b; hits both ends exactly.
double edge(double a, double b, std::size_t k, std::size_t n) {
  if (k == n) return b;
  return a + (b - a) * static_cast<double>(k) / static_cast<double>(n);
}

}  // namespace

bool BBox::overlaps(const BBox& o) const {
  return lat_min < o.lat_max && o.lat_min < lat_max && lon_min < o.lon_max && o.lon_min < lon_max;
}

std::string cell_id(std::size_t row, std::size_t col) {
  return "r" + std::to_string(row) + "c" + std::to_string(col);
}

GridCell GeoGrid::cell(std::size_t row, std::size_t col) const {
  if (row >= rows || col >= cols) throw ConfigError("cell " + cell_id(row, col) + " is outside the grid");
  BBox b{edge(bbox.lat_max, bbox.lat_min, row + 1, rows), edge(bbox.lat_max, bbox.lat_min, row, rows),
         edge(bbox.lon_min, bbox.lon_max, col, cols), edge(bbox.lon_min, bbox.lon_max, col + 1, cols)};
  return {cell_id(row, col), row, col, b};
}

std::vector<GridCell> GeoGrid::cells() const {
  std::vector<GridCell> out;
  out.reserve(size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out.push_back(cell(r, c));
  return out;
}

std::optional<GridCell> GeoGrid::find(const std::string& id) const {
  unsigned long r = 0, c = 0;
  int consumed = 0;
  if (std::sscanf(id.c_str(), "r%luc%lu%n", &r, &c, &consumed) != 2 || static_cast<std::size_t>(consumed) != id.size()) {
    return std::nullopt;
  }
  if (r >= rows || c >= cols || cell_id(r, c) != id) return std::nullopt;
  return cell(r, c);
}

GeoGrid partition_grid(const BBox& bbox, double span) {
  if (!(span > 0) || !std::isfinite(span)) throw ConfigError("grid span must be positive");
  if (!(bbox.lat_max > bbox.lat_min) || !(bbox.lon_max > bbox.lon_min)) {
    throw ConfigError("bounding box must have positive extent");
  }
  return {bbox, span, exact_count(bbox.height(), span, "latitude"), exact_count(bbox.width(), span, "longitude")};
}

}  // namespace ntlgen::geo
