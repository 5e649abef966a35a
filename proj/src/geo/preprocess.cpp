#include "ntlgen/geo/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "ntlgen/error.hpp"

namespace ntlgen::geo {

void GeoRaster::validate() const {
  if (height == 0 || width == 0) throw ShapeError("raster must have positive dimensions");
  if (values.size() != height * width) {
    throw ShapeError("raster holds " + std::to_string(values.size()) + " values, expected " +
                     std::to_string(height * width));
  }
  if (!(bbox.height() > 0) || !(bbox.width() > 0)) throw ConfigError("raster bounding box is empty");
}

std::vector<float> cap_radiance(std::span<const float> raster, CapStats* stats) {
  std::vector<float> out(raster.size());
  CapStats local;
  for (std::size_t i = 0; i < raster.size(); ++i) {
    const float v = raster[i];
    if (std::isnan(v)) throw DataError("radiance raster contains NaN at index " + std::to_string(i));
    if (v < 0.0f) {
      ++local.negatives;
      out[i] = 0.0f;
    } else if (v > kRadianceCap) {
      ++local.capped;
      out[i] = kRadianceCap;
    } else {
      out[i] = v;
    }
  }
  if (stats) {
    stats->negatives += local.negatives;
    stats->capped += local.capped;
  }
  return out;
}

std::vector<double> sm_transform(std::span<const float> counts, std::size_t height, std::size_t width) {
  if (counts.size() != height * width) throw ShapeError("count raster does not match its dimensions");
  std::vector<double> lg(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!(counts[i] >= 0.0f) || !std::isfinite(counts[i])) {
      throw DataError("social-media counts must be finite and non-negative (index " + std::to_string(i) + ")");
    }
    lg[i] = std::log1p(static_cast<double>(counts[i]));
  }
  auto mirror = [](std::ptrdiff_t i, std::ptrdiff_t n) -> std::size_t {
    if (n == 1) return 0;
    if (i < 0) return static_cast<std::size_t>(-i);
    if (i >= n) return static_cast<std::size_t>(2 * n - 2 - i);
    return static_cast<std::size_t>(i);
  };
  const auto h = static_cast<std::ptrdiff_t>(height);
  const auto w = static_cast<std::ptrdiff_t>(width);
  std::vector<double> out(counts.size());
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      double s = 0.0;
      for (std::ptrdiff_t dr = -1; dr <= 1; ++dr) {
        const std::size_t row = mirror(r + dr, h) * width;
        for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) s += lg[row + mirror(c + dc, w)];
      }
      out[static_cast<std::size_t>(r) * width + static_cast<std::size_t>(c)] = s / 9.0;
    }
  }
  return out;
}

double capped_total(std::span<const float> raster) {
  double total = 0.0;
  for (float v : cap_radiance(raster)) total += v;
  return total;
}

std::vector<std::string> select_suitable(const std::map<std::string, std::vector<float>>& night_per_cell,
                                         double threshold) {
  std::vector<std::string> out;
  for (const auto& [id, raster] : night_per_cell) {
    if (capped_total(raster) >= threshold) out.push_back(id);
  }
  return out;  // std::map iteration is already sorted by id
}

namespace {

// Continuous source coordinate of a target position; snaps values within
// 1e-9 of an integer so identical grids copy exactly.
double source_coord(double offset, double pixel) {
  const double f = offset / pixel - 0.5;
  const double r = std::round(f);
  return std::fabs(f - r) < 1e-9 ? r : f;
}

}  // namespace

std::vector<float> resample_to_tile(const GeoRaster& source, const BBox& cell, std::size_t out_height,
                                    std::size_t out_width, Resample method) {
  source.validate();
  if (out_height == 0 || out_width == 0) throw ShapeError("tile size must be positive");
  if (!source.bbox.overlaps(cell)) throw DataError("source raster does not overlap the cell");
  const double src_dlat = source.bbox.height() / static_cast<double>(source.height);
  const double src_dlon = source.bbox.width() / static_cast<double>(source.width);
  const double dlat = cell.height() / static_cast<double>(out_height);
  const double dlon = cell.width() / static_cast<double>(out_width);
  const auto last_r = static_cast<std::ptrdiff_t>(source.height) - 1;
  const auto last_c = static_cast<std::ptrdiff_t>(source.width) - 1;
  auto at = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
    r = std::clamp<std::ptrdiff_t>(r, 0, last_r);
    c = std::clamp<std::ptrdiff_t>(c, 0, last_c);
    return static_cast<double>(source.values[static_cast<std::size_t>(r) * source.width + static_cast<std::size_t>(c)]);
  };

  std::vector<float> out(out_height * out_width);
  for (std::size_t i = 0; i < out_height; ++i) {
    const double lat = cell.lat_max - (static_cast<double>(i) + 0.5) * dlat;
    const double fy = source_coord(source.bbox.lat_max - lat, src_dlat);
    for (std::size_t j = 0; j < out_width; ++j) {
      const double lon = cell.lon_min + (static_cast<double>(j) + 0.5) * dlon;
      const double fx = source_coord(lon - source.bbox.lon_min, src_dlon);
      double v;
      if (method == Resample::kNearest) {
        v = at(static_cast<std::ptrdiff_t>(std::floor(fy + 0.5)), static_cast<std::ptrdiff_t>(std::floor(fx + 0.5)));
      } else {
        const double y0 = std::floor(fy), x0 = std::floor(fx);
        const double ty = fy - y0, tx = fx - x0;
        const auto r = static_cast<std::ptrdiff_t>(y0), c = static_cast<std::ptrdiff_t>(x0);
        const double top = tx == 0.0 ? at(r, c) : (1 - tx) * at(r, c) + tx * at(r, c + 1);
        const double bottom = tx == 0.0 ? at(r + 1, c) : (1 - tx) * at(r + 1, c) + tx * at(r + 1, c + 1);
        v = ty == 0.0 ? top : (1 - ty) * top + ty * bottom;
      }
      out[i * out_width + j] = static_cast<float>(v);
    }
  }
  return out;
}

}  // namespace ntlgen::geo
