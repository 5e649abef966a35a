#include "ntlgen/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "ntlgen/error.hpp"
#include "ntlgen/geo/bundle.hpp"
#include "ntlgen/io/container.hpp"
#include "ntlgen/kernels/kernels.hpp"

namespace ntlgen::metrics {

void AffineMap::validate() const {
  if (!std::isfinite(min) || !std::isfinite(max) || !(max > min)) {
    throw ConfigError("standardization range requires max > min, got [" + std::to_string(min) + ", " +
                      std::to_string(max) + "]");
  }
}

namespace {

template <class V>
StandardizedImage standardize_impl(std::span<const V> raster, std::size_t height, std::size_t width,
                                   const AffineMap& map, Provenance provenance) {
  map.validate();
  if (raster.size() != height * width) {
    throw ShapeError("raster holds " + std::to_string(raster.size()) + " values, expected " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  StandardizedImage img{height, width, std::vector<double>(raster.size()), map, provenance};
  for (std::size_t i = 0; i < raster.size(); ++i) {
    const double v = std::clamp(static_cast<double>(raster[i]), map.min, map.max);
    img.values[i] = std::clamp(map.forward(v), -1.0, 1.0);
  }
  return img;
}

void check_pair(const StandardizedImage& g, const StandardizedImage& o) {
  if (g.height != o.height || g.width != o.width || g.values.size() != o.values.size()) {
    throw ShapeError("image pair shapes differ: " + std::to_string(g.height) + "x" + std::to_string(g.width) +
                     " vs " + std::to_string(o.height) + "x" + std::to_string(o.width));
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

StandardizedImage standardize(std::span<const float> raster, std::size_t height, std::size_t width,
                              const AffineMap& map, Provenance provenance) {
  return standardize_impl(raster, height, width, map, provenance);
}

StandardizedImage standardize(std::span<const double> raster, std::size_t height, std::size_t width,
                              const AffineMap& map, Provenance provenance) {
  return standardize_impl(raster, height, width, map, provenance);
}

std::vector<double> destandardize(const StandardizedImage& image) {
  std::vector<double> out(image.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = image.map.inverse(image.values[i]);
  return out;
}

double d_eu(const StandardizedImage& g, const StandardizedImage& o) {
  check_pair(g, o);
  return std::sqrt(kernels::sum_squared_diff(g.values, o.values));
}

double d_ma(const StandardizedImage& g, const StandardizedImage& o) {
  check_pair(g, o);
  return kernels::sum_abs_diff(g.values, o.values);
}

double r_ncc(const StandardizedImage& g, const StandardizedImage& o) {
  check_pair(g, o);
  if (g.values.empty()) throw DegenerateImageError("r_ncc of empty images");
  const double gm = mean_of(g.values);
  const double om = mean_of(o.values);
  double num = 0, gg = 0, oo = 0;
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    const double a = g.values[i] - gm;
    const double b = o.values[i] - om;
    num += a * b;
    gg += a * a;
    oo += b * b;
  }
  if (gg == 0.0 || oo == 0.0) throw DegenerateImageError("r_ncc is undefined for a constant image");
  return std::clamp(num / std::sqrt(gg * oo), -1.0, 1.0);
}

MetricReport aggregate(std::string scenario, std::vector<TileMetrics> tiles) {
  MetricReport r{std::move(scenario), std::move(tiles), 0, 0, 0};
  if (r.tiles.empty()) return r;
  for (const auto& t : r.tiles) {
    r.mean_d_eu += t.d_eu;
    r.mean_d_ma += t.d_ma;
    r.mean_r_ncc += t.r_ncc;
  }
  const double n = static_cast<double>(r.tiles.size());
  r.mean_d_eu /= n;
  r.mean_d_ma /= n;
  r.mean_r_ncc /= n;
  return r;
}

MetricReport evaluate_pairs(const std::filesystem::path& pred_dataset, const std::filesystem::path& truth_dataset,
                            const std::string& scenario) {
  const auto pred_ids = geo::list_tiles(pred_dataset);
  if (pred_ids.empty()) throw DataError("no prediction tiles under " + pred_dataset.string());
  const auto truth_ids = geo::list_tiles(truth_dataset);
  std::string missing;
  for (const auto& id : pred_ids) {
    if (!std::binary_search(truth_ids.begin(), truth_ids.end(), id)) missing += (missing.empty() ? "" : ", ") + id;
  }
  if (!missing.empty()) throw DataError("prediction tiles without ground truth: " + missing);

  std::vector<TileMetrics> tiles;
  tiles.reserve(pred_ids.size());
  for (const auto& id : pred_ids) {
    const auto pred = geo::read_bundle(pred_dataset, id);
    const auto truth = geo::read_bundle(truth_dataset, id);
    const auto& pc = pred.channel("night");
    const auto& tc = truth.channel("night");
    const auto g = standardize(pc.values, pred.height, pred.width, pc.info.map(), Provenance::kGenerated);
    const auto o = standardize(tc.values, truth.height, truth.width, tc.info.map(), Provenance::kGroundTruth);
    try {
      tiles.push_back({id, d_eu(g, o), d_ma(g, o), r_ncc(g, o)});
    } catch (const Error& e) {
      throw DataError("tile " + id + ": " + e.what());
    }
  }
  return aggregate(scenario, std::move(tiles));
}

std::string report_csv(const MetricReport& report) {
  std::string out = "cell_id,d_eu,d_ma,r_ncc\n";
  for (const auto& t : report.tiles) out += t.cell_id + "," + fmt(t.d_eu) + "," + fmt(t.d_ma) + "," + fmt(t.r_ncc) + "\n";
  return out;
}

std::string report_summary_json(const MetricReport& report) {
  nlohmann::ordered_json j = {{"scenario", report.scenario},
                              {"n_tiles", report.tiles.size()},
                              {"mean_d_eu", report.mean_d_eu},
                              {"mean_d_ma", report.mean_d_ma},
                              {"mean_r_ncc", report.mean_r_ncc}};
  return j.dump(2) + "\n";
}

void write_report(const MetricReport& report, const std::filesystem::path& out_dir) {
  io::write_text(out_dir / "metrics.csv", report_csv(report));
  io::write_text(out_dir / "summary.json", report_summary_json(report));
}

}  // namespace ntlgen::metrics
