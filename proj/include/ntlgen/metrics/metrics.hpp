#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ntlgen::metrics {

// v -> 2 (v - min) / (max - min) - 1 and back.
struct AffineMap {
  double min = 0.0;
  double max = 1.0;

  // ConfigError unless max > min and both are finite.
  void validate() const;
  double forward(double v) const { return 2.0 * (v - min) / (max - min) - 1.0; }
  double inverse(double s) const { return min + (s + 1.0) * 0.5 * (max - min); }
};

inline constexpr AffineMap kReflectanceMap{0.0, 1.0};
inline constexpr AffineMap kRadianceMap{0.0, 300.0};

enum class Provenance { kGenerated, kGroundTruth };

struct StandardizedImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;  // row-major, all in [-1, 1]
  AffineMap map;
  Provenance provenance = Provenance::kGroundTruth;
};

// Values are clipped into [min, max] before mapping. ShapeError when the
// raster does not hold height * width values.
StandardizedImage standardize(std::span<const float> raster, std::size_t height, std::size_t width,
                              const AffineMap& map, Provenance provenance = Provenance::kGroundTruth);
StandardizedImage standardize(std::span<const double> raster, std::size_t height, std::size_t width,
                              const AffineMap& map, Provenance provenance = Provenance::kGroundTruth);

std::vector<double> destandardize(const StandardizedImage& image);

// Euclidean and Manhattan distances; ShapeError on differing shapes.
double d_eu(const StandardizedImage& g, const StandardizedImage& o);
double d_ma(const StandardizedImage& g, const StandardizedImage& o);
// Centered normalized cross-correlation; DegenerateImageError if either
// image is constant.
double r_ncc(const StandardizedImage& g, const StandardizedImage& o);

struct TileMetrics {
  std::string cell_id;
  double d_eu = 0;
  double d_ma = 0;
  double r_ncc = 0;
};

struct MetricReport {
  std::string scenario;
  std::vector<TileMetrics> tiles;
  double mean_d_eu = 0;
  double mean_d_ma = 0;
  double mean_r_ncc = 0;
};

// Fills the arithmetic means. An empty tile list gives zero means.
MetricReport aggregate(std::string scenario, std::vector<TileMetrics> tiles);

// Compares the "night" channel of every tile bundle under `pred_dataset`
// against the same cell under `truth_dataset`, each standardized with the
// map recorded in its manifest. DataError lists prediction ids missing from
// the truth set, or reports an empty prediction set.
MetricReport evaluate_pairs(const std::filesystem::path& pred_dataset,
                            const std::filesystem::path& truth_dataset, const std::string& scenario = "");

// <out>/metrics.csv (cell_id,d_eu,d_ma,r_ncc) and <out>/summary.json.
void write_report(const MetricReport& report, const std::filesystem::path& out_dir);
std::string report_csv(const MetricReport& report);
std::string report_summary_json(const MetricReport& report);

}  // namespace ntlgen::metrics
