#include "ntlgen/synth/scene.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numbers>
#include <random>

#include "ntlgen/error.hpp"
#include "ntlgen/geo/preprocess.hpp"
#include "ntlgen/io/container.hpp"
#include "ntlgen/random.hpp"

namespace ntlgen::synth {

namespace fs = std::filesystem;

namespace {

struct Rgb {
  double r, g, b;
};
// Urban surfaces and bare soil are near-indistinguishable in the visible bands.
constexpr Rgb kVegetation{0.04, 0.08, 0.03};
constexpr Rgb kSoil{0.20, 0.18, 0.15};
constexpr Rgb kUrban{0.19, 0.18, 0.16};

constexpr std::size_t kBackgroundWaves = 4;
constexpr double kSmBackgroundRate = 0.05;

struct Blob {
  double cy, cx, radius, amplitude;
  double hy, hx, hradius, activity;
};

double smoothstep(double lo, double hi, double x) {
  const double t = std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

double gaussian(double dy, double dx, double r) { return std::exp(-(dy * dy + dx * dx) / (2.0 * r * r)); }

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("scene parameters: " + what);
}

}  // namespace

void SceneParams::validate() const {
  require(tile_size >= 2, "tile size must be at least 2");
  require(blob_radius_min > 0 && blob_radius_max >= blob_radius_min, "blob radius range must be positive");
  for (double v : {vegetation_nir, soil_nir, urban_nir}) require(v >= 0 && v <= 1, "NIR levels must lie in [0, 1]");
  require(night_gain >= 0 && noise >= 0 && reflectance_noise >= 0, "gain and noise must be non-negative");
  require(sm_signal_share >= 0 && sm_signal_share <= 1, "sm_signal_share must lie in [0, 1]");
  require(sm_count_scale >= 0, "sm count scale must be non-negative");
  require(urban_threshold >= 0 && urban_threshold <= 1, "urban threshold must lie in [0, 1]");
}

geo::TileBundle generate_scene(const SceneParams& p, const geo::GridCell& cell, double sm_max, SceneFields* fields) {
  p.validate();
  const std::size_t n = p.tile_size;
  const double side = static_cast<double>(n);
  std::mt19937_64 rng(mix_seed(p.seed, fnv1a64(cell.id)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t lo = (p.blobs + 1) / 2;
  const std::size_t count = p.blobs == 0 ? 0 : std::uniform_int_distribution<std::size_t>(lo, p.blobs)(rng);
  std::vector<Blob> blobs;
  for (std::size_t i = 0; i < count; ++i) {
    Blob b;
    b.cy = unit(rng) * side;
    b.cx = unit(rng) * side;
    b.radius = side * (p.blob_radius_min + unit(rng) * (p.blob_radius_max - p.blob_radius_min));
    b.amplitude = 0.6 + 0.4 * unit(rng);
    std::normal_distribution<double> offset(0.0, 0.5 * b.radius);
    b.hy = b.cy + offset(rng);
    b.hx = b.cx + offset(rng);
    b.hradius = 0.6 * b.radius;
    b.activity = unit(rng);
    blobs.push_back(b);
  }

  struct Wave {
    double fy, fx, phase;
  };
  std::vector<Wave> waves;
  for (std::size_t k = 0; k < kBackgroundWaves; ++k) {
    waves.push_back({1.0 + 2.0 * unit(rng), 1.0 + 2.0 * unit(rng), 2.0 * std::numbers::pi * unit(rng)});
  }

  SceneFields f;
  f.density.resize(n * n);
  f.hotspot.resize(n * n);
  f.urban.resize(n * n);
  f.vegetation.resize(n * n);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double py = static_cast<double>(y) + 0.5, px = static_cast<double>(x) + 0.5;
      double d = 0, h = 0;
      for (const auto& b : blobs) {
        d += b.amplitude * gaussian(py - b.cy, px - b.cx, b.radius);
        h += b.activity * gaussian(py - b.hy, px - b.hx, b.hradius);
      }
      double wave = 0;
      for (const auto& w : waves) {
        wave += std::cos(2.0 * std::numbers::pi * (w.fy * py + w.fx * px) / side + w.phase);
      }
      const std::size_t i = y * n + x;
      f.density[i] = std::clamp(d, 0.0, 1.0);
      f.hotspot[i] = std::clamp(h, 0.0, 1.0);
      f.urban[i] = f.density[i] > p.urban_threshold;
      f.vegetation[i] = smoothstep(-0.5, 0.5, wave / std::sqrt(static_cast<double>(kBackgroundWaves) / 2.0));
    }
  }

  std::normal_distribution<double> refl_noise(0.0, 1.0);
  std::vector<float> red(n * n), green(n * n), blue(n * n), nir(n * n), counts(n * n), night(n * n);
  for (std::size_t i = 0; i < n * n; ++i) {
    const double v = f.vegetation[i], d = f.density[i];
    auto mix = [&](double veg, double soil, double urban) {
      const double ground = v * veg + (1.0 - v) * soil;
      return std::clamp((1.0 - d) * ground + d * urban + p.reflectance_noise * refl_noise(rng), 0.0, 1.0);
    };
    red[i] = static_cast<float>(mix(kVegetation.r, kSoil.r, kUrban.r));
    green[i] = static_cast<float>(mix(kVegetation.g, kSoil.g, kUrban.g));
    blue[i] = static_cast<float>(mix(kVegetation.b, kSoil.b, kUrban.b));
    nir[i] = static_cast<float>(mix(p.vegetation_nir, p.soil_nir, p.urban_nir));
  }
  for (std::size_t i = 0; i < n * n; ++i) {
    const double rate = p.sm_count_scale * f.hotspot[i] + (count > 0 ? kSmBackgroundRate : 0.0);
    counts[i] = rate > 0 ? static_cast<float>(std::poisson_distribution<long>(rate)(rng)) : 0.0f;
  }
  std::normal_distribution<double> night_noise(0.0, p.noise * p.night_gain);
  for (std::size_t i = 0; i < n * n; ++i) {
    const double signal = p.night_gain * ((1.0 - p.sm_signal_share) * f.density[i] + p.sm_signal_share * f.hotspot[i]);
    night[i] = static_cast<float>(signal + (p.noise > 0 ? night_noise(rng) : 0.0));
  }

  const auto sm = geo::sm_transform(counts, n, n);
  geo::TileBundle b{cell.id, cell.bbox, n, n, {}};
  b.channels.push_back({geo::reflectance_info("red"), std::move(red)});
  b.channels.push_back({geo::reflectance_info("green"), std::move(green)});
  b.channels.push_back({geo::reflectance_info("blue"), std::move(blue)});
  b.channels.push_back({geo::reflectance_info("nir"), std::move(nir)});
  b.channels.push_back({geo::sm_info(sm_max), std::vector<float>(sm.begin(), sm.end())});
  b.channels.push_back({geo::night_info(), geo::cap_radiance(night)});
  if (fields) *fields = std::move(f);
  return b;
}

double scaled_threshold(std::size_t size) {
  const double s = static_cast<double>(size) / 256.0;
  return geo::kSuitabilityThreshold * s * s;
}

std::string scene_params_json(const SceneParams& p) {
  nlohmann::ordered_json j = {{"tile_size", p.tile_size},
                              {"seed", p.seed},
                              {"blobs", p.blobs},
                              {"blob_radius_min", p.blob_radius_min},
                              {"blob_radius_max", p.blob_radius_max},
                              {"vegetation_nir", p.vegetation_nir},
                              {"soil_nir", p.soil_nir},
                              {"urban_nir", p.urban_nir},
                              {"night_gain", p.night_gain},
                              {"noise", p.noise},
                              {"reflectance_noise", p.reflectance_noise},
                              {"sm_signal_share", p.sm_signal_share},
                              {"sm_count_scale", p.sm_count_scale},
                              {"urban_threshold", p.urban_threshold}};
  return j.dump(2) + "\n";
}

DatasetSummary generate_dataset(const fs::path& out, std::size_t n, const SceneParams& params, bool overwrite) {
  params.validate();
  const auto grid = geo::partition_grid(geo::kConusBBox, geo::kConusSpan);
  if (n == 0 || n > grid.size()) {
    throw ConfigError("tile count must lie in [1, " + std::to_string(grid.size()) + "]");
  }
  std::error_code ec;
  if (fs::exists(out) && !fs::is_directory(out)) throw IOError(out.string() + " exists and is not a directory");
  if (fs::is_directory(out) && !fs::is_empty(out)) {
    if (!overwrite) throw IOError(out.string() + " is not empty (pass overwrite to replace the dataset)");
    for (const char* entry : {"tiles", "grid.json", "suitable.json", "split.json", "scene_params.json"}) {
      fs::remove_all(out / entry, ec);
    }
  }
  fs::create_directories(out, ec);
  if (ec) throw IOError("cannot create " + out.string() + ": " + ec.message());

  const auto cells = grid.cells();
  // First pass fixes the dataset-wide sm range used by every manifest.
  double sm_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = generate_scene(params, cells[i]);
    for (float v : b.channel("sm").values) sm_max = std::max(sm_max, static_cast<double>(v));
  }
  if (!(sm_max > 0.0)) sm_max = 1.0;

  DatasetSummary s;
  s.tiles = n;
  s.sm_max = sm_max;
  s.threshold = scaled_threshold(params.tile_size);
  std::vector<std::string> suitable;
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = generate_scene(params, cells[i], sm_max);
    geo::write_bundle(out, b);
    if (geo::capped_total(b.channel("night").values) >= s.threshold) suitable.push_back(b.cell_id);
  }
  std::sort(suitable.begin(), suitable.end());
  s.suitable = suitable.size();
  const std::size_t train = suitable.size() <= 1 ? suitable.size()
                                                 : std::clamp<std::size_t>(
                                                       static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(suitable.size()))),
                                                       1, suitable.size() - 1);
  s.split = geo::split_dataset(suitable, train, suitable.size() - train, params.seed);
  geo::write_grid(out, grid);
  geo::write_suitable(out, suitable, s.threshold);
  geo::write_split(out, s.split);
  io::write_text(out / "scene_params.json", scene_params_json(params));
  return s;
}

}  // namespace ntlgen::synth
