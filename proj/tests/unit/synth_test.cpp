#include <gtest/gtest.h>

#include <filesystem>

#include "ntlgen/error.hpp"
#include "ntlgen/geo/bundle.hpp"
#include "ntlgen/geo/dataset.hpp"
#include "ntlgen/io/container.hpp"
#include "ntlgen/model/translate.hpp"
#include "ntlgen/pipeline.hpp"
#include "ntlgen/synth/scene.hpp"
#include "oracles.hpp"

using namespace ntlgen;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "ntlgen_synth_test" / name;
  fs::remove_all(dir);
  return dir;
}

const geo::GridCell& conus_cell(std::size_t i) {
  static const auto cells = geo::partition_grid(geo::kConusBBox, geo::kConusSpan).cells();
  return cells.at(i);
}

// Pixels of several scenes as regression rows.
struct Pixels {
  std::vector<double> night, density, sm, red, green, blue, nir;
};

Pixels collect(const synth::SceneParams& p, std::size_t tiles) {
  Pixels px;
  for (std::size_t t = 0; t < tiles; ++t) {
    synth::SceneFields f;
    const auto b = synth::generate_scene(p, conus_cell(t), 1.0, &f);
    for (std::size_t i = 0; i < f.density.size(); ++i) {
      px.night.push_back(b.channel("night").values[i]);
      px.density.push_back(f.density[i]);
      px.sm.push_back(b.channel("sm").values[i]);
      px.red.push_back(b.channel("red").values[i]);
      px.green.push_back(b.channel("green").values[i]);
      px.blue.push_back(b.channel("blue").values[i]);
      px.nir.push_back(b.channel("nir").values[i]);
    }
  }
  return px;
}

}  // namespace

TEST(Scene, DeterministicPerCell) {
  synth::SceneParams p;
  p.seed = 3;
  EXPECT_EQ(synth::generate_scene(p, conus_cell(5)), synth::generate_scene(p, conus_cell(5)));
  EXPECT_NE(synth::generate_scene(p, conus_cell(5)).channels, synth::generate_scene(p, conus_cell(6)).channels);
  auto q = p;
  q.seed = 4;
  EXPECT_NE(synth::generate_scene(p, conus_cell(5)).channels, synth::generate_scene(q, conus_cell(5)).channels);
}

TEST(Scene, NoBlobsNoNoiseIsDark) {
  synth::SceneParams p;
  p.blobs = 0;
  p.noise = 0;
  const auto b = synth::generate_scene(p, conus_cell(0));
  for (float v : b.channel("night").values) EXPECT_EQ(v, 0.0f);
  for (float v : b.channel("sm").values) EXPECT_EQ(v, 0.0f);
}

TEST(Scene, NirSeparatesVegetationFromUrban) {
  synth::SceneParams p;
  p.seed = 11;
  for (std::size_t t = 0; t < 10; ++t) {
    synth::SceneFields f;
    const auto b = synth::generate_scene(p, conus_cell(t), 1.0, &f);
    const auto& nir = b.channel("nir").values;
    double veg = 0, urb = 0;
    std::size_t nv = 0, nu = 0;
    for (std::size_t i = 0; i < nir.size(); ++i) {
      if (f.urban[i]) {
        urb += nir[i];
        ++nu;
      } else if (f.vegetation[i] > 0.5) {
        veg += nir[i];
        ++nv;
      }
    }
    if (nu == 0 || nv == 0) continue;
    EXPECT_GT(veg / static_cast<double>(nv), urb / static_cast<double>(nu)) << "tile " << t;
  }
}

TEST(Scene, BundlesSatisfyTileInvariants) {
  synth::SceneParams p;
  p.seed = 2;
  p.night_gain = 600;  // forces capping
  for (std::size_t t = 0; t < 5; ++t) {
    const auto b = synth::generate_scene(p, conus_cell(t), 4.0);
    EXPECT_NO_THROW(b.validate());
    EXPECT_EQ(b.channels.size(), 6u);
    for (const auto& c : b.channels) EXPECT_EQ(c.values.size(), 64u * 64u);
  }
}

TEST(Scene, InvalidParamsAreConfigErrors) {
  synth::SceneParams p;
  p.sm_signal_share = 1.5;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.blob_radius_min = -0.1;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Scene, RegressionRecoversSocialMediaCoefficient) {
  synth::SceneParams p;
  p.seed = 5;
  const auto px = collect(p, 12);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < px.night.size(); ++i) rows.push_back({1.0, px.density[i], px.sm[i]});
  const auto fit = oracle::least_squares(rows, px.night);
  EXPECT_GT(fit.coef[2], 5.0);

  p.sm_signal_share = 0.0;
  const auto flat = collect(p, 12);
  rows.clear();
  for (std::size_t i = 0; i < flat.night.size(); ++i) rows.push_back({1.0, flat.density[i], flat.sm[i]});
  EXPECT_LT(std::fabs(oracle::least_squares(rows, flat.night).coef[2]), fit.coef[2] / 5.0);
}

TEST(Scene, SocialMediaLowersResidualVariance) {
  synth::SceneParams p;
  p.seed = 6;
  const auto px = collect(p, 12);
  std::vector<std::vector<double>> base, with_sm;
  for (std::size_t i = 0; i < px.night.size(); ++i) {
    base.push_back({1.0, px.red[i], px.green[i], px.blue[i], px.nir[i]});
    with_sm.push_back({1.0, px.red[i], px.green[i], px.blue[i], px.nir[i], px.sm[i]});
  }
  const double without = oracle::least_squares(base, px.night).residual_variance;
  const double with = oracle::least_squares(with_sm, px.night).residual_variance;
  EXPECT_LT(with, 0.9 * without);
}

TEST(Dataset, HundredTilesReproducible) {
  synth::SceneParams p;
  p.seed = 7;
  const auto a = fresh_dir("a"), b = fresh_dir("b");
  const auto sa = synth::generate_dataset(a, 100, p);
  synth::generate_dataset(b, 100, p);
  EXPECT_EQ(geo::list_tiles(a).size(), 100u);
  EXPECT_EQ(geo::list_tiles(a), geo::list_tiles(b));
  for (const char* f : {"grid.json", "suitable.json", "split.json", "scene_params.json"}) {
    EXPECT_EQ(io::read_text(a / f), io::read_text(b / f)) << f;
  }
  for (const auto& id : geo::list_tiles(a)) EXPECT_EQ(geo::read_bundle(a, id), geo::read_bundle(b, id));
  EXPECT_EQ(sa.split.train.size() + sa.split.validation.size(), sa.suitable);
  EXPECT_EQ(geo::read_split(a), sa.split);
  EXPECT_EQ(geo::read_grid(a).size(), 3840u);
}

TEST(Dataset, SingleTileAndOverwriteRules) {
  synth::SceneParams p;
  const auto dir = fresh_dir("single");
  synth::generate_dataset(dir, 1, p);
  const auto ids = geo::list_tiles(dir);
  ASSERT_EQ(ids.size(), 1u);
  EXPECT_NO_THROW(geo::read_bundle(dir, ids[0]));
  EXPECT_THROW(synth::generate_dataset(dir, 1, p), IOError);
  io::write_text(dir / "notes.txt", "keep me");
  EXPECT_NO_THROW(synth::generate_dataset(dir, 2, p, true));
  EXPECT_EQ(geo::list_tiles(dir).size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "notes.txt"));
  EXPECT_THROW(synth::generate_dataset(fresh_dir("zero"), 0, p), ConfigError);
}

TEST(Dataset, SmStandardizationUsesDatasetMax) {
  synth::SceneParams p;
  p.seed = 9;
  const auto dir = fresh_dir("smmax");
  const auto s = synth::generate_dataset(dir, 6, p);
  double seen = 0;
  for (const auto& id : geo::list_tiles(dir)) {
    const auto b = geo::read_bundle(dir, id);
    EXPECT_EQ(b.channel("sm").info.standardize_max, s.sm_max);
    for (float v : b.channel("sm").values) seen = std::max<double>(seen, v);
  }
  EXPECT_NEAR(seen, s.sm_max, 1e-6 * s.sm_max);
}

// ---- translate --------------------------------------------------------------

namespace {

model::Checkpoint small_checkpoint(model::Scenario scenario) {
  const auto cfg = model::ScenarioConfig::of(scenario);
  const auto specs = pipeline::default_specs(cfg.channel_count(), 64);
  return {scenario, 0, specs.generator, specs.discriminator,
          model::build_model<float>(specs.generator, specs.discriminator, 1)};
}

}  // namespace

TEST(Translate, ShapeRangeAndDeterminism) {
  const auto ckpt = small_checkpoint(model::Scenario::kRgbi);
  synth::SceneParams p;
  const auto stacked = geo::stack_scenario(synth::generate_scene(p, conus_cell(0)), model::ScenarioConfig::parse("rgbi"));
  const auto a = model::translate(ckpt, model::ScenarioConfig::parse("rgbi"), stacked.condition, 4);
  const auto b = model::translate(ckpt, model::ScenarioConfig::parse("rgbi"), stacked.condition, 4);
  EXPECT_EQ(a.standardized.shape(), (Shape{1, 64, 64}));
  EXPECT_EQ(a.standardized, b.standardized);
  EXPECT_EQ(a.radiance, b.radiance);
  for (std::size_t i = 0; i < a.radiance.size(); ++i) {
    EXPECT_GE(a.radiance[i], 0.0f);
    EXPECT_LE(a.radiance[i], 300.0f);
    EXPECT_NEAR(a.radiance[i], 150.0 * (a.standardized[i] + 1.0), 1e-3);
  }
}

TEST(Translate, ScenarioMismatchIsConfigError) {
  const auto ckpt = small_checkpoint(model::Scenario::kRgb);
  synth::SceneParams p;
  const auto stacked = geo::stack_scenario(synth::generate_scene(p, conus_cell(0)), model::ScenarioConfig::parse("rgbi"));
  EXPECT_THROW(model::translate(ckpt, model::ScenarioConfig::parse("rgbi"), stacked.condition, 0), ConfigError);
  EXPECT_THROW(model::translate(ckpt, model::ScenarioConfig::parse("rgb"), stacked.condition, 0), ShapeError);
}

TEST(Pipeline, DefaultSpecsFollowTileSize) {
  EXPECT_EQ(pipeline::default_specs(3, 256).generator.depth(), 8u);
  EXPECT_EQ(pipeline::default_specs(5, 64).generator.depth(), 6u);
  EXPECT_EQ(pipeline::default_specs(4, 32).generator.depth(), 5u);
  EXPECT_NO_THROW(pipeline::default_specs(4, 32).generator.validate());
  EXPECT_EQ(pipeline::default_specs(4, 64).discriminator.input_channels, 5u);
}
