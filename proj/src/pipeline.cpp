#include "ntlgen/pipeline.hpp"

#include <algorithm>
#include <cstdio>

#include "ntlgen/error.hpp"
#include "ntlgen/geo/bundle.hpp"
#include "ntlgen/geo/dataset.hpp"
#include "ntlgen/geo/raster_io.hpp"
#include "ntlgen/io/container.hpp"
#include "ntlgen/model/losses.hpp"
#include "ntlgen/model/translate.hpp"
#include "ntlgen/random.hpp"

namespace ntlgen::pipeline {

namespace fs = std::filesystem;

ModelSpecs default_specs(std::size_t condition_channels, std::size_t tile_size) {
  if (tile_size >= 256) {
    model::UNetSpec g;
    g.input_channels = condition_channels;
    g.tile_size = tile_size;
    return {g, model::PatchGANSpec::for_condition(condition_channels)};
  }
  return {model::UNetSpec::desk(condition_channels, tile_size), model::PatchGANSpec::desk(condition_channels)};
}

std::vector<model::Sample<float>> load_samples(const fs::path& dataset, const model::ScenarioConfig& scenario,
                                               const std::vector<std::string>& ids) {
  std::vector<model::Sample<float>> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto stacked = geo::stack_scenario(geo::read_bundle(dataset, id), scenario);
    Shape c = stacked.condition.shape(), t = stacked.target.shape();
    c.insert(c.begin(), 1);
    t.insert(t.begin(), 1);
    out.push_back({Tensor<float>(c, std::vector<float>(stacked.condition.data().begin(), stacked.condition.data().end())),
                   Tensor<float>(t, std::vector<float>(stacked.target.data().begin(), stacked.target.data().end()))});
  }
  return out;
}

std::string history_csv(const std::vector<model::StepMetrics>& history) {
  std::string out = "step,loss_d,loss_g_adv,loss_l1,loss_g_total\n";
  char line[160];
  for (const auto& m : history) {
    std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,%.9g,%.9g\n", m.step, m.loss_d, m.loss_g_adv, m.loss_l1,
                  m.loss_g_total);
    out += line;
  }
  return out;
}

TrainOutcome train_dataset(const fs::path& dataset, const model::ScenarioConfig& scenario,
                           const model::TrainConfig& config, const fs::path& out, const ModelSpecs* specs) {
  config.validate();
  const auto split = geo::read_split(dataset);
  if (split.train.empty()) throw ConfigError("dataset " + dataset.string() + " has no training tiles");
  const auto samples = load_samples(dataset, scenario, split.train);
  const std::size_t size = samples.front().condition.dim(2);
  const ModelSpecs chosen = specs ? *specs : default_specs(scenario.channel_count(), size);

  auto state = model::TrainerState<float>::create(chosen.generator, chosen.discriminator, config);
  auto snapshot = [&](const model::TrainerState<float>& s) {
    return model::Checkpoint{scenario.id, s.step, s.generator_spec, s.discriminator_spec, s.params};
  };
  const auto history = model::train<float>(state, samples, config, [&](const model::TrainerState<float>& s) {
    if (config.checkpoint_every > 0 && s.step % config.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "step_%08zu.ckpt", s.step);
      model::save_checkpoint(snapshot(s), out / "checkpoints" / name);
    }
  });
  TrainOutcome outcome{snapshot(state), history};
  model::save_checkpoint(outcome.checkpoint, out / "model.ckpt");
  io::write_text(out / "history.csv", history_csv(history));
  return outcome;
}

std::uint64_t tile_seed(std::uint64_t seed, const std::string& cell_id) { return mix_seed(seed, fnv1a64(cell_id)); }

std::vector<std::string> translate_split(const model::Checkpoint& checkpoint, const fs::path& dataset,
                                         const std::string& split, const fs::path& out, std::uint64_t seed) {
  const auto assignment = geo::read_split(dataset);
  const auto& ids = geo::split_part(assignment, split);
  const auto scenario = model::ScenarioConfig::of(checkpoint.scenario);
  for (const auto& id : ids) {
    const auto bundle = geo::read_bundle(dataset, id);
    const auto stacked = geo::stack_scenario(bundle, scenario);
    auto t = model::translate(checkpoint, scenario, stacked.condition, tile_seed(seed, id));
    geo::TileBundle pred{id, bundle.bbox, bundle.height, bundle.width, {}};
    pred.channels.push_back({geo::night_info(), std::move(t.radiance)});
    geo::write_bundle(out, pred);
  }
  return ids;
}

double mean_l1(const model::Checkpoint& checkpoint, const std::vector<model::Sample<float>>& samples,
               std::uint64_t seed) {
  if (samples.empty()) throw ConfigError("no samples to score");
  double total = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto out = model::generate(checkpoint.generator_spec, checkpoint.params.generator, samples[i].condition,
                                     {ad::Mode::kEval, mix_seed(seed, i), {}}, &checkpoint.params.buffers);
    total += model::loss_l1(out, samples[i].target);
  }
  return total / static_cast<double>(samples.size());
}

}  // namespace ntlgen::pipeline

namespace ntlgen::pipeline {

std::vector<std::string> ingest(const IngestSources& sources, const geo::GeoGrid& grid, std::size_t tile_size,
                                const fs::path& out) {
  if (tile_size == 0) throw ConfigError("tile size must be positive");
  std::vector<std::pair<std::string, geo::GeoRaster>> reflectance;
  for (const auto& [name, path] : sources.reflectance) {
    if (name != "red" && name != "green" && name != "blue" && name != "nir") {
      throw ConfigError("unknown reflectance channel '" + name + "'");
    }
    reflectance.emplace_back(name, geo::read_raster(path));
  }
  const geo::GeoRaster night = geo::read_raster(sources.night);
  std::optional<geo::GeoRaster> sm;
  if (sources.sm_counts) sm = geo::read_raster(*sources.sm_counts);

  std::vector<geo::GridCell> cells;
  for (const auto& cell : grid.cells()) {
    bool covered = night.bbox.overlaps(cell.bbox) && (!sm || sm->bbox.overlaps(cell.bbox));
    for (const auto& [name, r] : reflectance) covered = covered && r.bbox.overlaps(cell.bbox);
    if (covered) cells.push_back(cell);
  }
  if (cells.empty()) throw DataError("the source rasters jointly cover no grid cell");

  auto sm_field = [&](const geo::GridCell& cell) {
    const auto counts = geo::resample_to_tile(*sm, cell.bbox, tile_size, tile_size, geo::Resample::kNearest);
    return geo::sm_transform(counts, tile_size, tile_size);
  };
  double sm_max = 0.0;
  if (sm) {
    for (const auto& cell : cells) {
      for (double v : sm_field(cell)) sm_max = std::max(sm_max, v);
    }
  }
  if (!(sm_max > 0.0)) sm_max = 1.0;

  std::vector<std::string> ids;
  geo::CapStats stats;
  for (const auto& cell : cells) {
    geo::TileBundle b{cell.id, cell.bbox, tile_size, tile_size, {}};
    for (const auto& [name, r] : reflectance) {
      b.channels.push_back({geo::reflectance_info(name), geo::resample_to_tile(r, cell.bbox, tile_size, tile_size)});
    }
    if (sm) {
      const auto field = sm_field(cell);
      b.channels.push_back({geo::sm_info(sm_max), std::vector<float>(field.begin(), field.end())});
    }
    b.channels.push_back(
        {geo::night_info(), geo::cap_radiance(geo::resample_to_tile(night, cell.bbox, tile_size, tile_size), &stats)});
    geo::write_bundle(out, b);
    ids.push_back(cell.id);
  }
  if (stats.negatives > 0) {
    std::fprintf(stderr, "[ntlgen] warning: %zu negative radiance values raised to 0\n", stats.negatives);
  }
  geo::write_grid(out, grid);
  return ids;
}

}  // namespace ntlgen::pipeline
