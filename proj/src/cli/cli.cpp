#include "ntlgen/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <ostream>

#include "ntlgen/error.hpp"
#include "ntlgen/geo/bundle.hpp"
#include "ntlgen/geo/dataset.hpp"
#include "ntlgen/geo/preprocess.hpp"
#include "ntlgen/io/container.hpp"
#include "ntlgen/kernels/kernels.hpp"
#include "ntlgen/metrics/metrics.hpp"
#include "ntlgen/parallel.hpp"
#include "ntlgen/pipeline.hpp"
#include "ntlgen/synth/scene.hpp"

namespace ntlgen::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct SynthArgs {
  std::size_t n = 0;
  std::size_t size = 64;
  std::uint64_t seed = 0;
  std::string out;
  double sm_share = 0.3;
  std::size_t blobs = 4;
  double gain = 180.0;
  double noise = 0.02;
  bool overwrite = false;
};

struct GridArgs {
  std::vector<double> bbox{geo::kConusBBox.lat_min, geo::kConusBBox.lat_max, geo::kConusBBox.lon_min,
                           geo::kConusBBox.lon_max};
  double span = geo::kConusSpan;
  std::string out;
};

struct SelectArgs {
  std::string dataset;
  double threshold = geo::kSuitabilityThreshold;
};

struct SplitArgs {
  std::string dataset;
  std::size_t train = 800;
  std::size_t val = 200;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  std::string dataset;
  std::string scenario;
  std::size_t steps = 0;
  std::size_t epochs = 0;
  double lr = 2e-4;
  double lambda = 100.0;
  std::size_t batch_size = 1;
  std::size_t checkpoint_every = 0;
  std::uint64_t seed = 0;
  std::string out;
  bool overwrite = false;
};

struct TranslateArgs {
  std::string checkpoint;
  std::string dataset;
  std::string split = "validation";
  std::string out;
  std::uint64_t seed = 0;
  bool overwrite = false;
};

struct EvaluateArgs {
  std::string pred;
  std::string truth;
  std::string out;
  std::string scenario;
  bool overwrite = false;
};

struct IngestArgs {
  std::string out;
  std::string red, green, blue, nir, night, sm_counts;
  std::size_t size = 256;
  std::vector<double> bbox{geo::kConusBBox.lat_min, geo::kConusBBox.lat_max, geo::kConusBBox.lon_min,
                           geo::kConusBBox.lon_max};
  double span = geo::kConusSpan;
};

geo::BBox to_bbox(const std::vector<double>& v) { return {v.at(0), v.at(1), v.at(2), v.at(3)}; }

void log_config(std::ostream& err, const std::string& command, const ordered_json& config) {
  ordered_json env = {{"threads", max_threads()}, {"isa", kernels::isa_name(kernels::active_isa())}};
  err << "[ntlgen] " << command << " " << config.dump() << " " << env.dump() << "\n";
}

// Refuses a non-empty output directory unless overwriting, in which case
// only the entries this command writes are removed.
void prepare_output(const fs::path& dir, bool overwrite, std::initializer_list<const char*> owned) {
  if (fs::exists(dir) && !fs::is_directory(dir)) throw IOError(dir.string() + " exists and is not a directory");
  if (fs::is_directory(dir) && !fs::is_empty(dir)) {
    if (!overwrite) throw IOError(dir.string() + " is not empty (pass --overwrite to replace its outputs)");
    std::error_code ec;
    for (const char* entry : owned) fs::remove_all(dir / entry, ec);
  }
}

int do_synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
  synth::SceneParams p;
  p.tile_size = a.size;
  p.seed = a.seed;
  p.sm_signal_share = a.sm_share;
  p.blobs = a.blobs;
  p.night_gain = a.gain;
  p.noise = a.noise;
  p.validate();
  auto config = ordered_json::parse(synth::scene_params_json(p));
  config["n"] = a.n;
  config["out"] = a.out;
  log_config(err, "synth", config);
  const auto s = synth::generate_dataset(a.out, a.n, p, a.overwrite);
  out << ordered_json{{"tiles", s.tiles},
                      {"suitable", s.suitable},
                      {"threshold", s.threshold},
                      {"train", s.split.train.size()},
                      {"validation", s.split.validation.size()}}
             .dump()
      << "\n";
  return kOk;
}

int do_grid(const GridArgs& a, std::ostream& out, std::ostream& err) {
  log_config(err, "grid", {{"bbox", a.bbox}, {"span", a.span}, {"out", a.out}});
  const auto grid = geo::partition_grid(to_bbox(a.bbox), a.span);
  geo::write_grid(a.out, grid);
  out << ordered_json{{"rows", grid.rows}, {"cols", grid.cols}, {"cells", grid.size()}}.dump() << "\n";
  return kOk;
}

int do_select(const SelectArgs& a, std::ostream& out, std::ostream& err) {
  log_config(err, "select", {{"dataset", a.dataset}, {"threshold", a.threshold}});
  std::map<std::string, std::vector<float>> nights;
  for (const auto& id : geo::list_tiles(a.dataset)) nights[id] = geo::read_bundle(a.dataset, id).channel("night").values;
  if (nights.empty()) throw DataError("no tiles under " + a.dataset);
  const auto ids = geo::select_suitable(nights, a.threshold);
  geo::write_suitable(a.dataset, ids, a.threshold);
  out << ordered_json{{"tiles", nights.size()}, {"suitable", ids.size()}}.dump() << "\n";
  return kOk;
}

int do_split(const SplitArgs& a, std::ostream& out, std::ostream& err) {
  log_config(err, "split", {{"dataset", a.dataset}, {"train", a.train}, {"val", a.val}, {"seed", a.seed}});
  const auto split = geo::split_dataset(geo::read_suitable(a.dataset), a.train, a.val, a.seed);
  geo::write_split(a.dataset, split);
  out << ordered_json{{"train", split.train.size()}, {"validation", split.validation.size()}}.dump() << "\n";
  return kOk;
}

int do_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const auto scenario = model::ScenarioConfig::parse(a.scenario);
  if (a.steps > 0 && a.epochs > 0) throw ConfigError("pass either --steps or --epochs, not both");
  model::TrainConfig config;
  config.steps = a.steps;
  config.epochs = a.steps > 0 ? 0 : std::max<std::size_t>(a.epochs, 1);
  config.lambda = a.lambda;
  config.batch_size = a.batch_size;
  config.checkpoint_every = a.checkpoint_every;
  config.seed = a.seed;
  config.adam_g.lr = a.lr;
  config.adam_d.lr = a.lr;
  config.validate();
  log_config(err, "train",
             {{"dataset", a.dataset}, {"scenario", scenario.name()}, {"steps", config.steps}, {"epochs", config.epochs},
              {"batch_size", config.batch_size}, {"lr", a.lr}, {"beta1", config.adam_g.beta1},
              {"beta2", config.adam_g.beta2}, {"lambda", config.lambda}, {"seed", config.seed},
              {"checkpoint_every", config.checkpoint_every}, {"out", a.out}});
  prepare_output(a.out, a.overwrite, {"model.ckpt", "history.csv", "checkpoints"});
  const auto outcome = pipeline::train_dataset(a.dataset, scenario, config, a.out);
  const auto& last = outcome.history.back();
  out << ordered_json{{"steps", outcome.history.size()},
                      {"checkpoint", (fs::path(a.out) / "model.ckpt").string()},
                      {"final_loss_d", last.loss_d},
                      {"final_loss_l1", last.loss_l1}}
             .dump()
      << "\n";
  return kOk;
}

int do_translate(const TranslateArgs& a, std::ostream& out, std::ostream& err) {
  log_config(err, "translate",
             {{"checkpoint", a.checkpoint}, {"dataset", a.dataset}, {"split", a.split}, {"seed", a.seed}, {"out", a.out}});
  const auto checkpoint = model::load_checkpoint(a.checkpoint);
  prepare_output(a.out, a.overwrite, {"tiles", "translate.json"});
  const auto ids = pipeline::translate_split(checkpoint, a.dataset, a.split, a.out, a.seed);
  io::write_text(fs::path(a.out) / "translate.json",
                 ordered_json{{"scenario", model::scenario_name(checkpoint.scenario)},
                              {"checkpoint_step", checkpoint.step},
                              {"split", a.split},
                              {"seed", a.seed},
                              {"tiles", ids}}
                         .dump(2) +
                     "\n");
  out << ordered_json{{"tiles", ids.size()}, {"scenario", model::scenario_name(checkpoint.scenario)}}.dump() << "\n";
  return kOk;
}

int do_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  std::string scenario = a.scenario;
  const fs::path meta = fs::path(a.pred) / "translate.json";
  if (scenario.empty() && fs::is_regular_file(meta)) {
    scenario = nlohmann::json::parse(io::read_text(meta)).value("scenario", "");
  }
  log_config(err, "evaluate", {{"pred", a.pred}, {"truth", a.truth}, {"scenario", scenario}, {"out", a.out}});
  const auto report = metrics::evaluate_pairs(a.pred, a.truth, scenario);
  prepare_output(a.out, a.overwrite, {"metrics.csv", "summary.json"});
  metrics::write_report(report, a.out);
  out << metrics::report_summary_json(report);
  return kOk;
}

int do_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  pipeline::IngestSources sources;
  for (const auto& [name, path] : {std::pair{"red", &a.red}, {"green", &a.green}, {"blue", &a.blue}, {"nir", &a.nir}}) {
    if (!path->empty()) sources.reflectance[name] = *path;
  }
  sources.night = a.night;
  if (!a.sm_counts.empty()) sources.sm_counts = a.sm_counts;
  log_config(err, "ingest", {{"out", a.out}, {"size", a.size}, {"bbox", a.bbox}, {"span", a.span}});
  const auto grid = geo::partition_grid(to_bbox(a.bbox), a.span);
  const auto ids = pipeline::ingest(sources, grid, a.size, a.out);
  out << ordered_json{{"tiles", ids.size()}}.dump() << "\n";
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multispectral-to-nighttime image translation pipeline", "ntlgen"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic paired dataset");
  synth->add_option("--n", synth_args.n, "Number of tiles")->required()->check(CLI::PositiveNumber);
  synth->add_option("--size", synth_args.size, "Tile side in pixels")->capture_default_str();
  synth->add_option("--seed", synth_args.seed, "Random seed")->capture_default_str();
  synth->add_option("--out", synth_args.out, "Dataset directory")->required();
  synth->add_option("--sm-share", synth_args.sm_share, "Night signal share explained only by social media")
      ->capture_default_str();
  synth->add_option("--blobs", synth_args.blobs, "Maximum urban blobs per tile")->capture_default_str();
  synth->add_option("--gain", synth_args.gain, "Night radiance gain")->capture_default_str();
  synth->add_option("--noise", synth_args.noise, "Night noise sigma as a fraction of the gain")->capture_default_str();
  synth->add_flag("--overwrite", synth_args.overwrite, "Replace an existing dataset");

  GridArgs grid_args;
  auto* grid = app.add_subcommand("grid", "Partition a bounding box into grid cells");
  grid->add_option("--bbox", grid_args.bbox, "lat_min lat_max lon_min lon_max")->expected(4)->delimiter(',');
  grid->add_option("--span", grid_args.span, "Cell span in degrees")->capture_default_str();
  grid->add_option("--out", grid_args.out, "Dataset directory")->required();

  SelectArgs select_args;
  auto* select = app.add_subcommand("select", "Select tiles whose capped radiance total reaches a threshold");
  select->add_option("--dataset", select_args.dataset)->required()->check(CLI::ExistingDirectory);
  select->add_option("--threshold", select_args.threshold, "Radiance sum threshold")->capture_default_str();

  SplitArgs split_args;
  auto* split = app.add_subcommand("split", "Split suitable tiles into train and validation sets");
  split->add_option("--dataset", split_args.dataset)->required()->check(CLI::ExistingDirectory);
  split->add_option("--train", split_args.train)->capture_default_str();
  split->add_option("--val", split_args.val)->capture_default_str();
  split->add_option("--seed", split_args.seed)->capture_default_str();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train the generator/discriminator pair on one scenario");
  train->add_option("--dataset", train_args.dataset)->required()->check(CLI::ExistingDirectory);
  train->add_option("--scenario", train_args.scenario, "rgb, rgbi or rgbism")->required();
  auto* steps = train->add_option("--steps", train_args.steps, "Number of train steps");
  train->add_option("--epochs", train_args.epochs, "Number of passes over the training split")->excludes(steps);
  train->add_option("--lr", train_args.lr, "Adam learning rate")->capture_default_str();
  train->add_option("--lambda", train_args.lambda, "L1 weight")->capture_default_str();
  train->add_option("--batch-size", train_args.batch_size)->capture_default_str();
  train->add_option("--checkpoint-every", train_args.checkpoint_every, "Steps between checkpoints (0: final only)");
  train->add_option("--seed", train_args.seed)->capture_default_str();
  train->add_option("--out", train_args.out, "Run directory")->required();
  train->add_flag("--overwrite", train_args.overwrite, "Replace outputs of an earlier run");

  TranslateArgs translate_args;
  auto* translate = app.add_subcommand("translate", "Generate nighttime rasters for a split");
  translate->add_option("--checkpoint", translate_args.checkpoint)->required()->check(CLI::ExistingFile);
  translate->add_option("--dataset", translate_args.dataset)->required()->check(CLI::ExistingDirectory);
  translate->add_option("--split", translate_args.split)->capture_default_str();
  translate->add_option("--seed", translate_args.seed)->capture_default_str();
  translate->add_option("--out", translate_args.out)->required();
  translate->add_flag("--overwrite", translate_args.overwrite, "Replace earlier translations");

  EvaluateArgs evaluate_args;
  auto* evaluate = app.add_subcommand("evaluate", "Score generated rasters against ground truth");
  evaluate->add_option("--pred", evaluate_args.pred)->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--truth", evaluate_args.truth)->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--out", evaluate_args.out)->required();
  evaluate->add_option("--scenario", evaluate_args.scenario, "Label for the summary");
  evaluate->add_flag("--overwrite", evaluate_args.overwrite, "Replace an earlier report");

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Cut pre-exported flat rasters into tile bundles");
  ingest->add_option("--out", ingest_args.out)->required();
  for (auto [flag, target] : {std::pair{"--red", &ingest_args.red}, {"--green", &ingest_args.green},
                              {"--blue", &ingest_args.blue}, {"--nir", &ingest_args.nir},
                              {"--sm-counts", &ingest_args.sm_counts}}) {
    ingest->add_option(flag, *target)->check(CLI::ExistingFile);
  }
  ingest->add_option("--night", ingest_args.night)->required()->check(CLI::ExistingFile);
  ingest->add_option("--size", ingest_args.size)->capture_default_str();
  ingest->add_option("--bbox", ingest_args.bbox, "lat_min lat_max lon_min lon_max")->expected(4)->delimiter(',');
  ingest->add_option("--span", ingest_args.span)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    if (argc > 1 && argv[1][0] != '-' && app.get_subcommands([&](CLI::App* sub) { return sub->get_name() == argv[1]; }).empty()) {
      err << "error: unknown subcommand '" << argv[1] << "'\n" << app.help();
      return kUsageError;
    }
    err << "error: " << e.what() << "\n" << app.help();
    return kUsageError;
  }

  try {
    if (*synth) return do_synth(synth_args, out, err);
    if (*grid) return do_grid(grid_args, out, err);
    if (*select) return do_select(select_args, out, err);
    if (*split) return do_split(split_args, out, err);
    if (*train) return do_train(train_args, out, err);
    if (*translate) return do_translate(translate_args, out, err);
    if (*evaluate) return do_evaluate(evaluate_args, out, err);
    if (*ingest) return do_ingest(ingest_args, out, err);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kUsageError;
  } catch (const TrainingDivergedError& e) {
    err << "training diverged at step " << e.step() << ": " << e.what() << "\n";
    return kDomainError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kDomainError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON: " << e.what() << "\n";
    return kDomainError;
  }
  err << app.help();
  return kUsageError;
}

}  // namespace ntlgen::cli
