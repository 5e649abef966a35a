// Standalone acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.
//
//   ntlgen_acceptance [--steps N] [--work DIR]

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "ntlgen/autodiff/grad_check.hpp"
#include "ntlgen/autodiff/ops.hpp"
#include "ntlgen/cli.hpp"
#include "ntlgen/geo/dataset.hpp"
#include "ntlgen/geo/grid.hpp"
#include "ntlgen/geo/preprocess.hpp"
#include "ntlgen/io/container.hpp"
#include "ntlgen/metrics/metrics.hpp"
#include "ntlgen/model/checkpoint.hpp"
#include "ntlgen/model/losses.hpp"
#include "ntlgen/model/networks.hpp"
#include "ntlgen/model/trainer.hpp"
#include "ntlgen/pipeline.hpp"
#include "ntlgen/random.hpp"
#include "ntlgen/synth/scene.hpp"
#include "oracles.hpp"

using namespace ntlgen;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Collects failure notes for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  bool ok() const { return failures_.empty(); }
  std::string notes() const {
    std::string s;
    for (const auto& f : failures_) s += (s.empty() ? "" : "; ") + f;
    return s;
  }

 private:
  std::vector<std::string> failures_;
};

struct Options {
  std::size_t steps = 1000;
  fs::path work = fs::temp_directory_path() / "ntlgen_acceptance";
};

// ---- 1: gradients -----------------------------------------------------------

using ad::Tape;
using ad::Var;
using Op = ad::DiffOp<double>;

// Uniform values in [-1, 1] kept at least `gap` away from every kink.
Tensor<double> away_from(const Shape& shape, std::mt19937_64& rng, const std::vector<double>& kinks,
                         double gap = 0.05, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor<double> t(shape);
  for (auto& v : t.data()) {
    do v = d(rng);
    while (std::any_of(kinks.begin(), kinks.end(), [&](double k) { return std::fabs(v - k) < gap; }));
  }
  return t;
}

struct Primitive {
  std::string name;
  Op op;
  std::function<std::vector<Tensor<double>>(std::mt19937_64&)> point;
};

std::vector<Primitive> primitives() {
  auto smooth = [](std::vector<Shape> shapes) {
    return [shapes](std::mt19937_64& rng) {
      std::vector<Tensor<double>> in;
      for (const auto& s : shapes) in.push_back(oracle::random_tensor(s, rng));
      return in;
    };
  };
  auto kinked = [](Shape shape, std::vector<double> kinks) {
    return [shape, kinks](std::mt19937_64& rng) { return std::vector{away_from(shape, rng, kinks)}; };
  };
  auto act = [](ad::Activation a) {
    return Op([a](Tape<double>&, const std::vector<Var<double>>& in) { return ad::activation(in[0], a); });
  };
  const Shape x4{2, 3, 5, 5};
  return {
      {"conv2d",
       [](Tape<double>&, const std::vector<Var<double>>& in) {
         return ad::conv2d(in[0], in[1], std::optional(in[2]), {2, 1});
       },
       smooth({{2, 2, 6, 6}, {3, 2, 4, 4}, {3}})},
      {"conv_transpose2d",
       [](Tape<double>&, const std::vector<Var<double>>& in) {
         return ad::conv_transpose2d(in[0], in[1], std::optional(in[2]), {2, 1});
       },
       smooth({{2, 3, 3, 3}, {3, 2, 4, 4}, {2}})},
      {"batch_norm",
       [](Tape<double>&, const std::vector<Var<double>>& in) {
         return ad::batch_norm(in[0], in[1], in[2], {}, nullptr);
       },
       [](std::mt19937_64& rng) {
         return std::vector{oracle::random_tensor({2, 3, 3, 3}, rng), oracle::random_tensor({3}, rng, 0.5, 1.5),
                            oracle::random_tensor({3}, rng)};
       }},
      {"relu", act(ad::Activation::relu()), kinked(x4, {0.0})},
      {"leaky_relu", act(ad::Activation::leaky_relu(0.2)), kinked(x4, {0.0})},
      {"tanh", act(ad::Activation::tanh()), smooth({x4})},
      {"sigmoid", act(ad::Activation::sigmoid()), smooth({x4})},
      {"dropout",
       [](Tape<double>&, const std::vector<Var<double>>& in) { return ad::dropout(in[0], {0.5, 42, {}}); },
       smooth({x4})},
      {"concat_channels",
       [](Tape<double>&, const std::vector<Var<double>>& in) { return ad::concat_channels(in[0], in[1]); },
       smooth({{2, 2, 3, 3}, {2, 3, 3, 3}})},
      {"slice_channels",
       [](Tape<double>&, const std::vector<Var<double>>& in) { return ad::slice_channels(in[0], 1, 2); },
       smooth({x4})},
      {"add", [](Tape<double>&, const std::vector<Var<double>>& in) { return ad::add(in[0], in[1]); },
       smooth({x4, x4})},
      {"sub", [](Tape<double>&, const std::vector<Var<double>>& in) { return ad::sub(in[0], in[1]); },
       smooth({x4, x4})},
      {"mul", [](Tape<double>&, const std::vector<Var<double>>& in) { return ad::mul(in[0], in[1]); },
       smooth({x4, x4})},
      {"scale", [](Tape<double>&, const std::vector<Var<double>>& in) { return ad::scale(in[0], -1.7); },
       smooth({x4})},
      {"add_scalar", [](Tape<double>&, const std::vector<Var<double>>& in) { return ad::add_scalar(in[0], 0.3); },
       smooth({x4})},
      {"abs", [](Tape<double>&, const std::vector<Var<double>>& in) { return ad::abs(in[0]); }, kinked(x4, {0.0})},
      {"log", [](Tape<double>&, const std::vector<Var<double>>& in) { return ad::log(in[0]); },
       [](std::mt19937_64& rng) { return std::vector{oracle::random_tensor({2, 3, 5, 5}, rng, 0.2, 2.0)}; }},
      {"clamp", [](Tape<double>&, const std::vector<Var<double>>& in) { return ad::clamp(in[0], -0.5, 0.5); },
       kinked(x4, {-0.5, 0.5})},
      {"sum", [](Tape<double>&, const std::vector<Var<double>>& in) { return ad::sum(in[0]); }, smooth({x4})},
      {"mean", [](Tape<double>&, const std::vector<Var<double>>& in) { return ad::mean(in[0]); }, smooth({x4})},
  };
}

Check criterion_gradients() {
  Check c;
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_name;
  for (const auto& p : primitives()) {
    std::mt19937_64 rng(fnv1a64(p.name));
    for (int trial = 0; trial < 20; ++trial) {
      const auto rep = ad::grad_check<double>(p.op, p.point(rng), 1e-6, {}, 0x5eed + trial);
      if (rep.max_rel_error > worst) {
        worst = rep.max_rel_error;
        worst_name = p.name;
      }
      c.expect(rep.pass && rep.max_rel_error < 1e-6 && rep.kink_excluded == 0,
               p.name + " trial " + std::to_string(trial) + " rel " + std::to_string(rep.max_rel_error));
    }
  }
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 60.0, "runtime " + std::to_string(elapsed) + " s");
  std::cout << "  gradients: " << primitives().size() << " primitives x 20 points, worst rel error " << worst
            << " (" << worst_name << "), " << elapsed << " s\n";
  return c;
}

// ---- 2: metrics ---------------------------------------------------------------

metrics::StandardizedImage image(std::vector<double> values, std::size_t side) {
  return {side, side, std::move(values), metrics::kRadianceMap, metrics::Provenance::kGroundTruth};
}

Check criterion_metrics() {
  Check c;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0), gain(0.05, 0.5), shift(-0.4, 0.4);
  double worst = 0.0, worst_affine = 0.0;
  for (int pair = 0; pair < 100; ++pair) {
    std::vector<double> g(256), o(256);
    for (auto& v : g) v = u(rng);
    for (auto& v : o) v = u(rng);
    const auto gi = image(g, 16), oi = image(o, 16);
    worst = std::max({worst, std::fabs(metrics::d_eu(gi, oi) - oracle::euclidean(g, o)),
                      std::fabs(metrics::d_ma(gi, oi) - oracle::manhattan(g, o)),
                      std::fabs(metrics::r_ncc(gi, oi) - oracle::ncc(g, o))});
    const double a = gain(rng), b = shift(rng);
    std::vector<double> moved(o);
    for (auto& v : moved) v = a * v + b;
    worst_affine = std::max(worst_affine, std::fabs(metrics::r_ncc(gi, image(moved, 16)) - metrics::r_ncc(gi, oi)));
  }
  c.expect(worst <= 1e-10, "oracle gap " + std::to_string(worst));
  c.expect(worst_affine <= 1e-10, "affine gap " + std::to_string(worst_affine));
  std::cout << "  metrics: max oracle gap " << worst << ", max affine gap " << worst_affine << "\n";
  return c;
}

// ---- 3, 4, 5: architecture and losses -------------------------------------------

Check criterion_receptive_field() {
  Check c;
  const auto spec = model::PatchGANSpec::for_condition(3);
  const auto rf = model::receptive_field(spec);
  c.expect(rf == 70, "receptive field " + std::to_string(rf));
  c.expect(model::patch_map_extent(spec, 256) == 30, "patch map extent");
  const auto params = model::build_discriminator<float>(spec, 1);
  std::mt19937_64 rng(3);
  const auto cond = oracle::random_tensor({1, 3, 256, 256}, rng).cast<float>();
  const auto cand = oracle::random_tensor({1, 1, 256, 256}, rng).cast<float>();
  const auto map = model::discriminate(spec, params, cond, cand);
  c.expect(map.shape() == Shape{1, 1, 30, 30}, "discriminator map is not 30x30");
  std::cout << "  receptive field " << rf << ", map " << map.shape()[2] << "x" << map.shape()[3] << "\n";
  return c;
}

Check criterion_shapes() {
  Check c;
  std::mt19937_64 rng(4);
  for (std::size_t ch : {3u, 4u, 5u}) {
    for (std::size_t size : {256u, 64u}) {
      const auto spec = pipeline::default_specs(ch, size).generator;
      for (std::size_t j = 1; j < spec.depth(); ++j) {
        c.expect(spec.decoder_input_channels(j) ==
                     spec.decoder_output_channels(j - 1) + spec.encoder_widths[spec.skip_source(j)],
                 "skip channels C=" + std::to_string(ch) + " j=" + std::to_string(j));
      }
      const auto x = oracle::random_tensor({1, ch, size, size}, rng).cast<float>();
      const auto y = model::generate(spec, model::build_generator<float>(spec, ch), x, {});
      c.expect(y.shape() == Shape{1, 1, size, size},
               "output shape C=" + std::to_string(ch) + " size=" + std::to_string(size));
      std::cout << "  C=" << ch << " " << size << "x" << size << " depth " << spec.depth() << " -> "
                << y.shape()[2] << "x" << y.shape()[3] << "\n";
    }
  }
  return c;
}

Check criterion_losses() {
  Check c;
  const Tensor<double> half({1, 1, 30, 30}, 0.5);
  const double ld = model::loss_discriminator(half, half);
  const double lt = model::loss_generator_total(std::numbers::ln2, 0.01, 100.0);
  c.expect(std::fabs(ld - 2.0 * std::numbers::ln2) <= 1e-9, "loss_d " + std::to_string(ld));
  c.expect(std::fabs(lt - (std::numbers::ln2 + 1.0)) <= 1e-9, "loss_g_total " + std::to_string(lt));
  std::cout << "  loss_d(0.5, 0.5) = " << ld << ", loss_g_total(ln 2, 0.01, 100) = " << lt << "\n";
  return c;
}

// ---- 6, 7: training -----------------------------------------------------------

struct ScenarioRun {
  double l1_before = 0, l1_after = 0, seconds = 0;
  metrics::MetricReport report;
};

std::map<std::string, ScenarioRun> train_scenarios(const Options& opt, const fs::path& dataset) {
  std::map<std::string, ScenarioRun> runs;
  for (const char* name : {"rgb", "rgbi", "rgbism"}) {
    const auto scenario = model::ScenarioConfig::parse(name);
    const auto ids = geo::read_split(dataset).validation;
    const auto held_out = pipeline::load_samples(dataset, scenario, ids);
    model::TrainConfig config;
    config.steps = opt.steps;
    config.seed = 1;
    const auto specs = pipeline::default_specs(scenario.channel_count(), 64);
    const auto untrained = model::TrainerState<float>::create(specs.generator, specs.discriminator, config);
    const model::Checkpoint before{scenario.id, 0, specs.generator, specs.discriminator, untrained.params};

    ScenarioRun r;
    r.l1_before = pipeline::mean_l1(before, held_out, 0);
    const auto run_dir = opt.work / "runs" / name;
    fs::remove_all(run_dir);
    const auto t0 = Clock::now();
    const auto outcome = pipeline::train_dataset(dataset, scenario, config, run_dir, &specs);
    r.seconds = seconds_since(t0);
    r.l1_after = pipeline::mean_l1(outcome.checkpoint, held_out, 0);
    const auto pred = opt.work / "pred" / name;
    fs::remove_all(pred);
    pipeline::translate_split(outcome.checkpoint, dataset, "validation", pred, 0);
    r.report = metrics::evaluate_pairs(pred, dataset, name);
    std::cout << "  " << name << ": held-out L1 " << r.l1_before << " -> " << r.l1_after << ", d_eu "
              << r.report.mean_d_eu << ", d_ma " << r.report.mean_d_ma << ", r_ncc " << r.report.mean_r_ncc << " ("
              << opt.steps << " steps, " << r.seconds << " s)\n";
    runs[name] = std::move(r);
  }
  return runs;
}

Check criterion_training(const Options& opt, const std::map<std::string, ScenarioRun>& runs) {
  Check c;
  c.expect(opt.steps <= 2000, "more than 2000 steps");
  for (const auto& [name, r] : runs) {
    const double drop = 1.0 - r.l1_after / r.l1_before;
    c.expect(drop >= 0.5, name + " L1 drop " + std::to_string(drop));
    c.expect(r.report.mean_r_ncc >= 0.5, name + " r_ncc " + std::to_string(r.report.mean_r_ncc));
    c.expect(r.seconds <= 1800.0, name + " runtime " + std::to_string(r.seconds));
  }
  return c;
}

Check criterion_ordering(const std::map<std::string, ScenarioRun>& runs) {
  Check c;
  const auto& rgb = runs.at("rgb").report;
  const auto& rgbi = runs.at("rgbi").report;
  const auto& rgbism = runs.at("rgbism").report;
  c.expect(rgbism.mean_d_eu < rgbi.mean_d_eu && rgbi.mean_d_eu < rgb.mean_d_eu, "d_eu ordering");
  c.expect(rgbism.mean_r_ncc > rgbi.mean_r_ncc && rgbi.mean_r_ncc > rgb.mean_r_ncc, "r_ncc ordering");
  return c;
}

// ---- 8: pipeline exactness --------------------------------------------------------

Check criterion_pipeline() {
  Check c;
  const auto grid = geo::partition_grid(geo::kConusBBox, geo::kConusSpan);
  c.expect(grid.size() == 3840 && grid.rows == 40 && grid.cols == 96, "grid is not 40x96");

  std::vector<std::string> ids;
  for (std::size_t i = 0; i < 1000; ++i) ids.push_back(grid.cells()[i].id);
  const auto a = geo::split_dataset(ids, 800, 200, 17);
  const auto b = geo::split_dataset(ids, 800, 200, 17);
  const auto other = geo::split_dataset(ids, 800, 200, 18);
  c.expect(a.train.size() == 800 && a.validation.size() == 200, "split sizes");
  c.expect(a == b, "split not deterministic");
  c.expect(a.train != other.train, "split ignores seed");

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> radiance(-50.0f, 600.0f);
  std::poisson_distribution<int> counts(3.0);
  std::size_t cap_mismatch = 0;
  double sm_gap = 0.0;
  for (int tile = 0; tile < 20; ++tile) {
    std::vector<float> night(64 * 64), sm(64 * 64);
    for (auto& v : night) v = radiance(rng);
    for (auto& v : sm) v = static_cast<float>(counts(rng));
    const auto capped = geo::cap_radiance(night);
    for (std::size_t i = 0; i < night.size(); ++i)
      if (std::bit_cast<std::uint32_t>(capped[i]) != std::bit_cast<std::uint32_t>(oracle::cap(night[i])))
        ++cap_mismatch;
    const auto field = geo::sm_transform(sm, 64, 64);
    const auto expect = oracle::smoothed_log({sm.begin(), sm.end()}, 64, 64);
    for (std::size_t i = 0; i < field.size(); ++i) sm_gap = std::max(sm_gap, std::fabs(field[i] - expect[i]));
  }
  c.expect(cap_mismatch == 0, std::to_string(cap_mismatch) + " capped values differ");
  c.expect(sm_gap <= 1e-12, "sm gap " + std::to_string(sm_gap));
  std::cout << "  grid " << grid.rows << "x" << grid.cols << ", split " << a.train.size() << "/"
            << a.validation.size() << ", cap mismatches " << cap_mismatch << ", sm gap " << sm_gap << "\n";
  return c;
}

// ---- 9: determinism ---------------------------------------------------------------

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ntlgen");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::cout << err.str();
  return code;
}

bool full_run(const fs::path& root) {
  fs::remove_all(root);
  const auto data = (root / "data").string(), run = (root / "run").string(), pred = (root / "pred").string(),
             rep = (root / "report").string();
  return cli({"synth", "--n", "16", "--seed", "21", "--out", data}) == 0 &&
         cli({"train", "--dataset", data, "--scenario", "rgbism", "--steps", "12", "--checkpoint-every", "5",
              "--seed", "3", "--out", run}) == 0 &&
         cli({"translate", "--checkpoint", run + "/model.ckpt", "--dataset", data, "--seed", "9", "--out", pred}) ==
             0 &&
         cli({"evaluate", "--pred", pred, "--truth", data, "--out", rep}) == 0;
}

Check criterion_determinism(const Options& opt) {
  Check c;
  ::setenv("NTLGEN_THREADS", "1", 1);
  const auto a = opt.work / "det_a", b = opt.work / "det_b";
  c.expect(full_run(a), "first run failed");
  c.expect(full_run(b), "second run failed");
  std::size_t compared = 0;
  for (const auto& sub : {"run", "pred", "report"}) {
    for (const auto& entry : fs::recursive_directory_iterator(a / sub)) {
      if (!entry.is_regular_file()) continue;
      const auto rel = fs::relative(entry.path(), a);
      if (!fs::exists(b / rel)) {
        c.expect(false, "missing " + rel.string());
        continue;
      }
      ++compared;
      c.expect(io::read_text(entry.path()) == io::read_text(b / rel), "differs: " + rel.string());
    }
  }
  c.expect(compared > 0, "nothing compared");
  ::unsetenv("NTLGEN_THREADS");
  std::cout << "  compared " << compared << " files across two runs\n";
  return c;
}

Options parse(int argc, char** argv) {
  Options o;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--steps") o.steps = std::stoul(argv[i + 1]);
    else if (flag == "--work") o.work = argv[i + 1];
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const auto opt = parse(argc, argv);
  fs::create_directories(opt.work);
  std::vector<std::pair<std::string, bool>> results;
  auto report = [&](int id, const std::string& title, const std::function<Check()>& body) {
    Check c;
    try {
      c = body();
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    std::cout << (c.ok() ? "PASS" : "FAIL") << " " << id << " " << title;
    if (!c.ok()) std::cout << " [" << c.notes() << "]";
    std::cout << std::endl;
    results.emplace_back(title, c.ok());
  };

  report(1, "gradient suite", criterion_gradients);
  report(2, "metric oracle equivalence", criterion_metrics);
  report(3, "receptive field", criterion_receptive_field);
  report(4, "shape invariants", criterion_shapes);
  report(5, "loss values", criterion_losses);

  std::map<std::string, ScenarioRun> runs;
  std::string train_error;
  try {
    const auto dataset = opt.work / "synthetic";
    synth::SceneParams params;
    params.seed = 7;
    params.sm_signal_share = 0.3;
    synth::generate_dataset(dataset, 100, params, true);
    runs = train_scenarios(opt, dataset);
  } catch (const std::exception& e) {
    train_error = e.what();
  }
  auto needs_runs = [&](auto fn) {
    return [&, fn] {
      if (!train_error.empty()) throw std::runtime_error(train_error);
      return fn();
    };
  };
  report(6, "desk-scale training", needs_runs([&] { return criterion_training(opt, runs); }));
  report(7, "scenario ordering", needs_runs([&] { return criterion_ordering(runs); }));
  report(8, "pipeline exactness", criterion_pipeline);
  report(9, "determinism", [&] { return criterion_determinism(opt); });

  const auto passed = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.second; });
  std::cout << passed << "/" << results.size() << " criteria passed" << std::endl;
  return passed == static_cast<long>(results.size()) ? 0 : 1;
}
