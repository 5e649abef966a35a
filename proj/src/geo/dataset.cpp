#include "ntlgen/geo/dataset.hpp"

#include <algorithm>
#include <json.hpp>
#include <random>

#include "ntlgen/error.hpp"
#include "ntlgen/io/container.hpp"

namespace ntlgen::geo {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

ordered_json read_json(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw DataError("missing " + path.string());
  try {
    return ordered_json::parse(io::read_text(path));
  } catch (const ordered_json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

template <class F>
auto parse_fields(const fs::path& path, F&& f) {
  const auto j = read_json(path);
  try {
    return f(j);
  } catch (const ordered_json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const ordered_json& j) { io::write_text(path, j.dump(2) + "\n"); }

}  // namespace

SplitAssignment split_dataset(std::vector<std::string> ids, std::size_t train_count, std::size_t val_count,
                              std::uint64_t seed) {
  if (train_count + val_count != ids.size()) {
    throw ConfigError("split " + std::to_string(train_count) + "/" + std::to_string(val_count) + " does not cover " +
                      std::to_string(ids.size()) + " ids");
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw ConfigError("split ids contain duplicates");
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  SplitAssignment s{seed, {ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(train_count)},
                    {ids.begin() + static_cast<std::ptrdiff_t>(train_count), ids.end()}};
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  return s;
}

void write_grid(const fs::path& dataset, const GeoGrid& g) {
  write_json(dataset / "grid.json", {{"bbox",
                                      {{"lat_min", g.bbox.lat_min},
                                       {"lat_max", g.bbox.lat_max},
                                       {"lon_min", g.bbox.lon_min},
                                       {"lon_max", g.bbox.lon_max}}},
                                     {"span", g.span},
                                     {"rows", g.rows},
                                     {"cols", g.cols}});
}

GeoGrid read_grid(const fs::path& dataset) {
  const auto path = dataset / "grid.json";
  const GeoGrid stored = parse_fields(path, [](const ordered_json& j) {
    const auto& b = j.at("bbox");
    return GeoGrid{{b.at("lat_min").get<double>(), b.at("lat_max").get<double>(), b.at("lon_min").get<double>(),
                    b.at("lon_max").get<double>()},
                   j.at("span").get<double>(),
                   j.at("rows").get<std::size_t>(),
                   j.at("cols").get<std::size_t>()};
  });
  const GeoGrid rebuilt = partition_grid(stored.bbox, stored.span);
  if (rebuilt.rows != stored.rows || rebuilt.cols != stored.cols) {
    throw FormatError(path.string() + ": rows/cols disagree with bbox and span");
  }
  return stored;
}

void write_suitable(const fs::path& dataset, const std::vector<std::string>& ids, double threshold) {
  write_json(dataset / "suitable.json", {{"threshold", threshold}, {"ids", ids}});
}

std::vector<std::string> read_suitable(const fs::path& dataset) {
  return parse_fields(dataset / "suitable.json",
                      [](const ordered_json& j) { return j.at("ids").get<std::vector<std::string>>(); });
}

void write_split(const fs::path& dataset, const SplitAssignment& split) {
  ordered_json assignments = ordered_json::object();
  std::vector<std::pair<std::string, const char*>> all;
  for (const auto& id : split.train) all.emplace_back(id, "train");
  for (const auto& id : split.validation) all.emplace_back(id, "validation");
  std::sort(all.begin(), all.end());
  for (const auto& [id, part] : all) assignments[id] = part;
  write_json(dataset / "split.json", {{"seed", split.seed},
                                      {"train_count", split.train.size()},
                                      {"validation_count", split.validation.size()},
                                      {"assignments", std::move(assignments)}});
}

SplitAssignment read_split(const fs::path& dataset) {
  const auto path = dataset / "split.json";
  return parse_fields(path, [&](const ordered_json& j) {
    SplitAssignment s;
    j.at("seed").get_to(s.seed);
    for (const auto& [id, part] : j.at("assignments").items()) {
      const auto p = part.get<std::string>();
      if (p == "train") {
        s.train.push_back(id);
      } else if (p == "validation") {
        s.validation.push_back(id);
      } else {
        throw FormatError(path.string() + ": unknown assignment '" + p + "' for " + id);
      }
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.validation.begin(), s.validation.end());
    return s;
  });
}

const std::vector<std::string>& split_part(const SplitAssignment& split, const std::string& name) {
  if (name == "train") return split.train;
  if (name == "validation") return split.validation;
  throw ConfigError("unknown split '" + name + "' (expected train or validation)");
}

}  // namespace ntlgen::geo
