#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "ntlgen/error.hpp"
#include "ntlgen/geo/bundle.hpp"
#include "ntlgen/geo/dataset.hpp"
#include "ntlgen/geo/preprocess.hpp"
#include "ntlgen/io/container.hpp"
#include "oracles.hpp"

using namespace ntlgen;
using namespace ntlgen::geo;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "ntlgen_geo_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<float> random_values(std::size_t n, std::uint64_t seed, float lo, float hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

TileBundle random_bundle(const std::string& id, std::size_t size, std::uint64_t seed) {
  TileBundle b{id, {30.0, 30.625, -100.0, -99.375}, size, size, {}};
  const std::size_t n = size * size;
  for (const char* name : {"red", "green", "blue", "nir"}) {
    b.channels.push_back({reflectance_info(name), random_values(n, seed++, 0.0f, 1.0f)});
  }
  b.channels.push_back({sm_info(4.0), random_values(n, seed++, 0.0f, 4.0f)});
  b.channels.push_back({night_info(), random_values(n, seed++, 0.0f, 300.0f)});
  return b;
}

std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("id" + std::to_string(i));
  return out;
}

}  // namespace

// ---- grid -----------------------------------------------------------------

TEST(PartitionGrid, ConusIs40By96) {
  const auto g = partition_grid(kConusBBox, kConusSpan);
  EXPECT_EQ(g.rows, 40u);
  EXPECT_EQ(g.cols, 96u);
  EXPECT_EQ(g.cells().size(), 3840u);
  EXPECT_EQ(g.cells().front().id, "r0c0");
  EXPECT_EQ(g.cells().back().id, "r39c95");
}

TEST(PartitionGrid, CellsTileTheBoxExactly) {
  const auto g = partition_grid(kConusBBox, kConusSpan);
  double area = 0;
  std::set<std::string> seen;
  for (const auto& c : g.cells()) {
    EXPECT_TRUE(seen.insert(c.id).second);
    area += c.bbox.height() * c.bbox.width();
    if (c.col + 1 < g.cols) EXPECT_EQ(c.bbox.lon_max, g.cell(c.row, c.col + 1).bbox.lon_min);
    if (c.row + 1 < g.rows) EXPECT_EQ(c.bbox.lat_min, g.cell(c.row + 1, c.col).bbox.lat_max);
  }
  EXPECT_NEAR(area, 25.0 * 60.0, 1e-9);
  EXPECT_EQ(g.cell(0, 0).bbox.lat_max, 49.0);
  EXPECT_EQ(g.cell(0, 0).bbox.lon_min, -125.0);
  EXPECT_EQ(g.cell(39, 95).bbox.lat_min, 24.0);
  EXPECT_EQ(g.cell(39, 95).bbox.lon_max, -65.0);
  EXPECT_FALSE(g.cell(3, 3).bbox.overlaps(g.cell(3, 4).bbox));
  EXPECT_EQ(g.find("r12c40")->bbox, g.cell(12, 40).bbox);
  EXPECT_FALSE(g.find("r40c0").has_value());
  EXPECT_FALSE(g.find("r1c1x").has_value());
}

TEST(PartitionGrid, SingleCellAndIndivisible) {
  EXPECT_EQ(partition_grid({0, 0.625, 0, 0.625}, 0.625).size(), 1u);
  EXPECT_THROW(partition_grid({0, 1, 0, 1}, 0.3), ConfigError);
  EXPECT_THROW(partition_grid({0, 1, 0, 1}, 0), ConfigError);
  EXPECT_THROW(partition_grid({1, 0, 0, 1}, 0.5), ConfigError);
}

// ---- preprocessing ----------------------------------------------------------------

TEST(CapRadiance, Examples) {
  CapStats stats;
  const std::vector<float> in{350.0f, 299.5f, -2.0f, 300.0f};
  EXPECT_EQ(cap_radiance(in, &stats), (std::vector<float>{300.0f, 299.5f, 0.0f, 300.0f}));
  EXPECT_EQ(stats.negatives, 1u);
  EXPECT_EQ(stats.capped, 1u);
  EXPECT_THROW(cap_radiance(std::vector<float>{NAN}), DataError);
}

TEST(CapRadiance, MatchesOracleBitwiseAndIsIdempotent) {
  const auto v = random_values(10000, 4, -50.0f, 600.0f);
  const auto once = cap_radiance(v);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(once[i], oracle::cap(v[i]));
  EXPECT_EQ(cap_radiance(once), once);
}

TEST(SmTransform, Examples) {
  EXPECT_EQ(sm_transform(std::vector<float>(25, 0.0f), 5, 5), std::vector<double>(25, 0.0));
  for (double v : sm_transform(std::vector<float>(20, 7.0f), 4, 5)) EXPECT_NEAR(v, std::log(8.0), 1e-15);

  std::vector<float> spike(25, 0.0f);
  spike[12] = static_cast<float>(std::numbers::e - 1.0);
  const auto out = sm_transform(spike, 5, 5);
  EXPECT_NEAR(out[12], std::log1p(static_cast<double>(spike[12])) / 9.0, 1e-15);
  EXPECT_NEAR(out[12], 1.0 / 9.0, 1e-8);
  EXPECT_EQ(out[0], 0.0);

  EXPECT_THROW(sm_transform(std::vector<float>{1.0f, -1.0f}, 1, 2), DataError);
  EXPECT_THROW(sm_transform(std::vector<float>{1.0f, 1.0f}, 1, 3), ShapeError);
}

TEST(SmTransform, MatchesOracleAndIsMonotone) {
  for (auto [h, w] : {std::pair{7u, 9u}, {1u, 5u}, {2u, 2u}, {16u, 16u}}) {
    auto counts = random_values(h * w, h * 31 + w, 0.0f, 50.0f);
    for (auto& c : counts) c = std::floor(c);
    const std::vector<double> as_double(counts.begin(), counts.end());
    const auto got = sm_transform(counts, h, w);
    const auto want = oracle::smoothed_log(as_double, h, w);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);

    auto bumped = counts;
    bumped[(h * w) / 2] += 3.0f;
    const auto higher = sm_transform(bumped, h, w);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_GE(higher[i], got[i]);
  }
}

TEST(SelectSuitable, InclusiveThresholdOnCappedSums) {
  std::map<std::string, std::vector<float>> cells;
  cells["a"] = {8500.0f / 2, 0, 0, 0};  // capped to 300
  cells["b"] = std::vector<float>(85, 100.0f);
  cells["c"] = {100.0f};
  cells["d"] = std::vector<float>(80, 100.0f);
  cells["e"] = std::vector<float>(28, 300.0f);
  cells["e"].push_back(-5.0f);
  EXPECT_EQ(select_suitable(cells, 8000.0), (std::vector<std::string>{"b", "d", "e"}));
  EXPECT_EQ(capped_total(cells["a"]), 300.0);
}

TEST(Resample, IdentityCopiesExactly) {
  GeoRaster src{4, 6, {10.0, 10.4, 20.0, 20.6}, random_values(24, 8, -3, 3)};
  EXPECT_EQ(resample_to_tile(src, src.bbox, 4, 6, Resample::kBilinear), src.values);
  EXPECT_EQ(resample_to_tile(src, src.bbox, 4, 6, Resample::kNearest), src.values);
}

TEST(Resample, ConstantAndMidpoint) {
  GeoRaster constant{3, 3, {0, 3, 0, 3}, std::vector<float>(9, 2.5f)};
  for (auto m : {Resample::kBilinear, Resample::kNearest}) {
    for (float v : resample_to_tile(constant, {0.5, 2.5, 0.2, 2.9}, 5, 7, m)) EXPECT_EQ(v, 2.5f);
  }
  GeoRaster ramp{2, 2, {0, 2, 0, 2}, {0, 1, 0, 1}};
  const auto mid = resample_to_tile(ramp, {0, 2, 0, 2}, 1, 1, Resample::kBilinear);
  EXPECT_FLOAT_EQ(mid[0], 0.5f);
  EXPECT_THROW(resample_to_tile(ramp, {5, 6, 5, 6}, 2, 2), DataError);
}

// ---- bundles and datasets ---------------------------------------------------------

TEST(TileIo, RoundTripIsBitwise) {
  const auto dir = fresh_dir("roundtrip");
  const auto b = random_bundle("r1c2", 8, 1);
  write_bundle(dir, b);
  EXPECT_EQ(read_bundle(dir, "r1c2"), b);
  EXPECT_EQ(list_tiles(dir), std::vector<std::string>{"r1c2"});
  EXPECT_THROW(read_bundle(dir, "r9c9"), DataError);
}

TEST(TileIo, WrongLengthIsFormatError) {
  const auto dir = fresh_dir("length");
  write_bundle(dir, random_bundle("r0c0", 8, 2));
  fs::resize_file(tile_dir(dir, "r0c0") / "nir.f32", 8 * 8 * 4 - 4);
  EXPECT_THROW(read_bundle(dir, "r0c0"), FormatError);
}

TEST(TileIo, ChecksumMismatchIsFormatError) {
  const auto dir = fresh_dir("crc");
  write_bundle(dir, random_bundle("r0c0", 8, 3));
  {
    std::fstream f(tile_dir(dir, "r0c0") / "red.f32", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(17);
    f.put('\x7f');
  }
  EXPECT_THROW(read_bundle(dir, "r0c0"), FormatError);
}

TEST(TileIo, ChannelSetMismatchIsFormatError) {
  const auto dir = fresh_dir("channels");
  write_bundle(dir, random_bundle("r0c0", 4, 4));
  io::write_f32(tile_dir(dir, "r0c0") / "extra.f32", std::vector<float>(16, 0.0f));
  EXPECT_THROW(read_bundle(dir, "r0c0"), FormatError);
  write_bundle(dir, random_bundle("r0c0", 4, 4));
  fs::remove(tile_dir(dir, "r0c0") / "sm.f32");
  EXPECT_THROW(read_bundle(dir, "r0c0"), FormatError);
}

TEST(TileBundle, ValidationRejectsBadChannels) {
  auto b = random_bundle("r0c0", 4, 5);
  b.channel("night").values[0] = 301.0f;
  EXPECT_THROW(b.validate(), DataError);
  b = random_bundle("r0c0", 4, 5);
  b.channel("sm").values.pop_back();
  EXPECT_THROW(b.validate(), ShapeError);
}

TEST(StackScenario, ChannelCountsOrderAndInverse) {
  auto b = random_bundle("r0c0", 8, 6);
  for (const auto& [name, count] : {std::pair{"rgb", 3u}, {"rgbi", 4u}, {"rgbism", 5u}}) {
    const auto scenario = model::ScenarioConfig::parse(name);
    const auto s = stack_scenario(b, scenario);
    EXPECT_EQ(s.condition.shape(), (Shape{count, 8, 8}));
    EXPECT_EQ(s.target.shape(), (Shape{1, 8, 8}));
    for (std::size_t c = 0; c < count; ++c) {
      const auto& ch = b.channel(scenario.channels[c]);
      for (std::size_t i = 0; i < 64; ++i) {
        const double back = ch.info.map().inverse(s.condition[c * 64 + i]);
        EXPECT_NEAR(back, ch.values[i], 1e-6 * std::max(1.0, std::fabs(static_cast<double>(ch.values[i]))));
      }
    }
  }
  b.channels.erase(b.channels.begin() + 4);  // drop sm
  EXPECT_THROW(stack_scenario(b, model::ScenarioConfig::parse("rgbism")), DataError);
  EXPECT_NO_THROW(stack_scenario(b, model::ScenarioConfig::parse("rgbi")));
}

TEST(SplitDataset, ThousandIdsEightHundredTwoHundred) {
  const auto a = split_dataset(ids(1000), 800, 200, 42);
  EXPECT_EQ(a.train.size(), 800u);
  EXPECT_EQ(a.validation.size(), 200u);
  std::set<std::string> all(a.train.begin(), a.train.end());
  all.insert(a.validation.begin(), a.validation.end());
  EXPECT_EQ(all.size(), 1000u);
  EXPECT_EQ(split_dataset(ids(1000), 800, 200, 42), a);
  auto reversed = ids(1000);
  std::reverse(reversed.begin(), reversed.end());
  EXPECT_EQ(split_dataset(reversed, 800, 200, 42), a);
  EXPECT_NE(split_dataset(ids(1000), 800, 200, 43).validation, a.validation);
}

TEST(SplitDataset, SmallAndInvalid) {
  const auto s = split_dataset({"x", "y"}, 1, 1, 0);
  EXPECT_EQ(s.train.size(), 1u);
  EXPECT_EQ(s.validation.size(), 1u);
  EXPECT_NE(s.train[0], s.validation[0]);
  EXPECT_THROW(split_dataset(ids(1000), 900, 200, 1), ConfigError);
  EXPECT_THROW(split_dataset({"x", "x"}, 1, 1, 1), ConfigError);
}

TEST(DatasetFiles, RoundTrip) {
  const auto dir = fresh_dir("files");
  const auto grid = partition_grid(kConusBBox, kConusSpan);
  write_grid(dir, grid);
  EXPECT_EQ(read_grid(dir), grid);
  write_suitable(dir, {"r0c1", "r2c2"}, 8000);
  EXPECT_EQ(read_suitable(dir), (std::vector<std::string>{"r0c1", "r2c2"}));
  const auto split = split_dataset(ids(10), 8, 2, 9);
  write_split(dir, split);
  EXPECT_EQ(read_split(dir), split);
  EXPECT_THROW(split_part(split, "test"), ConfigError);
  EXPECT_THROW(read_split(fresh_dir("nothing")), DataError);
}
