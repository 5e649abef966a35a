#include "ntlgen/model/translate.hpp"

#include <algorithm>

#include "ntlgen/error.hpp"
#include "ntlgen/metrics/metrics.hpp"

namespace ntlgen::model {

Translation translate(const Checkpoint& checkpoint, const ScenarioConfig& tile_scenario,
                      const Tensor<float>& condition, std::uint64_t seed) {
  if (tile_scenario.id != checkpoint.scenario) {
    throw ConfigError("checkpoint was trained for scenario " + scenario_name(checkpoint.scenario) +
                      " but the tiles are stacked as " + tile_scenario.name());
  }
  if (condition.rank() != 3) throw ShapeError("translate expects a C x H x W tile, got " + shape_str(condition.shape()));
  const Shape& s = condition.shape();
  const Tensor<float> batch({1, s[0], s[1], s[2]}, std::vector<float>(condition.data().begin(), condition.data().end()));
  const auto out = generate(checkpoint.generator_spec, checkpoint.params.generator, batch,
                            {ad::Mode::kEval, seed, {}}, &checkpoint.params.buffers);
  Translation t{Tensor<float>({1, s[1], s[2]}, std::vector<float>(out.data().begin(), out.data().end())), {}};
  const auto& map = metrics::kRadianceMap;
  t.radiance.reserve(out.size());
  for (float v : out.data()) {
    t.radiance.push_back(static_cast<float>(std::clamp(map.inverse(v), map.min, map.max)));
  }
  return t;
}

}  // namespace ntlgen::model
