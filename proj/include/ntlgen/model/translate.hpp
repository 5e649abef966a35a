#pragma once

#include <cstdint>
#include <vector>

#include "ntlgen/model/checkpoint.hpp"

namespace ntlgen::model {

struct Translation {
  Tensor<float> standardized;  // 1 x H x W in (-1, 1)
  std::vector<float> radiance; // H x W in [0, 300]
};

// Eval-mode generator pass on one C x H x W condition tile. ConfigError
// when the tile scenario differs from the checkpoint's; ShapeError when the
// tile does not match the generator spec.
Translation translate(const Checkpoint& checkpoint, const ScenarioConfig& tile_scenario,
                      const Tensor<float>& condition, std::uint64_t seed);

}  // namespace ntlgen::model
