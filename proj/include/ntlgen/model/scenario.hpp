#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ntlgen::model {

// Condition-channel sets compared in the scenario experiment.
enum class Scenario { kRgb, kRgbi, kRgbism };

struct ScenarioConfig {
  Scenario id = Scenario::kRgb;
  std::vector<std::string> channels;  // stacking order

  static ScenarioConfig of(Scenario id);
  // Accepts exactly "rgb", "rgbi", "rgbism"; ConfigError otherwise.
  static ScenarioConfig parse(std::string_view name);

  std::string name() const;
  std::size_t channel_count() const { return channels.size(); }
};

std::string scenario_name(Scenario id);

}  // namespace ntlgen::model
