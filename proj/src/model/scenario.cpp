#include "ntlgen/model/scenario.hpp"

#include "ntlgen/error.hpp"

namespace ntlgen::model {

std::string scenario_name(Scenario id) {
  switch (id) {
    case Scenario::kRgb:
      return "rgb";
    case Scenario::kRgbi:
      return "rgbi";
    case Scenario::kRgbism:
      return "rgbism";
  }
  return "unknown";
}

ScenarioConfig ScenarioConfig::of(Scenario id) {
  switch (id) {
    case Scenario::kRgb:
      return {id, {"red", "green", "blue"}};
    case Scenario::kRgbi:
      return {id, {"red", "green", "blue", "nir"}};
    case Scenario::kRgbism:
      return {id, {"red", "green", "blue", "nir", "sm"}};
  }
  throw ConfigError("unknown scenario");
}

ScenarioConfig ScenarioConfig::parse(std::string_view name) {
  if (name == "rgb") return of(Scenario::kRgb);
  if (name == "rgbi") return of(Scenario::kRgbi);
  if (name == "rgbism") return of(Scenario::kRgbism);
  throw ConfigError("unknown scenario '" + std::string(name) + "' (expected rgb|rgbi|rgbism)");
}

std::string ScenarioConfig::name() const { return scenario_name(id); }

}  // namespace ntlgen::model
