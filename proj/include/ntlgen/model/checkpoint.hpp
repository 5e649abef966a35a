#pragma once

#include <filesystem>

#include "ntlgen/model/networks.hpp"
#include "ntlgen/model/scenario.hpp"

namespace ntlgen::model {

inline constexpr std::string_view kCheckpointMagic = "NTLGAN01";

struct Checkpoint {
  Scenario scenario = Scenario::kRgb;
  std::size_t step = 0;
  UNetSpec generator_spec;
  PatchGANSpec discriminator_spec;
  ModelParams<float> params;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);

// FormatError on a corrupt or truncated file; ConfigError when the stored
// tensors do not match the stored specs.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// As above, additionally requiring the stored specs to equal the given ones.
Checkpoint load_checkpoint(const std::filesystem::path& path, const UNetSpec& generator,
                           const PatchGANSpec& discriminator);

// Conversions used by checkpoints and run metadata.
std::string to_json_string(const UNetSpec& spec);
std::string to_json_string(const PatchGANSpec& spec);

}  // namespace ntlgen::model
