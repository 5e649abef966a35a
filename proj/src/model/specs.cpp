#include "ntlgen/model/specs.hpp"

#include <algorithm>
#include <string>

#include "ntlgen/autodiff/ops.hpp"
#include "ntlgen/error.hpp"

namespace ntlgen::model {

UNetSpec UNetSpec::desk(std::size_t input_channels, std::size_t tile_size) {
  UNetSpec s;
  s.input_channels = input_channels;
  s.tile_size = tile_size;
  // Up to six levels, fewer when the tile does not halve that often.
  const std::vector<std::size_t> widths{32, 64, 128, 128, 128, 128};
  std::size_t depth = 0;
  for (std::size_t t = tile_size; t > 0 && t % 2 == 0 && depth < widths.size(); t /= 2) ++depth;
  s.encoder_widths.assign(widths.begin(), widths.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(depth, 2)));
  s.dropout_layers.clear();
  for (std::size_t j : {0, 1}) {
    if (j + 1 < s.depth()) s.dropout_layers.push_back(j);
  }
  return s;
}

std::size_t UNetSpec::decoder_output_channels(std::size_t j) const {
  if (j + 1 >= depth()) return output_channels;
  return encoder_widths[depth() - 2 - j];
}

std::size_t UNetSpec::decoder_input_channels(std::size_t j) const {
  if (j == 0) return encoder_widths.back();
  return decoder_output_channels(j - 1) + encoder_widths[skip_source(j)];
}

bool UNetSpec::decoder_has_dropout(std::size_t j) const {
  return std::find(dropout_layers.begin(), dropout_layers.end(), j) != dropout_layers.end();
}

void UNetSpec::validate() const {
  if (input_channels == 0 || output_channels == 0) throw ConfigError("unet: channel counts must be positive");
  if (depth() < 2) throw ConfigError("unet: at least two encoder layers are required");
  if (std::any_of(encoder_widths.begin(), encoder_widths.end(), [](std::size_t w) { return w == 0; })) {
    throw ConfigError("unet: encoder widths must be positive");
  }
  if (stride != 2 || kernel_size < stride || (kernel_size - stride) % 2 != 0) {
    throw ConfigError("unet: layers must halve/double exactly (stride 2, even kernel)");
  }
  for (std::size_t j : dropout_layers) {
    if (j + 1 >= depth()) throw ConfigError("unet: dropout layer index " + std::to_string(j) + " out of range");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("unet: dropout rate must lie in [0, 1)");
  const std::size_t factor = std::size_t{1} << depth();
  if (tile_size == 0 || tile_size % factor != 0) {
    throw ConfigError("unet: tile size " + std::to_string(tile_size) + " is not divisible by 2^" +
                      std::to_string(depth()));
  }
}

PatchGANSpec PatchGANSpec::for_condition(std::size_t condition_channels) {
  PatchGANSpec s;
  s.input_channels = condition_channels + 1;
  return s;
}

PatchGANSpec PatchGANSpec::desk(std::size_t condition_channels) {
  PatchGANSpec s = for_condition(condition_channels);
  s.widths = {32, 64, 128, 256, 1};
  return s;
}

void PatchGANSpec::validate() const {
  if (input_channels == 0) throw ConfigError("patchgan: input channels must be positive");
  if (widths.empty() || strides.size() != widths.size() || batch_norm.size() != widths.size()) {
    throw ConfigError("patchgan: widths, strides and batch_norm flags must have equal length");
  }
  if (batch_norm.front()) throw ConfigError("patchgan: the first layer carries no batch normalization");
  if (std::any_of(widths.begin(), widths.end(), [](std::size_t w) { return w == 0; }) ||
      std::any_of(strides.begin(), strides.end(), [](std::size_t s) { return s == 0; }) ||
      kernel_size == 0) {
    throw ConfigError("patchgan: widths, strides and kernel size must be positive");
  }
}

std::size_t receptive_field(const PatchGANSpec& spec) {
  std::size_t rf = 1, jump = 1;
  for (std::size_t s : spec.strides) {
    rf += (spec.kernel_size - 1) * jump;
    jump *= s;
  }
  return rf;
}

std::size_t patch_map_extent(const PatchGANSpec& spec, std::size_t input) {
  std::size_t extent = input;
  for (std::size_t s : spec.strides) extent = ad::conv_out_extent(extent, spec.kernel_size, s, spec.padding);
  return extent;
}

}  // namespace ntlgen::model
