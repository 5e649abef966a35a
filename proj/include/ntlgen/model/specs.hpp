#pragma once

#include <cstddef>
#include <vector>

namespace ntlgen::model {

// Statistics the batch-norm layers use outside of training. kBatch keeps
// per-instance statistics at inference, as the reference image-translation
// setup does; kRunning switches to the accumulated running moments.
enum class InferenceNorm { kBatch, kRunning };

// Encoder-decoder generator with skip connections. Encoder layer i halves the
// spatial size; decoder layer j (j = 0 innermost) doubles it and, for j > 0,
// consumes concat(decoder j-1 output, encoder depth-1-j output).
struct UNetSpec {
  std::size_t input_channels = 3;
  std::size_t output_channels = 1;
  std::size_t tile_size = 256;
  std::vector<std::size_t> encoder_widths{64, 128, 256, 512, 512, 512, 512, 512};
  std::vector<std::size_t> dropout_layers{0, 1, 2};  // decoder indices
  double dropout_rate = 0.5;
  std::size_t kernel_size = 4;
  std::size_t stride = 2;
  double leaky_slope = 0.2;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;
  InferenceNorm inference_norm = InferenceNorm::kBatch;

  // Reduced-width configuration for desk-scale tiles: six levels at 64x64,
  // fewer when the tile cannot be halved six times.
  static UNetSpec desk(std::size_t input_channels, std::size_t tile_size = 64);

  std::size_t depth() const { return encoder_widths.size(); }
  std::size_t total_layers() const { return 2 * depth(); }
  std::size_t padding() const { return (kernel_size - stride) / 2; }
  std::size_t decoder_output_channels(std::size_t j) const;
  std::size_t decoder_input_channels(std::size_t j) const;
  // Encoder layer feeding the skip junction of decoder layer j (j >= 1).
  std::size_t skip_source(std::size_t j) const { return depth() - 1 - j; }
  bool encoder_has_norm(std::size_t i) const { return i > 0 && i + 1 < depth(); }
  bool decoder_has_norm(std::size_t j) const { return j + 1 < depth(); }
  bool decoder_has_dropout(std::size_t j) const;

  // ConfigError on invalid layouts or a tile size not divisible by 2^depth.
  void validate() const;

  friend bool operator==(const UNetSpec&, const UNetSpec&) = default;
};

// Convolutional discriminator scoring overlapping patches of the
// (condition, candidate) pair. Layer l has `widths[l]` outputs (the last
// entry is the one-channel head), stride `strides[l]` and optional batch norm.
struct PatchGANSpec {
  std::size_t input_channels = 4;
  std::vector<std::size_t> widths{64, 128, 256, 512, 1};
  std::vector<std::size_t> strides{2, 2, 2, 1, 1};
  std::vector<bool> batch_norm{false, true, true, true, false};
  std::size_t kernel_size = 4;
  std::size_t padding = 1;
  double leaky_slope = 0.2;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;
  InferenceNorm inference_norm = InferenceNorm::kBatch;

  // Default layout for `condition_channels` plus the one target channel.
  static PatchGANSpec for_condition(std::size_t condition_channels);
  static PatchGANSpec desk(std::size_t condition_channels);

  std::size_t layers() const { return widths.size(); }
  void validate() const;

  friend bool operator==(const PatchGANSpec&, const PatchGANSpec&) = default;
};

// Pixels per side seen by one output unit: rf += (k - 1) * prod(previous strides).
std::size_t receptive_field(const PatchGANSpec& spec);

// Patch-map side length for a square input of side `input`.
std::size_t patch_map_extent(const PatchGANSpec& spec, std::size_t input);

}  // namespace ntlgen::model
