#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ntlgen/autodiff/adam.hpp"
#include "ntlgen/autodiff/ops.hpp"
#include "ntlgen/model/specs.hpp"
#include "ntlgen/random.hpp"

namespace ntlgen::model {

using ad::NamedTensors;

// Generator and discriminator parameters plus batch-norm running moments.
// Names: "g.enc{i}.*", "g.dec{j}.*", "d.conv{l}.*"; buffers end in
// ".running_mean" / ".running_var".
template <std::floating_point T>
struct ModelParams {
  NamedTensors<T> generator;
  NamedTensors<T> discriminator;
  NamedTensors<T> buffers;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Conv weights ~ N(0, 0.02), batch-norm scales ~ N(1, 0.02), shifts and
// biases 0. Deterministic per seed.
template <std::floating_point T>
NamedTensors<T> build_generator(const UNetSpec& spec, std::uint64_t seed);

template <std::floating_point T>
NamedTensors<T> build_discriminator(const PatchGANSpec& spec, std::uint64_t seed);

template <std::floating_point T>
ModelParams<T> build_model(const UNetSpec& unet, const PatchGANSpec& patch, std::uint64_t seed);

// Registers a parameter set on a tape, as variables when `trainable`.
template <std::floating_point T>
class BoundParams {
 public:
  BoundParams(ad::Tape<T>& tape, const NamedTensors<T>& params, bool trainable);

  const ad::Var<T>& at(const std::string& name) const;
  bool contains(const std::string& name) const { return vars_.count(name) != 0; }
  // Gradients after tape.backward(); parameters no gradient reached get zeros.
  NamedTensors<T> gradients() const;

 private:
  std::map<std::string, ad::Var<T>> vars_;
};

struct ForwardOptions {
  ad::Mode mode = ad::Mode::kTrain;
  std::uint64_t seed = 0;                 // dropout noise
  std::vector<std::size_t> zeroed_skips;  // encoder indices whose skip is replaced by zeros
};

// Condition N x C x S x S -> N x output_channels x S x S in (-1, 1).
// Running moments in `buffers` are updated in train mode when non-null.
template <std::floating_point T>
ad::Var<T> generator_forward(const UNetSpec& spec, const BoundParams<T>& params,
                             const ad::Var<T>& condition, const ForwardOptions& options,
                             NamedTensors<T>* buffers);

// Patch map N x 1 x h x w of probabilities for concat(condition, candidate).
template <std::floating_point T>
ad::Var<T> discriminator_forward(const PatchGANSpec& spec, const BoundParams<T>& params,
                                 const ad::Var<T>& condition, const ad::Var<T>& candidate,
                                 ad::Mode mode, NamedTensors<T>* buffers);

// Gradient-free conveniences.
template <std::floating_point T>
Tensor<T> generate(const UNetSpec& spec, const NamedTensors<T>& params, const Tensor<T>& condition,
                   const ForwardOptions& options, const NamedTensors<T>* buffers = nullptr);

template <std::floating_point T>
Tensor<T> discriminate(const PatchGANSpec& spec, const NamedTensors<T>& params,
                       const Tensor<T>& condition, const Tensor<T>& candidate,
                       const NamedTensors<T>* buffers = nullptr);

}  // namespace ntlgen::model
