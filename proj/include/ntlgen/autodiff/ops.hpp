#pragma once

#include <cstdint>
#include <optional>
#include <type_traits>

#include "ntlgen/autodiff/tape.hpp"

namespace ntlgen::ad {

// Which statistics a layer normalizes with and whether it mutates state.
enum class Mode { kTrain, kEval };

struct ConvParams {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

// Cross-correlation (no kernel flip). input N x Cin x H x W, kernel
// Cout x Cin x kh x kw, optional bias of length Cout.
template <std::floating_point T>
Var<T> conv2d(const Var<T>& input, const Var<T>& kernel, const std::type_identity_t<std::optional<Var<T>>>& bias,
              ConvParams params);

// Adjoint of conv2d with respect to its input. kernel is Cin x Cout x kh x kw;
// output spatial size (H - 1) * stride - 2 * padding + kh.
template <std::floating_point T>
Var<T> conv_transpose2d(const Var<T>& input, const Var<T>& kernel,
                        const std::type_identity_t<std::optional<Var<T>>>& bias, ConvParams params);

template <std::floating_point T>
struct RunningStats {
  Tensor<T> mean;
  Tensor<T> var;
};

struct BatchNormParams {
  double eps = 1e-5;
  double momentum = 0.1;
  Mode mode = Mode::kTrain;
};

// Train mode normalizes each channel by its batch mean and biased variance
// and, when `stats` is given, folds the batch moments into it (unbiased
// variance, exponential momentum). Eval mode normalizes with `stats`.
template <std::floating_point T>
Var<T> batch_norm(const Var<T>& input, const Var<T>& gamma, const Var<T>& beta,
                  const BatchNormParams& params, std::type_identity_t<RunningStats<T>>* stats);

enum class ActivationKind { kRelu, kLeakyRelu, kTanh, kSigmoid };

struct Activation {
  ActivationKind kind = ActivationKind::kRelu;
  double slope = 0.2;  // leaky_relu only

  static Activation relu() { return {ActivationKind::kRelu, 0.0}; }
  static Activation leaky_relu(double slope) { return {ActivationKind::kLeakyRelu, slope}; }
  static Activation tanh() { return {ActivationKind::kTanh, 0.0}; }
  static Activation sigmoid() { return {ActivationKind::kSigmoid, 0.0}; }
};

// The derivative at a ReLU kink (x == 0) is taken as 0.
template <std::floating_point T>
Var<T> activation(const Var<T>& input, Activation act);

struct DropoutParams {
  double rate = 0.5;
  std::uint64_t seed = 0;
  // Both modes apply the mask: dropout is the generator's noise source.
  Mode mode = Mode::kTrain;
};

template <std::floating_point T>
Var<T> dropout(const Var<T>& input, const DropoutParams& params);

template <std::floating_point T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b);

template <std::floating_point T>
Var<T> slice_channels(const Var<T>& input, std::size_t begin, std::size_t count);

// Elementwise arithmetic; binary ops require equal shapes.
template <std::floating_point T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <std::floating_point T>
Var<T> sub(const Var<T>& a, const Var<T>& b);
template <std::floating_point T>
Var<T> mul(const Var<T>& a, const Var<T>& b);
template <std::floating_point T>
Var<T> scale(const Var<T>& a, std::type_identity_t<T> factor);
template <std::floating_point T>
Var<T> add_scalar(const Var<T>& a, std::type_identity_t<T> offset);
template <std::floating_point T>
Var<T> abs(const Var<T>& a);
template <std::floating_point T>
Var<T> log(const Var<T>& a);
// Gradient passes only where lo <= x <= hi.
template <std::floating_point T>
Var<T> clamp(const Var<T>& a, std::type_identity_t<T> lo, std::type_identity_t<T> hi);

// Reductions to a single-element tensor of shape {1}.
template <std::floating_point T>
Var<T> sum(const Var<T>& a);
template <std::floating_point T>
Var<T> mean(const Var<T>& a);

// Output spatial extent of conv2d along one axis.
std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                            std::size_t padding);

}  // namespace ntlgen::ad
