#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ntlgen/tensor.hpp"

namespace ntlgen::ad {

template <std::floating_point T>
using NamedTensors = std::map<std::string, Tensor<T>>;

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <std::floating_point T>
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  NamedTensors<T> first_moment;
  NamedTensors<T> second_moment;
};

// One bias-corrected Adam update. Parameters without an entry in `grads`
// are left untouched; moments are created lazily with the parameter shape.
template <std::floating_point T>
void adam_step(NamedTensors<T>& params, const NamedTensors<T>& grads, AdamState<T>& state);

}  // namespace ntlgen::ad
