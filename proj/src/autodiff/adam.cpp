#include "ntlgen/autodiff/adam.hpp"

#include <cmath>

#include "ntlgen/error.hpp"
#include "ntlgen/kernels/kernels.hpp"

namespace ntlgen::ad {

template <std::floating_point T>
void adam_step(NamedTensors<T>& params, const NamedTensors<T>& grads, AdamState<T>& state) {
  const AdamConfig& cfg = state.config;
  if (cfg.lr < 0.0 || !(cfg.eps > 0.0) || cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 ||
      cfg.beta2 < 0.0 || cfg.beta2 >= 1.0) {
    throw ConfigError("adam: invalid hyperparameters");
  }
  for (const auto& [name, grad] : grads) {
    auto it = params.find(name);
    if (it == params.end()) throw ShapeError("adam: gradient for unknown parameter '" + name + "'");
    if (it->second.shape() != grad.shape()) {
      throw ShapeError("adam: gradient shape " + shape_str(grad.shape()) + " for parameter '" +
                       name + "' of shape " + shape_str(it->second.shape()));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const kernels::AdamCoeffs<T> coeffs{
      static_cast<T>(cfg.lr),
      static_cast<T>(cfg.beta1),
      static_cast<T>(cfg.beta2),
      static_cast<T>(cfg.eps),
      static_cast<T>(1.0 - std::pow(cfg.beta1, t)),
      static_cast<T>(1.0 - std::pow(cfg.beta2, t)),
  };
  for (const auto& [name, grad] : grads) {
    Tensor<T>& param = params.at(name);
    auto [mit, m_new] = state.first_moment.try_emplace(name, param.shape());
    auto [vit, v_new] = state.second_moment.try_emplace(name, param.shape());
    if (mit->second.shape() != param.shape() || vit->second.shape() != param.shape()) {
      throw ShapeError("adam: moment shape mismatch for '" + name + "'");
    }
    kernels::adam_update<T>(param.data(), grad.data(), mit->second.data(), vit->second.data(),
                            coeffs);
  }
}

template void adam_step<float>(NamedTensors<float>&, const NamedTensors<float>&,
                               AdamState<float>&);
template void adam_step<double>(NamedTensors<double>&, const NamedTensors<double>&,
                                AdamState<double>&);

}  // namespace ntlgen::ad
