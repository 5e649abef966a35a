#pragma once

#include "ntlgen/autodiff/ops.hpp"

namespace ntlgen::model {

// Patch probabilities are clamped to [eps, 1 - eps] before any log.
inline constexpr double kProbabilityEps = 1e-7;

// -mean(log real) - mean(log(1 - fake)).
template <std::floating_point T>
ad::Var<T> loss_discriminator(const ad::Var<T>& real_map, const ad::Var<T>& fake_map);

// Non-saturating generator term: -mean(log fake).
template <std::floating_point T>
ad::Var<T> loss_generator_adv(const ad::Var<T>& fake_map);

// mean |generated - target|.
template <std::floating_point T>
ad::Var<T> loss_l1(const ad::Var<T>& generated, const ad::Var<T>& target);

template <std::floating_point T>
ad::Var<T> loss_generator_total(const ad::Var<T>& adv, const ad::Var<T>& l1, double lambda);

// Value-only forms.
template <std::floating_point T>
double loss_discriminator(const Tensor<T>& real_map, const Tensor<T>& fake_map);
template <std::floating_point T>
double loss_generator_adv(const Tensor<T>& fake_map);
template <std::floating_point T>
double loss_l1(const Tensor<T>& generated, const Tensor<T>& target);
double loss_generator_total(double adv, double l1, double lambda);

}  // namespace ntlgen::model
