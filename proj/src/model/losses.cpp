#include "ntlgen/model/losses.hpp"

#include <cmath>
#include <string>

#include "ntlgen/error.hpp"

namespace ntlgen::model {
namespace {

template <class T>
ad::Var<T> clamped_log(const ad::Var<T>& p) {
  const T eps = static_cast<T>(kProbabilityEps);
  return ad::log(ad::clamp(p, eps, T{1} - eps));
}

template <class T>
ad::Var<T> one_minus(const ad::Var<T>& p) {
  return ad::add_scalar(ad::scale(p, T{-1}), T{1});
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("L1 weight must be finite and >= 0, got " + std::to_string(lambda));
  }
}

template <class T>
double scalar_of(const ad::Var<T>& v) {
  return static_cast<double>(v.value()[0]);
}

}  // namespace

template <std::floating_point T>
ad::Var<T> loss_discriminator(const ad::Var<T>& real_map, const ad::Var<T>& fake_map) {
  if (real_map.shape() != fake_map.shape()) {
    throw ShapeError("loss_discriminator: " + shape_str(real_map.shape()) + " vs " +
                     shape_str(fake_map.shape()));
  }
  auto real_term = ad::mean(clamped_log(real_map));
  auto fake_term = ad::mean(clamped_log(one_minus(fake_map)));
  return ad::scale(ad::add(real_term, fake_term), T{-1});
}

template <std::floating_point T>
ad::Var<T> loss_generator_adv(const ad::Var<T>& fake_map) {
  return ad::scale(ad::mean(clamped_log(fake_map)), T{-1});
}

template <std::floating_point T>
ad::Var<T> loss_l1(const ad::Var<T>& generated, const ad::Var<T>& target) {
  if (generated.shape() != target.shape()) {
    throw ShapeError("loss_l1: " + shape_str(generated.shape()) + " vs " + shape_str(target.shape()));
  }
  return ad::mean(ad::abs(ad::sub(generated, target)));
}

template <std::floating_point T>
ad::Var<T> loss_generator_total(const ad::Var<T>& adv, const ad::Var<T>& l1, double lambda) {
  check_lambda(lambda);
  return ad::add(adv, ad::scale(l1, static_cast<T>(lambda)));
}

template <std::floating_point T>
double loss_discriminator(const Tensor<T>& real_map, const Tensor<T>& fake_map) {
  ad::Tape<T> tape;
  return scalar_of(loss_discriminator(tape.constant(real_map), tape.constant(fake_map)));
}

template <std::floating_point T>
double loss_generator_adv(const Tensor<T>& fake_map) {
  ad::Tape<T> tape;
  return scalar_of(loss_generator_adv(tape.constant(fake_map)));
}

template <std::floating_point T>
double loss_l1(const Tensor<T>& generated, const Tensor<T>& target) {
  ad::Tape<T> tape;
  return scalar_of(loss_l1(tape.constant(generated), tape.constant(target)));
}

double loss_generator_total(double adv, double l1, double lambda) {
  check_lambda(lambda);
  return adv + lambda * l1;
}

#define NTLGEN_INSTANTIATE_LOSSES(T)                                                              \
  template ad::Var<T> loss_discriminator<T>(const ad::Var<T>&, const ad::Var<T>&);               \
  template ad::Var<T> loss_generator_adv<T>(const ad::Var<T>&);                                  \
  template ad::Var<T> loss_l1<T>(const ad::Var<T>&, const ad::Var<T>&);                          \
  template ad::Var<T> loss_generator_total<T>(const ad::Var<T>&, const ad::Var<T>&, double);     \
  template double loss_discriminator<T>(const Tensor<T>&, const Tensor<T>&);                     \
  template double loss_generator_adv<T>(const Tensor<T>&);                                       \
  template double loss_l1<T>(const Tensor<T>&, const Tensor<T>&);

NTLGEN_INSTANTIATE_LOSSES(float)
NTLGEN_INSTANTIATE_LOSSES(double)

#undef NTLGEN_INSTANTIATE_LOSSES

}  // namespace ntlgen::model
