#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ntlgen/autodiff/adam.hpp"
#include "ntlgen/model/networks.hpp"

namespace ntlgen::model {

struct TrainConfig {
  double lambda = 100.0;
  std::size_t steps = 0;   // 0: run `epochs` full passes instead
  std::size_t epochs = 1;
  std::size_t batch_size = 1;
  ad::AdamConfig adam_g;
  ad::AdamConfig adam_d;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0;  // 0: only the final state

  void validate() const;
  std::size_t total_steps(std::size_t samples) const;
};

// One aligned pair; condition N x C x S x S, target N x 1 x S x S.
template <std::floating_point T>
struct Sample {
  Tensor<T> condition;
  Tensor<T> target;
};

struct StepMetrics {
  std::size_t step = 0;
  double loss_d = 0;
  double loss_g_adv = 0;
  double loss_l1 = 0;
  double loss_g_total = 0;

  friend bool operator==(const StepMetrics&, const StepMetrics&) = default;
};

template <std::floating_point T>
struct TrainerState {
  UNetSpec generator_spec;
  PatchGANSpec discriminator_spec;
  ModelParams<T> params;
  ad::AdamState<T> adam_g;
  ad::AdamState<T> adam_d;
  std::size_t step = 0;

  static TrainerState create(const UNetSpec& unet, const PatchGANSpec& patch, const TrainConfig& config);
};

// One discriminator Adam step on loss_discriminator, then one generator Adam
// step on adv + lambda * L1 scored by the updated discriminator.
// TrainingDivergedError on a non-finite loss.
template <std::floating_point T>
StepMetrics train_step(TrainerState<T>& state, const Sample<T>& batch, const TrainConfig& config);

// Runs seeded shuffled passes over `samples`. `on_checkpoint` fires every
// `checkpoint_every` steps and once at the end. ConfigError on an empty set.
template <std::floating_point T>
std::vector<StepMetrics> train(TrainerState<T>& state, const std::vector<Sample<T>>& samples,
                               const TrainConfig& config,
                               const std::function<void(const TrainerState<T>&)>& on_checkpoint = {});

// Norms of the generator gradient contributed by the adversarial term and
// by the weighted L1 term, measured separately on one batch.
struct GradientNorms {
  double adversarial = 0;
  double weighted_l1 = 0;
  double ratio() const { return weighted_l1 / adversarial; }
};

template <std::floating_point T>
GradientNorms generator_gradient_norms(const TrainerState<T>& state, const Sample<T>& batch,
                                       double lambda, std::uint64_t seed);

// Concatenates samples along the batch axis.
template <std::floating_point T>
Sample<T> stack_samples(const std::vector<const Sample<T>*>& parts);

}  // namespace ntlgen::model
