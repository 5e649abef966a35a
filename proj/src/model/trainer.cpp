#include "ntlgen/model/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ntlgen/error.hpp"
#include "ntlgen/model/losses.hpp"

namespace ntlgen::model {

void TrainConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (steps == 0 && epochs == 0) throw ConfigError("either steps or epochs must be positive");
}

std::size_t TrainConfig::total_steps(std::size_t samples) const {
  if (steps > 0) return steps;
  return epochs * ((samples + batch_size - 1) / batch_size);
}

template <std::floating_point T>
TrainerState<T> TrainerState<T>::create(const UNetSpec& unet, const PatchGANSpec& patch,
                                        const TrainConfig& config) {
  TrainerState s;
  s.generator_spec = unet;
  s.discriminator_spec = patch;
  s.params = build_model<T>(unet, patch, config.seed);
  s.adam_g.config = config.adam_g;
  s.adam_d.config = config.adam_d;
  return s;
}

namespace {

template <class T>
double value_of(const ad::Var<T>& v) {
  return static_cast<double>(v.value()[0]);
}

void check_finite(double v, const char* what, std::size_t step) {
  if (!std::isfinite(v)) {
    throw TrainingDivergedError(static_cast<long>(step),
                                std::string(what) + " became non-finite at step " + std::to_string(step));
  }
}

template <class T>
void check_batch(const TrainerState<T>& state, const Sample<T>& batch) {
  const Shape& c = batch.condition.shape();
  const Shape& t = batch.target.shape();
  if (c.size() != 4 || t.size() != 4 || c[0] != t[0] || c[2] != t[2] || c[3] != t[3] ||
      t[1] != state.generator_spec.output_channels) {
    throw ShapeError("batch condition " + shape_str(c) + " and target " + shape_str(t) + " are not aligned");
  }
}

double squared_norm(const auto& grads) {
  double s = 0;
  for (const auto& [name, g] : grads) {
    for (auto v : g.data()) s += static_cast<double>(v) * static_cast<double>(v);
  }
  return s;
}

}  // namespace

namespace {

template <class T>
StepMetrics train_step_impl(TrainerState<T>& state, const Sample<T>& batch, const TrainConfig& config) {
  const std::size_t step = state.step;
  auto& p = state.params;
  ForwardOptions fwd{ad::Mode::kTrain, mix_seed(config.seed, 0x100000000ULL + step), {}};

  ad::Tape<T> g_tape;
  BoundParams<T> g_params(g_tape, p.generator, true);
  const auto condition = g_tape.constant(batch.condition);
  const auto target = g_tape.constant(batch.target);
  const auto fake = generator_forward(state.generator_spec, g_params, condition, fwd, &p.buffers);

  StepMetrics m;
  m.step = step;
  {
    ad::Tape<T> d_tape;
    BoundParams<T> d_params(d_tape, p.discriminator, true);
    const auto cond = d_tape.constant(batch.condition);
    const auto real_map = discriminator_forward(state.discriminator_spec, d_params, cond,
                                                d_tape.constant(batch.target), ad::Mode::kTrain, &p.buffers);
    const auto fake_map = discriminator_forward(state.discriminator_spec, d_params, cond,
                                                d_tape.constant(fake.value()), ad::Mode::kTrain, &p.buffers);
    const auto loss_d = loss_discriminator(real_map, fake_map);
    m.loss_d = value_of(loss_d);
    check_finite(m.loss_d, "discriminator loss", step);
    d_tape.backward(loss_d);
    ad::adam_step(p.discriminator, d_params.gradients(), state.adam_d);
  }

  BoundParams<T> d_frozen(g_tape, p.discriminator, false);
  const auto fake_map = discriminator_forward(state.discriminator_spec, d_frozen, condition, fake,
                                              ad::Mode::kTrain, &p.buffers);
  const auto adv = loss_generator_adv(fake_map);
  const auto l1 = loss_l1(fake, target);
  const auto total = loss_generator_total(adv, l1, config.lambda);
  m.loss_g_adv = value_of(adv);
  m.loss_l1 = value_of(l1);
  m.loss_g_total = value_of(total);
  check_finite(m.loss_g_total, "generator loss", step);
  g_tape.backward(total);
  ad::adam_step(p.generator, g_params.gradients(), state.adam_g);

  for (const auto* group : {&p.generator, &p.discriminator}) {
    for (const auto& [name, t] : *group) {
      if (!t.all_finite()) {
        throw TrainingDivergedError(static_cast<long>(step), "parameter " + name + " became non-finite");
      }
    }
  }
  return m;
}

}  // namespace

template <std::floating_point T>
StepMetrics train_step(TrainerState<T>& state, const Sample<T>& batch, const TrainConfig& config) {
  config.validate();
  check_batch(state, batch);
  StepMetrics m;
  try {
    m = train_step_impl(state, batch, config);
  } catch (const NumericError& e) {
    // Non-finite activations mid-step mean the run has already diverged.
    throw TrainingDivergedError(static_cast<long>(state.step), e.what());
  }
  ++state.step;
  return m;
}

template <std::floating_point T>
Sample<T> stack_samples(const std::vector<const Sample<T>*>& parts) {
  if (parts.empty()) throw ConfigError("cannot stack an empty batch");
  if (parts.size() == 1) return *parts.front();
  auto stack = [&](auto member) {
    Shape shape = (parts.front()->*member).shape();
    std::vector<T> data;
    std::size_t n = 0;
    for (const auto* s : parts) {
      const Tensor<T>& t = s->*member;
      if (t.rank() != 4 || !std::equal(t.shape().begin() + 1, t.shape().end(), shape.begin() + 1)) {
        throw ShapeError("cannot stack " + shape_str(t.shape()) + " onto " + shape_str(shape));
      }
      data.insert(data.end(), t.data().begin(), t.data().end());
      n += t.dim(0);
    }
    shape[0] = n;
    return Tensor<T>(shape, std::move(data));
  };
  return {stack(&Sample<T>::condition), stack(&Sample<T>::target)};
}

template <std::floating_point T>
std::vector<StepMetrics> train(TrainerState<T>& state, const std::vector<Sample<T>>& samples,
                               const TrainConfig& config,
                               const std::function<void(const TrainerState<T>&)>& on_checkpoint) {
  config.validate();
  if (samples.empty()) throw ConfigError("training set is empty");
  const std::size_t total = config.total_steps(samples.size());
  std::vector<std::size_t> order(samples.size());
  std::size_t cursor = order.size();
  std::size_t epoch = 0;
  std::vector<StepMetrics> history;
  history.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    std::vector<const Sample<T>*> parts;
    while (parts.size() < config.batch_size) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 rng(mix_seed(config.seed, 0x5u + epoch++));
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
        if (config.batch_size > samples.size() && !parts.empty()) break;
      }
      parts.push_back(&samples[order[cursor++]]);
    }
    history.push_back(train_step(state, stack_samples(parts), config));
    const bool last = i + 1 == total;
    if (on_checkpoint && (last || (config.checkpoint_every > 0 && (i + 1) % config.checkpoint_every == 0))) {
      on_checkpoint(state);
    }
  }
  return history;
}

template <std::floating_point T>
GradientNorms generator_gradient_norms(const TrainerState<T>& state, const Sample<T>& batch,
                                       double lambda, std::uint64_t seed) {
  check_batch(state, batch);
  NamedTensors<T> buffers = state.params.buffers;
  ad::Tape<T> tape;
  BoundParams<T> g(tape, state.params.generator, true);
  BoundParams<T> d(tape, state.params.discriminator, false);
  const auto condition = tape.constant(batch.condition);
  const auto fake = generator_forward(state.generator_spec, g, condition,
                                      {ad::Mode::kTrain, seed, {}}, &buffers);
  const auto fake_map = discriminator_forward(state.discriminator_spec, d, condition, fake,
                                              ad::Mode::kTrain, &buffers);
  const auto adv = loss_generator_adv(fake_map);
  const auto weighted = ad::scale(loss_l1(fake, tape.constant(batch.target)), static_cast<T>(lambda));
  GradientNorms norms;
  tape.backward(adv);
  norms.adversarial = std::sqrt(squared_norm(g.gradients()));
  tape.backward(weighted);
  norms.weighted_l1 = std::sqrt(squared_norm(g.gradients()));
  return norms;
}

#define NTLGEN_INSTANTIATE_TRAINER(T)                                                                 \
  template struct TrainerState<T>;                                                                    \
  template StepMetrics train_step<T>(TrainerState<T>&, const Sample<T>&, const TrainConfig&);         \
  template Sample<T> stack_samples<T>(const std::vector<const Sample<T>*>&);                          \
  template std::vector<StepMetrics> train<T>(TrainerState<T>&, const std::vector<Sample<T>>&,         \
                                             const TrainConfig&,                                      \
                                             const std::function<void(const TrainerState<T>&)>&);     \
  template GradientNorms generator_gradient_norms<T>(const TrainerState<T>&, const Sample<T>&, double, \
                                                     std::uint64_t);

NTLGEN_INSTANTIATE_TRAINER(float)
NTLGEN_INSTANTIATE_TRAINER(double)

#undef NTLGEN_INSTANTIATE_TRAINER

}  // namespace ntlgen::model
