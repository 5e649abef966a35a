#include "ntlgen/model/networks.hpp"

#include <algorithm>
#include <optional>
#include <random>

#include "ntlgen/error.hpp"

namespace ntlgen::model {

namespace {

constexpr double kInitStd = 0.02;

template <class T>
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  Tensor<T> normal(const Shape& shape, double mean) {
    std::normal_distribution<double> dist(mean, kInitStd);
    Tensor<T> t(shape);
    for (auto& v : t.data()) v = static_cast<T>(dist(rng_));
    return t;
  }

 private:
  std::mt19937_64 rng_;
};

template <class T>
void add_norm(NamedTensors<T>& params, Initializer<T>& init, const std::string& prefix,
              std::size_t channels) {
  params.emplace(prefix + ".bn.gamma", init.normal({channels}, 1.0));
  params.emplace(prefix + ".bn.beta", Tensor<T>({channels}, T{0}));
}

template <class T>
void add_norm_buffers(NamedTensors<T>& buffers, const std::string& prefix, std::size_t channels) {
  buffers.emplace(prefix + ".bn.running_mean", Tensor<T>({channels}, T{0}));
  buffers.emplace(prefix + ".bn.running_var", Tensor<T>({channels}, T{1}));
}

std::string enc_name(std::size_t i) { return "g.enc" + std::to_string(i); }
std::string dec_name(std::size_t j) { return "g.dec" + std::to_string(j); }
std::string disc_name(std::size_t l) { return "d.conv" + std::to_string(l); }

// Batch norm honoring the forward mode and the spec's inference statistics.
template <class T>
ad::Var<T> normalize(const ad::Var<T>& x, const BoundParams<T>& params, const std::string& prefix,
                     ad::Mode mode, InferenceNorm inference, double eps, double momentum,
                     NamedTensors<T>* buffers) {
  const auto& gamma = params.at(prefix + ".bn.gamma");
  const auto& beta = params.at(prefix + ".bn.beta");
  const std::string mean_key = prefix + ".bn.running_mean";
  const std::string var_key = prefix + ".bn.running_var";
  const bool use_running = mode == ad::Mode::kEval && inference == InferenceNorm::kRunning;
  if (!use_running && (mode == ad::Mode::kEval || buffers == nullptr)) {
    return ad::batch_norm(x, gamma, beta, {eps, momentum, ad::Mode::kTrain}, nullptr);
  }
  if (!buffers || !buffers->count(mean_key) || !buffers->count(var_key)) {
    throw ConfigError("missing running statistics for " + prefix);
  }
  ad::RunningStats<T> stats{buffers->at(mean_key), buffers->at(var_key)};
  auto y = ad::batch_norm(x, gamma, beta, {eps, momentum, use_running ? ad::Mode::kEval : ad::Mode::kTrain},
                          &stats);
  if (!use_running) {
    buffers->at(mean_key) = std::move(stats.mean);
    buffers->at(var_key) = std::move(stats.var);
  }
  return y;
}

template <class T>
std::optional<ad::Var<T>> maybe(const BoundParams<T>& params, const std::string& name) {
  if (params.contains(name)) return params.at(name);
  return std::nullopt;
}

}  // namespace

template <std::floating_point T>
NamedTensors<T> build_generator(const UNetSpec& spec, std::uint64_t seed) {
  spec.validate();
  Initializer<T> init(mix_seed(seed, 0x47));
  NamedTensors<T> p;
  const std::size_t k = spec.kernel_size;
  for (std::size_t i = 0; i < spec.depth(); ++i) {
    const std::size_t cin = i == 0 ? spec.input_channels : spec.encoder_widths[i - 1];
    const std::size_t cout = spec.encoder_widths[i];
    p.emplace(enc_name(i) + ".weight", init.normal({cout, cin, k, k}, 0.0));
    if (spec.encoder_has_norm(i)) {
      add_norm(p, init, enc_name(i), cout);
    } else {
      p.emplace(enc_name(i) + ".bias", Tensor<T>({cout}, T{0}));
    }
  }
  for (std::size_t j = 0; j < spec.depth(); ++j) {
    const std::size_t cin = spec.decoder_input_channels(j);
    const std::size_t cout = spec.decoder_output_channels(j);
    p.emplace(dec_name(j) + ".weight", init.normal({cin, cout, k, k}, 0.0));
    if (spec.decoder_has_norm(j)) {
      add_norm(p, init, dec_name(j), cout);
    } else {
      p.emplace(dec_name(j) + ".bias", Tensor<T>({cout}, T{0}));
    }
  }
  return p;
}

template <std::floating_point T>
NamedTensors<T> build_discriminator(const PatchGANSpec& spec, std::uint64_t seed) {
  spec.validate();
  Initializer<T> init(mix_seed(seed, 0x44));
  NamedTensors<T> p;
  const std::size_t k = spec.kernel_size;
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    const std::size_t cin = l == 0 ? spec.input_channels : spec.widths[l - 1];
    p.emplace(disc_name(l) + ".weight", init.normal({spec.widths[l], cin, k, k}, 0.0));
    if (spec.batch_norm[l]) {
      add_norm(p, init, disc_name(l), spec.widths[l]);
    } else {
      p.emplace(disc_name(l) + ".bias", Tensor<T>({spec.widths[l]}, T{0}));
    }
  }
  return p;
}

template <std::floating_point T>
ModelParams<T> build_model(const UNetSpec& unet, const PatchGANSpec& patch, std::uint64_t seed) {
  ModelParams<T> m{build_generator<T>(unet, seed), build_discriminator<T>(patch, seed), {}};
  for (std::size_t i = 0; i < unet.depth(); ++i) {
    if (unet.encoder_has_norm(i)) add_norm_buffers(m.buffers, enc_name(i), unet.encoder_widths[i]);
  }
  for (std::size_t j = 0; j < unet.depth(); ++j) {
    if (unet.decoder_has_norm(j)) add_norm_buffers(m.buffers, dec_name(j), unet.decoder_output_channels(j));
  }
  for (std::size_t l = 0; l < patch.layers(); ++l) {
    if (patch.batch_norm[l]) add_norm_buffers(m.buffers, disc_name(l), patch.widths[l]);
  }
  return m;
}

template <std::floating_point T>
BoundParams<T>::BoundParams(ad::Tape<T>& tape, const NamedTensors<T>& params, bool trainable) {
  for (const auto& [name, value] : params) {
    vars_.emplace(name, trainable ? tape.variable(value) : tape.constant(value));
  }
}

template <std::floating_point T>
const ad::Var<T>& BoundParams<T>::at(const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw ConfigError("missing parameter '" + name + "'");
  return it->second;
}

template <std::floating_point T>
NamedTensors<T> BoundParams<T>::gradients() const {
  NamedTensors<T> grads;
  for (const auto& [name, var] : vars_) {
    if (!var.requires_grad()) continue;
    grads.emplace(name, var.grad().empty() ? Tensor<T>(var.shape(), T{0}) : var.grad());
  }
  return grads;
}

template <std::floating_point T>
ad::Var<T> generator_forward(const UNetSpec& spec, const BoundParams<T>& params,
                             const ad::Var<T>& condition, const ForwardOptions& options,
                             NamedTensors<T>* buffers) {
  const Shape& s = condition.shape();
  if (s.size() != 4 || s[1] != spec.input_channels) {
    throw ShapeError("generator: expected N x " + std::to_string(spec.input_channels) +
                     " x H x W condition, got " + shape_str(s));
  }
  if (s[2] != spec.tile_size || s[3] != spec.tile_size) {
    throw ShapeError("generator: expected " + std::to_string(spec.tile_size) + "x" +
                     std::to_string(spec.tile_size) + " tiles, got " + shape_str(s));
  }
  const ad::ConvParams conv{spec.stride, spec.padding()};
  const auto leaky = ad::Activation::leaky_relu(spec.leaky_slope);
  std::vector<ad::Var<T>> enc;
  enc.reserve(spec.depth());
  for (std::size_t i = 0; i < spec.depth(); ++i) {
    const std::string name = enc_name(i);
    ad::Var<T> x = i == 0 ? condition : ad::activation(enc.back(), leaky);
    x = ad::conv2d(x, params.at(name + ".weight"), maybe(params, name + ".bias"), conv);
    if (spec.encoder_has_norm(i)) {
      x = normalize(x, params, name, options.mode, spec.inference_norm, spec.bn_eps, spec.bn_momentum, buffers);
    }
    enc.push_back(x);
  }
  ad::Var<T> d = enc.back();
  for (std::size_t j = 0; j < spec.depth(); ++j) {
    const std::string name = dec_name(j);
    if (j > 0) {
      const std::size_t src = spec.skip_source(j);
      ad::Var<T> skip = enc[src];
      if (std::find(options.zeroed_skips.begin(), options.zeroed_skips.end(), src) != options.zeroed_skips.end()) {
        skip = condition.tape().constant(Tensor<T>(skip.shape(), T{0}));
      }
      d = ad::concat_channels(d, skip);
    }
    d = ad::activation(d, ad::Activation::relu());
    d = ad::conv_transpose2d(d, params.at(name + ".weight"), maybe(params, name + ".bias"), conv);
    if (spec.decoder_has_norm(j)) {
      d = normalize(d, params, name, options.mode, spec.inference_norm, spec.bn_eps, spec.bn_momentum, buffers);
      if (spec.decoder_has_dropout(j)) {
        d = ad::dropout(d, {spec.dropout_rate, mix_seed(options.seed, j + 1), options.mode});
      }
    } else {
      d = ad::activation(d, ad::Activation::tanh());
    }
  }
  return d;
}

template <std::floating_point T>
ad::Var<T> discriminator_forward(const PatchGANSpec& spec, const BoundParams<T>& params,
                                 const ad::Var<T>& condition, const ad::Var<T>& candidate,
                                 ad::Mode mode, NamedTensors<T>* buffers) {
  if (condition.shape().size() != 4 || candidate.shape().size() != 4 ||
      condition.shape()[1] + candidate.shape()[1] != spec.input_channels) {
    throw ShapeError("discriminator: condition " + shape_str(condition.shape()) + " and candidate " +
                     shape_str(candidate.shape()) + " do not provide " +
                     std::to_string(spec.input_channels) + " channels");
  }
  ad::Var<T> x = ad::concat_channels(condition, candidate);
  const auto leaky = ad::Activation::leaky_relu(spec.leaky_slope);
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    const std::string name = disc_name(l);
    x = ad::conv2d(x, params.at(name + ".weight"), maybe(params, name + ".bias"),
                   {spec.strides[l], spec.padding});
    if (spec.batch_norm[l]) {
      x = normalize(x, params, name, mode, spec.inference_norm, spec.bn_eps, spec.bn_momentum, buffers);
    }
    x = ad::activation(x, l + 1 < spec.layers() ? leaky : ad::Activation::sigmoid());
  }
  return x;
}

template <std::floating_point T>
Tensor<T> generate(const UNetSpec& spec, const NamedTensors<T>& params, const Tensor<T>& condition,
                   const ForwardOptions& options, const NamedTensors<T>* buffers) {
  ad::Tape<T> tape;
  BoundParams<T> bound(tape, params, false);
  NamedTensors<T> scratch = buffers ? *buffers : NamedTensors<T>{};
  ForwardOptions eval = options;
  eval.mode = ad::Mode::kEval;
  return generator_forward(spec, bound, tape.constant(condition), eval, buffers ? &scratch : nullptr).value();
}

template <std::floating_point T>
Tensor<T> discriminate(const PatchGANSpec& spec, const NamedTensors<T>& params,
                       const Tensor<T>& condition, const Tensor<T>& candidate,
                       const NamedTensors<T>* buffers) {
  ad::Tape<T> tape;
  BoundParams<T> bound(tape, params, false);
  NamedTensors<T> scratch = buffers ? *buffers : NamedTensors<T>{};
  return discriminator_forward(spec, bound, tape.constant(condition), tape.constant(candidate),
                               ad::Mode::kEval, buffers ? &scratch : nullptr)
      .value();
}

#define NTLGEN_INSTANTIATE_NETWORKS(T)                                                               \
  template NamedTensors<T> build_generator<T>(const UNetSpec&, std::uint64_t);                      \
  template NamedTensors<T> build_discriminator<T>(const PatchGANSpec&, std::uint64_t);              \
  template ModelParams<T> build_model<T>(const UNetSpec&, const PatchGANSpec&, std::uint64_t);      \
  template class BoundParams<T>;                                                                     \
  template ad::Var<T> generator_forward<T>(const UNetSpec&, const BoundParams<T>&, const ad::Var<T>&, \
                                           const ForwardOptions&, NamedTensors<T>*);                \
  template ad::Var<T> discriminator_forward<T>(const PatchGANSpec&, const BoundParams<T>&,          \
                                               const ad::Var<T>&, const ad::Var<T>&, ad::Mode,      \
                                               NamedTensors<T>*);                                   \
  template Tensor<T> generate<T>(const UNetSpec&, const NamedTensors<T>&, const Tensor<T>&,         \
                                 const ForwardOptions&, const NamedTensors<T>*);                    \
  template Tensor<T> discriminate<T>(const PatchGANSpec&, const NamedTensors<T>&, const Tensor<T>&, \
                                     const Tensor<T>&, const NamedTensors<T>*);

NTLGEN_INSTANTIATE_NETWORKS(float)
NTLGEN_INSTANTIATE_NETWORKS(double)

#undef NTLGEN_INSTANTIATE_NETWORKS

}  // namespace ntlgen::model
