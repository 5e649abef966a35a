#include "ntlgen/model/checkpoint.hpp"

#include <json.hpp>

#include "ntlgen/error.hpp"
#include "ntlgen/io/container.hpp"

namespace ntlgen::model {

using nlohmann::json;

namespace {

std::string norm_name(InferenceNorm n) { return n == InferenceNorm::kBatch ? "batch" : "running"; }

InferenceNorm parse_norm(const std::string& s) {
  if (s == "batch") return InferenceNorm::kBatch;
  if (s == "running") return InferenceNorm::kRunning;
  throw FormatError("unknown inference_norm '" + s + "'");
}

json spec_json(const UNetSpec& s) {
  return {{"input_channels", s.input_channels},   {"output_channels", s.output_channels},
          {"tile_size", s.tile_size},             {"encoder_widths", s.encoder_widths},
          {"dropout_layers", s.dropout_layers},   {"dropout_rate", s.dropout_rate},
          {"kernel_size", s.kernel_size},         {"stride", s.stride},
          {"leaky_slope", s.leaky_slope},         {"bn_eps", s.bn_eps},
          {"bn_momentum", s.bn_momentum},         {"inference_norm", norm_name(s.inference_norm)}};
}

json spec_json(const PatchGANSpec& s) {
  return {{"input_channels", s.input_channels}, {"widths", s.widths},
          {"strides", s.strides},               {"batch_norm", s.batch_norm},
          {"kernel_size", s.kernel_size},       {"padding", s.padding},
          {"leaky_slope", s.leaky_slope},       {"bn_eps", s.bn_eps},
          {"bn_momentum", s.bn_momentum},       {"inference_norm", norm_name(s.inference_norm)}};
}

UNetSpec unet_from(const json& j) {
  UNetSpec s;
  j.at("input_channels").get_to(s.input_channels);
  j.at("output_channels").get_to(s.output_channels);
  j.at("tile_size").get_to(s.tile_size);
  j.at("encoder_widths").get_to(s.encoder_widths);
  j.at("dropout_layers").get_to(s.dropout_layers);
  j.at("dropout_rate").get_to(s.dropout_rate);
  j.at("kernel_size").get_to(s.kernel_size);
  j.at("stride").get_to(s.stride);
  j.at("leaky_slope").get_to(s.leaky_slope);
  j.at("bn_eps").get_to(s.bn_eps);
  j.at("bn_momentum").get_to(s.bn_momentum);
  s.inference_norm = parse_norm(j.at("inference_norm").get<std::string>());
  return s;
}

PatchGANSpec patch_from(const json& j) {
  PatchGANSpec s;
  j.at("input_channels").get_to(s.input_channels);
  j.at("widths").get_to(s.widths);
  j.at("strides").get_to(s.strides);
  j.at("batch_norm").get_to(s.batch_norm);
  j.at("kernel_size").get_to(s.kernel_size);
  j.at("padding").get_to(s.padding);
  j.at("leaky_slope").get_to(s.leaky_slope);
  j.at("bn_eps").get_to(s.bn_eps);
  j.at("bn_momentum").get_to(s.bn_momentum);
  s.inference_norm = parse_norm(j.at("inference_norm").get<std::string>());
  return s;
}

constexpr const char* kGroups[] = {"generator", "discriminator", "buffers"};

NamedTensors<float>& group_of(ModelParams<float>& p, const std::string& g) {
  if (g == "generator") return p.generator;
  if (g == "discriminator") return p.discriminator;
  if (g == "buffers") return p.buffers;
  throw FormatError("unknown tensor group '" + g + "'");
}

const NamedTensors<float>& group_of(const ModelParams<float>& p, const std::string& g) {
  return group_of(const_cast<ModelParams<float>&>(p), g);
}

// Every expected tensor is present with the expected shape, and nothing else.
void check_layout(const NamedTensors<float>& got, const NamedTensors<float>& want, const char* group) {
  for (const auto& [name, t] : want) {
    auto it = got.find(name);
    if (it == got.end()) throw ConfigError(std::string(group) + " tensor '" + name + "' missing from checkpoint");
    if (it->second.shape() != t.shape()) {
      throw ConfigError("checkpoint tensor '" + name + "' has shape " + shape_str(it->second.shape()) +
                        ", spec expects " + shape_str(t.shape()));
    }
  }
  for (const auto& [name, t] : got) {
    if (!want.count(name)) throw ConfigError("checkpoint tensor '" + name + "' is not part of the spec");
  }
}

}  // namespace

std::string to_json_string(const UNetSpec& spec) { return spec_json(spec).dump(); }
std::string to_json_string(const PatchGANSpec& spec) { return spec_json(spec).dump(); }

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  json index = json::array();
  std::vector<float> payload;
  for (const char* g : kGroups) {
    for (const auto& [name, t] : group_of(c.params, g)) {
      index.push_back({{"name", name},
                       {"group", g},
                       {"offset", payload.size() * sizeof(float)},
                       {"shape", t.shape()},
                       {"dtype", "float32"}});
      payload.insert(payload.end(), t.data().begin(), t.data().end());
    }
  }
  json header = {{"scenario", scenario_name(c.scenario)},
                 {"step", c.step},
                 {"generator", spec_json(c.generator_spec)},
                 {"discriminator", spec_json(c.discriminator_spec)},
                 {"tensors", std::move(index)}};
  io::write_container(path, kCheckpointMagic, header.dump(), payload);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const io::Container raw = io::read_container(path, kCheckpointMagic);
  Checkpoint c;
  try {
    const json header = json::parse(raw.header);
    c.scenario = ScenarioConfig::parse(header.at("scenario").get<std::string>()).id;
    c.step = header.at("step").get<std::size_t>();
    c.generator_spec = unet_from(header.at("generator"));
    c.discriminator_spec = patch_from(header.at("discriminator"));
    std::size_t expected_offset = 0;
    for (const auto& entry : header.at("tensors")) {
      if (entry.at("dtype").get<std::string>() != "float32") throw FormatError("unsupported dtype");
      const auto offset = entry.at("offset").get<std::size_t>();
      const Shape shape = entry.at("shape").get<Shape>();
      const std::size_t count = shape_size(shape);
      if (offset != expected_offset) throw FormatError("tensor offsets are not contiguous");
      if (offset / sizeof(float) + count > raw.payload.size()) throw FormatError("tensor data truncated");
      const auto first = raw.payload.begin() + static_cast<std::ptrdiff_t>(offset / sizeof(float));
      auto& group = group_of(c.params, entry.at("group").get<std::string>());
      const auto name = entry.at("name").get<std::string>();
      if (!group.emplace(name, Tensor<float>(shape, std::vector<float>(first, first + static_cast<std::ptrdiff_t>(count)))).second) {
        throw FormatError("duplicate tensor '" + name + "'");
      }
      expected_offset = offset + count * sizeof(float);
    }
    if (expected_offset != raw.payload.size() * sizeof(float)) throw FormatError("trailing tensor data");
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": malformed checkpoint header: " + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  c.generator_spec.validate();
  c.discriminator_spec.validate();
  const auto reference = build_model<float>(c.generator_spec, c.discriminator_spec, 0);
  check_layout(c.params.generator, reference.generator, "generator");
  check_layout(c.params.discriminator, reference.discriminator, "discriminator");
  check_layout(c.params.buffers, reference.buffers, "buffer");
  return c;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const UNetSpec& generator,
                           const PatchGANSpec& discriminator) {
  Checkpoint c = load_checkpoint(path);
  if (!(c.generator_spec == generator)) {
    throw ConfigError("checkpoint generator spec " + to_json_string(c.generator_spec) +
                      " does not match " + to_json_string(generator));
  }
  if (!(c.discriminator_spec == discriminator)) {
    throw ConfigError("checkpoint discriminator spec does not match the requested one");
  }
  return c;
}

}  // namespace ntlgen::model
