#include "igbeat/checkpoint.hpp"

#include <fstream>
#include <json.hpp>

#include "igbeat/errors.hpp"

namespace igbeat::model {
namespace {

using nlohmann::json;

constexpr const char* kFormatName = "igbeat-checkpoint";

json config_to_json(const BackboneConfig& c) {
  return json{{"variant", std::string(variant_name(c.variant))},
              {"model_dim", c.model_dim},
              {"state_dim", c.state_dim},
              {"mu_floor", c.mu_floor},
              {"logvar_clip", {c.logvar_lo, c.logvar_hi}},
              {"clip_logvar_in_training", c.clip_logvar_in_training},
              {"clip_logvar_at_inference", c.clip_logvar_at_inference}};
}

BackboneConfig config_from_json(const json& j) {
  BackboneConfig c;
  c.variant = parse_variant(j.at("variant").get<std::string>());
  c.model_dim = j.at("model_dim").get<std::size_t>();
  c.state_dim = j.at("state_dim").get<std::size_t>();
  c.mu_floor = j.at("mu_floor").get<double>();
  c.logvar_lo = j.at("logvar_clip").at(0).get<double>();
  c.logvar_hi = j.at("logvar_clip").at(1).get<double>();
  c.clip_logvar_in_training = j.value("clip_logvar_in_training", true);
  c.clip_logvar_at_inference = j.value("clip_logvar_at_inference", true);
  c.validate();
  return c;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  if (!ckpt.params.all_finite()) {
    throw std::invalid_argument("refusing to write a checkpoint with non-finite parameters");
  }
  json tensors = json::array();
  for (std::size_t i = 0; i < ckpt.params.count(); ++i) {
    const ad::Tensor& t = ckpt.params.tensor(i);
    tensors.push_back({{"name", ckpt.params.name(i)},
                       {"shape", t.shape()},
                       {"values", std::vector<double>(t.values().begin(), t.values().end())}});
  }
  json doc{{"format", kFormatName},
           {"format_version", kCheckpointFormatVersion},
           {"config", config_to_json(ckpt.config)},
           {"meta", ckpt.meta},
           {"tensors", std::move(tensors)}};
  out << doc.dump(1) << '\n';
}

Checkpoint read_checkpoint(std::istream& in, const std::string& source) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(source, 0, std::string("invalid checkpoint JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormatName) {
      throw ParseError(source, 0, "not an igbeat checkpoint");
    }
    const int version = doc.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw ParseError(source, 0, "unsupported checkpoint format_version " +
                                      std::to_string(version));
    }
    Checkpoint ckpt;
    ckpt.config = config_from_json(doc.at("config"));
    if (doc.contains("meta")) ckpt.meta = doc["meta"].get<std::map<std::string, std::string>>();
    for (const json& t : doc.at("tensors")) {
      ad::Tensor tensor(t.at("shape").get<ad::Shape>(), t.at("values").get<std::vector<double>>(),
                        true);
      ckpt.params.add(t.at("name").get<std::string>(), std::move(tensor));
    }
    // Shapes must match what the config would produce.
    Rng rng(0);
    const ModelParameters ref = ModelParameters::initialize(ckpt.config, rng);
    if (ref.count() != ckpt.params.count()) {
      throw ParseError(source, 0, "checkpoint tensor set does not match its config");
    }
    for (std::size_t i = 0; i < ref.count(); ++i) {
      if (!ckpt.params.contains(ref.name(i)) ||
          ckpt.params.at(ref.name(i)).shape() != ref.tensor(i).shape()) {
        throw ParseError(source, 0, "tensor '" + ref.name(i) + "' missing or mis-shaped");
      }
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw ParseError(source, 0, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, ckpt);
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_checkpoint(in, path.string());
}

}  // namespace igbeat::model
