#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "igbeat/backbone.hpp"

namespace igbeat::model {

inline constexpr int kCheckpointFormatVersion = 1;

// JSON container:
//   { "format": "igbeat-checkpoint", "format_version": 1,
//     "config": {...}, "meta": {"key": "value", ...},
//     "tensors": [ {"name": ..., "shape": [...], "values": [...]}, ... ] }
// Values are row-major f64 written with round-trip precision.
struct Checkpoint {
  BackboneConfig config;
  ModelParameters params;
  std::map<std::string, std::string> meta;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in, const std::string& source = "<stream>");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace igbeat::model
