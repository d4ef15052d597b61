#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string>

#include "igbeat/errors.hpp"
#include "igbeat/harness.hpp"
#include "igbeat/ingest.hpp"
#include "igbeat/preprocess.hpp"
#include "text_util.hpp"

namespace igbeat::harness {
namespace {

template <typename Int>
Int to_int(const std::string& key, const std::string& value) {
  Int v{};
  if (!detail::parse_integer(value, v)) {
    throw DomainError("config key '" + key + "' expects an integer, got '" + value + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  const std::string v = detail::lower(value);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw DomainError("config key '" + key + "' expects a boolean, got '" + value + "'");
}

}  // namespace

model::BackboneConfig ExperimentConfig::backbone() const {
  model::BackboneConfig b;
  b.variant = variant;
  b.model_dim = model_dim;
  b.state_dim = state_dim;
  return b;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "variant") {
    variant = model::parse_variant(value);
  } else if (key == "train_len") {
    train_len = to_int<std::size_t>(key, value);
  } else if (key == "test_len") {
    test_len = to_int<std::size_t>(key, value);
  } else if (key == "max_epochs") {
    max_epochs = to_int<std::size_t>(key, value);
  } else if (key == "patience") {
    patience = to_int<std::size_t>(key, value);
  } else if (key == "lr") {
    if (!detail::parse_number(value, lr)) throw DomainError("config key 'lr' expects a number");
  } else if (key == "lr_schedule") {
    if (value != "constant" && value != "cosine") {
      throw DomainError("lr_schedule must be constant or cosine, got '" + value + "'");
    }
    lr_schedule = value;
  } else if (key == "lr_final") {
    if (!detail::parse_number(value, lr_final)) {
      throw DomainError("config key 'lr_final' expects a number");
    }
  } else if (key == "seed") {
    seed = to_int<std::uint64_t>(key, value);
  } else if (key == "model_dim") {
    model_dim = to_int<std::size_t>(key, value);
  } else if (key == "state_dim") {
    state_dim = to_int<std::size_t>(key, value);
  } else if (key == "threads") {
    threads = to_int<std::size_t>(key, value);
  } else if (key == "manifest") {
    manifest = value;
  } else if (key == "out") {
    out = value;
  } else if (key == "test_subject") {
    test_subject = value;
  } else if (key == "write_plots") {
    write_plots = to_bool(key, value);
  } else {
    throw DomainError("unknown config key '" + key + "'");
  }
}

void ExperimentConfig::validate() const {
  if (train_len < 2 || test_len < 2) throw DomainError("segment lengths must be >= 2");
  if (patience < 1) throw DomainError("patience must be >= 1");
  if (max_epochs < 1) throw DomainError("max_epochs must be >= 1");
  if (!(lr > 0.0)) throw DomainError("lr must be > 0");
  if (lr_schedule != "constant" && lr_schedule != "cosine") {
    throw DomainError("lr_schedule must be constant or cosine, got '" + lr_schedule + "'");
  }
  if (!(lr_final > 0.0)) throw DomainError("lr_final must be > 0");
  if (threads < 1) throw DomainError("threads must be >= 1");
  backbone().validate();
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  ExperimentConfig c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = detail::trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected key = value");
    const std::string key(detail::trim(text.substr(0, eq)));
    const std::string value(detail::trim(text.substr(eq + 1)));
    try {
      c.set(key, value);
    } catch (const std::exception& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_config(in, path.string());
}

void write_config(std::ostream& out, const ExperimentConfig& c) {
  out << "variant = " << model::variant_name(c.variant) << '\n'
      << "train_len = " << c.train_len << '\n'
      << "test_len = " << c.test_len << '\n'
      << "max_epochs = " << c.max_epochs << '\n'
      << "patience = " << c.patience << '\n'
      << "lr = " << detail::format_double(c.lr) << '\n'
      << "lr_schedule = " << c.lr_schedule << '\n'
      << "lr_final = " << detail::format_double(c.lr_final) << '\n'
      << "seed = " << c.seed << '\n'
      << "model_dim = " << c.model_dim << '\n'
      << "state_dim = " << c.state_dim << '\n'
      << "threads = " << c.threads << '\n'
      << "manifest = " << c.manifest << '\n'
      << "out = " << c.out << '\n'
      << "test_subject = " << c.test_subject << '\n'
      << "write_plots = " << (c.write_plots ? "true" : "false") << '\n';
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path,
                                         std::optional<std::filesystem::path> data_dir) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::filesystem::path root;
  if (data_dir) {
    root = *data_dir;
  } else if (const char* env = std::getenv("IGBEAT_DATA_DIR"); env && *env) {
    root = env;
  } else {
    root = path.parent_path();
  }
  std::vector<ManifestEntry> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto cols = detail::split(text, ',');
    if (header) {
      header = false;
      if (cols.size() == 2 && cols[0] == "subject_id" && cols[1] == "path") continue;
      throw ParseError(path.string(), line_no, "manifest header must be 'subject_id,path'");
    }
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty()) {
      throw ParseError(path.string(), line_no, "expected subject_id,path");
    }
    ManifestEntry e{std::string(cols[0]), std::filesystem::path(std::string(cols[1]))};
    if (e.path.is_relative()) e.path = root / e.path;
    if (!seen.insert(e.subject_id).second) {
      throw ParseError(path.string(), line_no, "duplicate subject '" + e.subject_id + "'");
    }
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << "subject_id,path\n";
  for (const auto& e : entries) out << e.subject_id << ',' << e.path.generic_string() << '\n';
}

RRSeries load_series(const std::filesystem::path& path) {
  const std::string ext = detail::lower(path.extension().string());
  if (ext == ".hea") {
    const EcgRecord ecg = ingest::read_wfdb(path);
    return preprocess::clean_intervals(preprocess::detect_rpeaks(ecg));
  }
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string first;
  std::getline(in, first);
  in.seekg(0);
  if (detail::trim(first) == "beat_index,peak_time_s,rr_s,was_interpolated") {
    return preprocess::read_rr_csv(in, path.string());
  }
  return preprocess::clean_intervals(ingest::read_rpeaks_csv(in, path.string()));
}

}  // namespace igbeat::harness
