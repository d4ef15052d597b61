#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "igbeat/series.hpp"

namespace igbeat::ingest {

struct WfdbSignalSpec {
  std::string file_name;
  int format = 0;
  double gain = 200.0;  // adu per physical unit
  int baseline = 0;     // adu
  std::string units = "mV";
  std::string description;
};

struct WfdbHeader {
  std::string record_name;
  std::size_t n_signals = 0;
  double fs = 250.0;
  std::size_t n_samples = 0;  // per signal; 0 when not given
  std::vector<WfdbSignalSpec> signals;
};

WfdbHeader parse_wfdb_header(std::istream& in, const std::string& source = "<header>");

// Reads the first signal of a single-segment record; `header_path` is the
// .hea file, the signal file is resolved relative to it.
EcgRecord read_wfdb(const std::filesystem::path& header_path);

// Two 12-bit two's-complement samples per three bytes:
//   a = b0 | (b1 & 0x0F) << 8,  b = b2 | (b1 & 0xF0) << 4.
// A trailing odd sample occupies two bytes.
std::vector<int> decode_format212(std::span<const std::uint8_t> bytes, std::size_t count);
std::vector<std::uint8_t> encode_format212(std::span<const int> samples);
std::vector<int> decode_format16(std::span<const std::uint8_t> bytes, std::size_t count);

// One time per line, or beat_index,time_s columns (also accepts the R-R CSV
// written by preprocess). An optional header row is skipped.
std::vector<double> read_rpeaks_csv(std::istream& in, const std::string& source = "<stream>");
std::vector<double> read_rpeaks_csv(const std::filesystem::path& path);

// Raw ECG: either one value column (mV) with `fs` supplied, or time_s,value
// columns with fs inferred from the time step.
EcgRecord read_ecg_csv(std::istream& in, double fs, const std::string& source = "<stream>");
EcgRecord read_ecg_csv(const std::filesystem::path& path, double fs = 0.0);
void write_ecg_csv(std::ostream& out, const EcgRecord& ecg);

// Locale-independent number parsing; returns false on trailing garbage.
bool parse_double(std::string_view text, double& out);

}  // namespace igbeat::ingest
