#include <cmath>
#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "igbeat/errors.hpp"
#include "igbeat/ingest.hpp"
#include "igbeat/preprocess.hpp"
#include "text_util.hpp"

namespace igbeat {
namespace preprocess {

void write_rr_csv(std::ostream& out, const RRSeries& s) {
  s.validate();
  out << "beat_index,peak_time_s,rr_s,was_interpolated\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << i << ',' << detail::format_double(s.peak_times[i + 1]) << ','
        << detail::format_double(s.intervals[i]) << ',' << (s.interpolated[i] ? 1 : 0) << '\n';
  }
}

void write_rr_csv(const std::filesystem::path& path, const RRSeries& s) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_rr_csv(out, s);
  if (!out) throw IoError("failed writing " + path.string());
}

RRSeries read_rr_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  RRSeries s;
  std::vector<double> ends;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    if (!header_seen) {
      if (text != "beat_index,peak_time_s,rr_s,was_interpolated") {
        throw ParseError(source, line_no, "unexpected R-R CSV header '" + std::string(text) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto cols = detail::split(text, ',');
    double t = 0.0, rr = 0.0;
    int flag = 0;
    if (cols.size() != 4 || !detail::parse_number(cols[1], t) ||
        !detail::parse_number(cols[2], rr) || !detail::parse_integer(cols[3], flag) ||
        (flag != 0 && flag != 1)) {
      throw ParseError(source, line_no, "malformed R-R row '" + std::string(text) + "'");
    }
    if (!(rr > 0.0)) throw ParseError(source, line_no, "non-positive R-R interval");
    if (!ends.empty() && !(t > ends.back())) {
      throw ParseError(source, line_no, "peak times are not increasing");
    }
    ends.push_back(t);
    s.intervals.push_back(rr);
    s.interpolated.push_back(flag == 1);
    s.valid_mask.push_back(flag == 0);
  }
  if (!header_seen) throw ParseError(source, line_no, "empty R-R CSV");
  if (!ends.empty()) {
    s.peak_times.push_back(ends.front() - s.intervals.front());
    s.peak_times.insert(s.peak_times.end(), ends.begin(), ends.end());
  }
  return s;
}

RRSeries read_rr_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_rr_csv(in, path.string());
}

}  // namespace preprocess

namespace ingest {

bool parse_double(std::string_view text, double& out) { return detail::parse_number(text, out); }

std::vector<double> read_rpeaks_csv(std::istream& in, const std::string& source) {
  std::vector<std::pair<std::size_t, std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    rows.emplace_back(line_no, line);
  }
  if (rows.empty()) return {};

  std::size_t first = 0;
  std::size_t column = 0;
  const auto head = detail::split(rows[0].second, ',');
  double probe = 0.0;
  bool has_header = false;
  for (auto cell : head) has_header = has_header || !detail::parse_number(cell, probe);
  if (has_header) {
    first = 1;
    std::vector<std::string> names;
    for (auto cell : head) names.push_back(detail::lower(cell));
    const bool rr_file = std::find(names.begin(), names.end(), "rr_s") != names.end();
    if (rr_file) {
      std::string text;
      for (const auto& r : rows) text += r.second + "\n";
      std::istringstream again(text);
      return preprocess::read_rr_csv(again, source).peak_times;
    }
    bool found = false;
    for (std::size_t c = 0; c < names.size() && !found; ++c) {
      if (names[c].find("time") != std::string::npos) {
        column = c;
        found = true;
      }
    }
    if (!found) {
      if (names.size() != 1) {
        throw ParseError(source, rows[0].first, "no time column in header");
      }
      column = 0;
    }
  } else {
    column = head.size() >= 2 ? 1 : 0;
  }

  std::vector<double> times;
  for (std::size_t r = first; r < rows.size(); ++r) {
    const auto cols = detail::split(rows[r].second, ',');
    double t = 0.0;
    if (column >= cols.size() || !detail::parse_number(cols[column], t) || !std::isfinite(t)) {
      throw ParseError(source, rows[r].first, "cannot read a peak time from '" +
                                                  std::string(detail::trim(rows[r].second)) + "'");
    }
    if (!times.empty() && !(t > times.back())) {
      throw ParseError(source, rows[r].first, "peak times must be strictly increasing");
    }
    times.push_back(t);
  }
  return times;
}

std::vector<double> read_rpeaks_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_rpeaks_csv(in, path.string());
}

EcgRecord read_ecg_csv(std::istream& in, double fs, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> times, values;
  std::size_t width = 0;
  bool first_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    const auto cols = detail::split(text, ',');
    std::vector<double> nums(cols.size());
    bool ok = true;
    for (std::size_t c = 0; c < cols.size(); ++c) ok = ok && detail::parse_number(cols[c], nums[c]);
    if (!ok) {
      if (first_row) {
        first_row = false;
        continue;
      }
      throw ParseError(source, line_no, "malformed ECG row '" + std::string(text) + "'");
    }
    first_row = false;
    if (width == 0) {
      width = cols.size();
      if (width > 2) throw ParseError(source, line_no, "expected 1 or 2 ECG columns");
    } else if (cols.size() != width) {
      throw ParseError(source, line_no, "inconsistent column count");
    }
    if (width == 2) {
      times.push_back(nums[0]);
      values.push_back(nums[1]);
    } else {
      values.push_back(nums[0]);
    }
  }
  EcgRecord rec;
  rec.record_id = source;
  if (width == 2 && times.size() >= 2) {
    const double span = times.back() - times.front();
    if (!(span > 0.0)) throw ParseError(source, line_no, "ECG times do not increase");
    fs = static_cast<double>(times.size() - 1) / span;
  }
  if (!(fs > 0.0)) {
    throw DomainError(source + ": sample rate unknown; pass fs for single-column ECG files");
  }
  rec.fs = fs;
  rec.samples = std::move(values);
  rec.validate();
  return rec;
}

EcgRecord read_ecg_csv(const std::filesystem::path& path, double fs) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  EcgRecord rec = read_ecg_csv(in, fs, path.string());
  rec.record_id = path.stem().string();
  return rec;
}

void write_ecg_csv(std::ostream& out, const EcgRecord& ecg) {
  out << "time_s,value_mv\n";
  for (std::size_t i = 0; i < ecg.samples.size(); ++i) {
    out << detail::format_double(static_cast<double>(i) / ecg.fs) << ','
        << detail::format_double(ecg.samples[i]) << '\n';
  }
}

}  // namespace ingest
}  // namespace igbeat
