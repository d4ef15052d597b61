#include <fstream>
#include <istream>
#include <iterator>
#include <stdexcept>
#include <string>

#include "igbeat/errors.hpp"
#include "igbeat/ingest.hpp"
#include "text_util.hpp"

namespace igbeat::ingest {
namespace {

// Leading number of tokens like "360/1" or "200(1024)/mV".
double leading_number(std::string_view tok, bool& ok) {
  const auto stop = tok.find_first_of("/(");
  double v = 0.0;
  ok = detail::parse_number(tok.substr(0, stop), v);
  return v;
}

WfdbSignalSpec parse_signal_line(const std::vector<std::string_view>& tok,
                                 const std::string& source, std::size_t line_no) {
  WfdbSignalSpec spec;
  if (tok.size() < 2) throw ParseError(source, line_no, "signal line needs a file name and format");
  spec.file_name = std::string(tok[0]);

  const std::string_view fmt = tok[1];
  if (fmt.find_first_of("x:+") != std::string_view::npos) {
    throw ParseError(source, line_no,
                     "format modifiers (samples per frame, skew, byte offset) are not supported: '" +
                         std::string(fmt) + "'");
  }
  if (!detail::parse_integer(fmt, spec.format)) {
    throw ParseError(source, line_no, "bad signal format '" + std::string(fmt) + "'");
  }
  if (spec.format != 212 && spec.format != 16) {
    throw ParseError(source, line_no,
                     "unsupported storage format " + std::to_string(spec.format) +
                         " (only 212 and 16)");
  }

  bool baseline_given = false;
  if (tok.size() >= 3) {
    std::string_view g = tok[2];
    const auto slash = g.find('/');
    if (slash != std::string_view::npos) {
      spec.units = std::string(g.substr(slash + 1));
      g = g.substr(0, slash);
    }
    const auto paren = g.find('(');
    if (paren != std::string_view::npos) {
      const auto close = g.find(')', paren);
      if (close == std::string_view::npos ||
          !detail::parse_integer(g.substr(paren + 1, close - paren - 1), spec.baseline)) {
        throw ParseError(source, line_no, "bad baseline in '" + std::string(tok[2]) + "'");
      }
      baseline_given = true;
      g = g.substr(0, paren);
    }
    if (!detail::parse_number(g, spec.gain)) {
      throw ParseError(source, line_no, "bad gain '" + std::string(tok[2]) + "'");
    }
    if (spec.gain == 0.0) spec.gain = 200.0;  // WFDB convention for "uncalibrated"
  }
  if (tok.size() >= 5 && !baseline_given) {
    if (!detail::parse_integer(tok[4], spec.baseline)) {
      throw ParseError(source, line_no, "bad ADC zero '" + std::string(tok[4]) + "'");
    }
  }
  if (tok.size() >= 9) {
    for (std::size_t i = 8; i < tok.size(); ++i) {
      if (!spec.description.empty()) spec.description += ' ';
      spec.description += std::string(tok[i]);
    }
  }
  return spec;
}

}  // namespace

WfdbHeader parse_wfdb_header(std::istream& in, const std::string& source) {
  WfdbHeader h;
  std::string line;
  std::size_t line_no = 0;
  bool record_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto tok = detail::split_ws(text);
    if (!record_seen) {
      record_seen = true;
      if (tok.size() < 2) throw ParseError(source, line_no, "record line needs a name and signal count");
      if (tok[0].find('/') != std::string_view::npos) {
        throw ParseError(source, line_no, "multi-segment records are not supported");
      }
      h.record_name = std::string(tok[0]);
      if (!detail::parse_integer(tok[1], h.n_signals) || h.n_signals == 0) {
        throw ParseError(source, line_no, "bad signal count '" + std::string(tok[1]) + "'");
      }
      if (tok.size() >= 3) {
        bool ok = false;
        h.fs = leading_number(tok[2], ok);
        if (!ok || !(h.fs > 0.0)) {
          throw ParseError(source, line_no, "bad sampling frequency '" + std::string(tok[2]) + "'");
        }
      }
      if (tok.size() >= 4 && !detail::parse_integer(tok[3], h.n_samples)) {
        throw ParseError(source, line_no, "bad sample count '" + std::string(tok[3]) + "'");
      }
      continue;
    }
    if (h.signals.size() == h.n_signals) continue;  // trailing info lines
    h.signals.push_back(parse_signal_line(tok, source, line_no));
  }
  if (!record_seen) throw ParseError(source, line_no, "empty header");
  if (h.signals.size() != h.n_signals) {
    throw ParseError(source, line_no,
                     "header declares " + std::to_string(h.n_signals) + " signals but describes " +
                         std::to_string(h.signals.size()));
  }
  for (const auto& s : h.signals) {
    if (s.file_name != h.signals[0].file_name || s.format != h.signals[0].format) {
      throw ParseError(source, line_no, "signals split across files or formats are not supported");
    }
  }
  return h;
}

std::vector<int> decode_format212(std::span<const std::uint8_t> bytes, std::size_t count) {
  const std::size_t needed = (count / 2) * 3 + (count % 2) * 2;
  if (bytes.size() < needed) {
    throw IoError("format 212 data truncated: need " + std::to_string(needed) + " bytes, have " +
                  std::to_string(bytes.size()));
  }
  std::vector<int> out(count);
  auto sext = [](int v) { return (v & 0x800) ? v - 0x1000 : v; };
  std::size_t b = 0;
  for (std::size_t i = 0; i < count; i += 2, b += 3) {
    const int b0 = bytes[b];
    const int b1 = bytes[b + 1];
    out[i] = sext(b0 | ((b1 & 0x0F) << 8));
    if (i + 1 < count) out[i + 1] = sext(bytes[b + 2] | ((b1 & 0xF0) << 4));
  }
  return out;
}

std::vector<std::uint8_t> encode_format212(std::span<const int> samples) {
  std::vector<std::uint8_t> out;
  out.reserve(samples.size() / 2 * 3 + 2);
  for (std::size_t i = 0; i < samples.size(); i += 2) {
    const int a = samples[i];
    if (a < -2048 || a > 2047) throw std::out_of_range("sample outside 12-bit range");
    const unsigned ua = static_cast<unsigned>(a) & 0xFFFu;
    unsigned ub = 0;
    if (i + 1 < samples.size()) {
      const int b = samples[i + 1];
      if (b < -2048 || b > 2047) throw std::out_of_range("sample outside 12-bit range");
      ub = static_cast<unsigned>(b) & 0xFFFu;
    }
    out.push_back(static_cast<std::uint8_t>(ua & 0xFFu));
    out.push_back(static_cast<std::uint8_t>(((ua >> 8) & 0x0Fu) | ((ub >> 4) & 0xF0u)));
    if (i + 1 < samples.size()) out.push_back(static_cast<std::uint8_t>(ub & 0xFFu));
  }
  return out;
}

std::vector<int> decode_format16(std::span<const std::uint8_t> bytes, std::size_t count) {
  if (bytes.size() < 2 * count) {
    throw IoError("format 16 data truncated: need " + std::to_string(2 * count) +
                  " bytes, have " + std::to_string(bytes.size()));
  }
  std::vector<int> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto u = static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
    out[i] = static_cast<std::int16_t>(u);
  }
  return out;
}

EcgRecord read_wfdb(const std::filesystem::path& header_path) {
  std::ifstream hin(header_path);
  if (!hin) throw IoError("cannot open " + header_path.string());
  const WfdbHeader h = parse_wfdb_header(hin, header_path.string());
  const WfdbSignalSpec& sig = h.signals.front();

  const auto data_path = header_path.parent_path() / sig.file_name;
  std::ifstream din(data_path, std::ios::binary);
  if (!din) throw IoError("cannot open signal file " + data_path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(din),
                                        std::istreambuf_iterator<char>()};

  std::size_t total = h.n_samples * h.n_signals;
  if (h.n_samples == 0) {
    total = sig.format == 212 ? bytes.size() * 2 / 3 : bytes.size() / 2;
    total -= total % h.n_signals;
  }
  const std::vector<int> adu =
      sig.format == 212 ? decode_format212(bytes, total) : decode_format16(bytes, total);

  EcgRecord rec;
  rec.record_id = h.record_name;
  rec.fs = h.fs;
  rec.gain = sig.gain;
  rec.baseline = sig.baseline;
  rec.samples.reserve(total / h.n_signals);
  for (std::size_t i = 0; i < total; i += h.n_signals) {
    rec.samples.push_back((adu[i] - sig.baseline) / sig.gain);
  }
  rec.validate();
  return rec;
}

}  // namespace igbeat::ingest
