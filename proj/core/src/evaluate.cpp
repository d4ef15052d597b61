#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "igbeat/errors.hpp"
#include "igbeat/harness.hpp"
#include "text_util.hpp"

namespace igbeat::harness {

double mean(std::span<const double> v) {
  if (v.empty()) throw DomainError("mean of an empty list");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<double> FoldResult::ksd() const {
  std::vector<double> out;
  out.reserve(reports.size());
  for (const auto& r : reports) out.push_back(r.ksd);
  return out;
}

double FoldResult::mean_ksd() const { return mean(ksd()); }
double FoldResult::sd_ksd() const { return sample_sd(ksd()); }

double FoldResult::pass_fraction() const {
  if (reports.empty()) return 0.0;
  std::size_t k = 0;
  for (const auto& r : reports) k += r.pass ? 1 : 0;
  return static_cast<double>(k) / static_cast<double>(reports.size());
}

FoldResult evaluate_trajectories(std::span<const ig::IGTrajectory> trajectories,
                                 const std::string& subject_id, const std::string& variant,
                                 std::size_t segment_len) {
  FoldResult r;
  r.subject_id = subject_id;
  r.variant = variant;
  r.segment_len = segment_len;
  for (const auto& t : trajectories) r.reports.push_back(eval::ks_distance(eval::rescale(t)));
  return r;
}

FoldResult evaluate(model::ModelParameters& params, const model::BackboneConfig& config,
                    std::span<const Segment> test_segments, const std::string& subject_id,
                    std::size_t segment_len) {
  if (test_segments.empty()) throw DomainError("no test segments for subject " + subject_id);
  std::vector<ig::IGTrajectory> trajs;
  trajs.reserve(test_segments.size());
  for (const auto& s : test_segments) trajs.push_back(model::forward(s, params, config));
  return evaluate_trajectories(trajs, subject_id, std::string(model::variant_name(config.variant)),
                               segment_len);
}

void write_fold_csv(std::ostream& out, const FoldResult& result) {
  out << "subject_id,variant,segment_index,ksd,bound,pass\n";
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    const auto& r = result.reports[i];
    out << result.subject_id << ',' << result.variant << ',' << i << ','
        << detail::format_double(r.ksd) << ',' << detail::format_double(r.bound) << ','
        << (r.pass ? 1 : 0) << '\n';
  }
}

std::vector<FoldRow> read_fold_csv(std::istream& in, const std::string& source) {
  std::vector<FoldRow> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    if (header) {
      header = false;
      if (text != "subject_id,variant,segment_index,ksd,bound,pass") {
        throw ParseError(source, line_no, "unexpected fold CSV header");
      }
      continue;
    }
    const auto c = detail::split(text, ',');
    FoldRow r;
    int pass = 0;
    if (c.size() != 6 || !detail::parse_integer(c[2], r.segment_index) ||
        !detail::parse_number(c[3], r.ksd) || !detail::parse_number(c[4], r.bound) ||
        !detail::parse_integer(c[5], pass) || !(r.bound > 0.0)) {
      throw ParseError(source, line_no, "malformed fold row '" + std::string(text) + "'");
    }
    r.subject_id = std::string(c[0]);
    r.variant = std::string(c[1]);
    r.pass = pass != 0;
    // The bound is 1.36 / sqrt(n) with n = segment_len - 1 rescaled samples.
    const double n = (eval::kKs5Percent / r.bound) * (eval::kKs5Percent / r.bound);
    r.segment_len = static_cast<std::size_t>(std::llround(n)) + 1;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<FoldRow> read_fold_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open fold CSV " + path.string());
  return read_fold_csv(in, path.string());
}

}  // namespace igbeat::harness
