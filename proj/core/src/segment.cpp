#include <algorithm>
#include <ostream>
#include <string>

#include "igbeat/errors.hpp"
#include "igbeat/harness.hpp"

namespace igbeat::harness {

std::vector<Segment> segment(std::span<const double> intervals, std::size_t len,
                             std::ostream* warn, const std::string& label) {
  if (len < 2) throw DomainError("segment length must be >= 2");
  std::vector<Segment> out;
  for (std::size_t start = 0; start + len <= intervals.size(); start += len) {
    out.emplace_back(intervals.begin() + static_cast<std::ptrdiff_t>(start),
                     intervals.begin() + static_cast<std::ptrdiff_t>(start + len));
  }
  if (out.empty() && warn) {
    *warn << "warning: " << (label.empty() ? std::string("series") : label) << " has "
          << intervals.size() << " intervals, fewer than one segment of " << len << '\n';
  }
  return out;
}

std::vector<Segment> segment(const RRSeries& series, std::size_t len, std::ostream* warn,
                             const std::string& label) {
  return segment(series.intervals, len, warn, label);
}

std::vector<Fold> loso_folds(std::vector<std::string> subjects) {
  std::sort(subjects.begin(), subjects.end());
  if (std::adjacent_find(subjects.begin(), subjects.end()) != subjects.end()) {
    throw DomainError("duplicate subject id in manifest");
  }
  if (subjects.size() < 3) {
    throw DomainError("leave-one-subject-out needs at least 3 subjects, got " +
                      std::to_string(subjects.size()));
  }
  const std::size_t n = subjects.size();
  std::vector<Fold> folds;
  folds.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Fold f;
    f.test = subjects[i];
    f.validation = subjects[(i + 1) % n];
    for (const auto& s : subjects) {
      if (s != f.test && s != f.validation) f.train.push_back(s);
    }
    folds.push_back(std::move(f));
  }
  return folds;
}

}  // namespace igbeat::harness
