#include "igbeat/series.hpp"

#include <cmath>
#include <string>

#include "igbeat/errors.hpp"

namespace igbeat {

void EcgRecord::validate() const {
  if (!(fs > 0.0) || !std::isfinite(fs)) throw DomainError("ECG sample rate must be > 0");
  if (samples.empty()) throw DomainError("ECG record '" + record_id + "' has no samples");
}

RRSeries RRSeries::from_peaks(std::vector<double> peak_times) {
  RRSeries s;
  s.peak_times = std::move(peak_times);
  for (std::size_t i = 1; i < s.peak_times.size(); ++i) {
    s.intervals.push_back(s.peak_times[i] - s.peak_times[i - 1]);
  }
  s.valid_mask.assign(s.intervals.size(), true);
  s.interpolated.assign(s.intervals.size(), false);
  s.validate();
  return s;
}

RRSeries RRSeries::from_intervals(std::vector<double> intervals, double t0) {
  RRSeries s;
  s.peak_times.reserve(intervals.size() + 1);
  s.peak_times.push_back(t0);
  double t = t0;
  for (double x : intervals) {
    t += x;
    s.peak_times.push_back(t);
  }
  s.intervals = std::move(intervals);
  s.valid_mask.assign(s.intervals.size(), true);
  s.interpolated.assign(s.intervals.size(), false);
  s.validate();
  return s;
}

void RRSeries::validate() const {
  if (!intervals.empty() && peak_times.size() != intervals.size() + 1) {
    throw DomainError("R-R series needs one more peak than intervals");
  }
  if (valid_mask.size() != intervals.size() || interpolated.size() != intervals.size()) {
    throw DomainError("R-R series flag vectors do not match the interval count");
  }
  for (std::size_t i = 1; i < peak_times.size(); ++i) {
    if (!(peak_times[i] > peak_times[i - 1])) {
      throw DomainError("peak times are not strictly increasing at index " + std::to_string(i));
    }
  }
  for (double x : intervals) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("non-positive R-R interval");
  }
}

}  // namespace igbeat
