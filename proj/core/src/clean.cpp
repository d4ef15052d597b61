#include <algorithm>
#include <string>

#include "igbeat/errors.hpp"
#include "igbeat/preprocess.hpp"

namespace igbeat::preprocess {

RRSeries clean_interval_values(std::span<const double> intervals, double t0) {
  const std::size_t n = intervals.size();
  std::vector<bool> valid(n);
  std::vector<double> knot_x, knot_y;
  for (std::size_t i = 0; i < n; ++i) {
    valid[i] = intervals[i] >= kMinValidInterval && intervals[i] <= kMaxValidInterval;
    if (valid[i]) {
      knot_x.push_back(static_cast<double>(i));
      knot_y.push_back(intervals[i]);
    }
  }
  if (knot_x.size() < 2) {
    throw DomainError("need at least 2 valid R-R intervals, found " +
                      std::to_string(knot_x.size()));
  }

  std::vector<double> cleaned(intervals.begin(), intervals.end());
  if (knot_x.size() < n) {
    const Pchip interp(knot_x, knot_y);
    const double first = knot_x.front();
    const double last = knot_x.back();
    for (std::size_t i = 0; i < n; ++i) {
      if (valid[i]) continue;
      const double xi = static_cast<double>(i);
      double v;
      if (xi < first) {
        v = knot_y.front();
      } else if (xi > last) {
        v = knot_y.back();
      } else {
        v = interp(xi);
      }
      cleaned[i] = std::clamp(v, kMinValidInterval, kMaxValidInterval);
    }
  }

  RRSeries out = RRSeries::from_intervals(std::move(cleaned), t0);
  out.valid_mask = valid;
  out.interpolated.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) out.interpolated[i] = !valid[i];
  return out;
}

RRSeries clean_intervals(std::span<const double> peak_times) {
  if (peak_times.size() < 3) {
    throw DomainError("need at least 3 R peaks, got " + std::to_string(peak_times.size()));
  }
  std::vector<double> intervals(peak_times.size() - 1);
  for (std::size_t i = 0; i + 1 < peak_times.size(); ++i) {
    intervals[i] = peak_times[i + 1] - peak_times[i];
    if (!(intervals[i] > 0.0)) {
      throw DomainError("peak times are not strictly increasing at index " +
                        std::to_string(i + 1));
    }
  }
  return clean_interval_values(intervals, peak_times.front());
}

}  // namespace igbeat::preprocess
