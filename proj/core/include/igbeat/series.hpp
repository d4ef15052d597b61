#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace igbeat {

// Uniformly sampled single-channel ECG in physical units (mV).
struct EcgRecord {
  std::vector<double> samples;
  double fs = 0.0;  // Hz
  std::string record_id;
  double gain = 1.0;      // adu per mV of the source, 1 when already physical
  double baseline = 0.0;  // adu

  double duration() const { return fs > 0.0 ? static_cast<double>(samples.size()) / fs : 0.0; }
  void validate() const;
};

// R-peak times and the intervals between consecutive peaks. intervals[i] is
// the gap from peak i to peak i+1; valid_mask[i] tells whether that interval
// was inside the physiological window before cleaning, and interpolated[i]
// whether its value was replaced.
struct RRSeries {
  std::vector<double> peak_times;  // s, strictly increasing
  std::vector<double> intervals;   // s
  std::vector<bool> valid_mask;
  std::vector<bool> interpolated;

  std::size_t size() const { return intervals.size(); }

  static RRSeries from_peaks(std::vector<double> peak_times);
  // Builds peak times as a cumulative sum of `intervals` starting at `t0`.
  static RRSeries from_intervals(std::vector<double> intervals, double t0 = 0.0);
  void validate() const;
};

}  // namespace igbeat
