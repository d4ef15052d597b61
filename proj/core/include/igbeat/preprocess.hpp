#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "igbeat/series.hpp"

namespace igbeat::preprocess {

inline constexpr double kMinValidInterval = 0.3;  // s
inline constexpr double kMaxValidInterval = 2.0;  // s

// Monotone piecewise cubic Hermite interpolant (Fritsch-Carlson slopes).
class Pchip {
 public:
  // Needs >= 2 knots with strictly increasing abscissae.
  Pchip(std::vector<double> xs, std::vector<double> ys);

  double operator()(double x) const;
  std::vector<double> operator()(std::span<const double> xs) const;

  const std::vector<double>& slopes() const { return slopes_; }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
  std::vector<double> slopes_;
};

std::vector<double> pchip_eval(std::span<const double> knot_x, std::span<const double> knot_y,
                               std::span<const double> query);

struct PanTompkinsOptions {
  double low_cut_hz = 5.0;
  double high_cut_hz = 15.0;
  double integration_window_s = 0.150;
  double refractory_s = 0.200;
  double t_wave_window_s = 0.360;
  double searchback_factor = 1.66;
  double refine_window_s = 0.075;
  double learning_period_s = 2.0;
};

// Intermediate signals, exposed for inspection and plotting.
struct PanTompkinsTrace {
  std::vector<double> bandpassed;
  std::vector<double> derivative;
  std::vector<double> squared;
  std::vector<double> integrated;
};

// R-peak times in seconds, strictly increasing, gaps >= refractory period.
std::vector<double> detect_rpeaks(const EcgRecord& ecg, const PanTompkinsOptions& options = {},
                                  PanTompkinsTrace* trace = nullptr);

// Flags intervals outside [0.3, 2.0] s and replaces them with a PCHIP
// interpolant over the valid intervals (index domain). Invalid runs at either
// end take the nearest valid value. Peak times are rebuilt from the cleaned
// intervals starting at the first detected peak.
RRSeries clean_intervals(std::span<const double> peak_times);
RRSeries clean_interval_values(std::span<const double> intervals, double t0 = 0.0);

// CSV with header "beat_index,peak_time_s,rr_s,was_interpolated"; row i
// describes interval i ending at peak i+1.
void write_rr_csv(std::ostream& out, const RRSeries& series);
void write_rr_csv(const std::filesystem::path& path, const RRSeries& series);
RRSeries read_rr_csv(std::istream& in, const std::string& source = "<stream>");
RRSeries read_rr_csv(const std::filesystem::path& path);

}  // namespace igbeat::preprocess
