#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <span>
#include <vector>

#include "igbeat/igdist.hpp"
#include "igbeat/series.hpp"

namespace igbeat::synth {

inline constexpr double kMinMu = 0.3;          // s, strict lower bound
inline constexpr double kMinSigma = 0.0111;    // s, about exp(-9 / 2)
inline constexpr double kMaxSigma = 2.118;     // s, about exp(1.5 / 2)

struct RegimeSegment {
  std::size_t start_beat = 0;
  double mu = 0.8;
  double sigma = 0.05;
};

// Generating (mu, sigma) schedule. Sinusoidal modulation acts on mu and is a
// function of elapsed time, like respiratory sinus arrhythmia.
struct ParamTrajectory {
  enum class Kind { kConstant, kSinusoidal, kRegimeSwitch };

  Kind kind = Kind::kConstant;
  double mu = 0.8;
  double sigma = 0.05;
  double amplitude = 0.0;  // s, sinusoidal only
  double period = 4.0;     // s, sinusoidal only
  double phase = 0.0;      // rad, sinusoidal only
  std::vector<RegimeSegment> regimes;  // sorted by start_beat, first at 0

  static ParamTrajectory constant(double mu, double sigma);
  static ParamTrajectory sinusoidal(double mu, double sigma, double amplitude, double period,
                                    double phase = 0.0);
  static ParamTrajectory regime_switch(std::vector<RegimeSegment> regimes);

  // Parameters for the interval that starts at beat `beat`, time `t` seconds.
  ig::IGParams at(std::size_t beat, double t) const;
  void validate() const;
};

struct GeneratedRR {
  RRSeries series;
  // params[i] generated series.intervals[i], which is also targets[i].
  ig::IGTrajectory truth;
};

// n_beats - 1 intervals sampled sequentially; interval i uses the parameters
// at beat i and the time of that beat. Peak times start at 0.
GeneratedRR generate_rr(const ParamTrajectory& traj, std::size_t n_beats, Rng& rng);

struct EcgOptions {
  double r_amplitude = 1.0;   // mV
  double r_width = 0.008;     // s, Gaussian sd
  double p_amplitude = 0.15;
  double p_offset = -0.16;
  double p_width = 0.025;
  double t_amplitude = 0.3;
  double t_offset = 0.25;
  double t_width = 0.04;
  double padding = 0.5;  // s of signal after the last peak
};

// Sum of Gaussian P/R/T bumps plus white noise at `snr_db` relative to the
// clean signal power. Duration defaults to the last peak plus padding.
EcgRecord generate_ecg(std::span<const double> peak_times, double fs, double snr_db, Rng& rng,
                       const EcgOptions& options = {},
                       std::optional<double> duration = std::nullopt);

// Randomized cohort of subjects, each with its own trajectory drawn from the
// ranges below. Subject k uses a generator seeded from (seed, k), so cohorts
// are reproducible and a subject does not depend on how many others exist.
struct CohortOptions {
  std::size_t n_subjects = 30;
  std::size_t n_beats = 3000;
  ParamTrajectory::Kind kind = ParamTrajectory::Kind::kSinusoidal;
  double mu_lo = 0.7, mu_hi = 1.0;
  double sigma_lo = 0.024, sigma_hi = 0.036;
  double amplitude_lo = 0.08, amplitude_hi = 0.12;
  double period_lo = 3.5, period_hi = 4.5;

  void validate() const;
};

struct Subject {
  std::string id;
  ParamTrajectory trajectory;
  GeneratedRR data;
};

std::vector<Subject> generate_cohort(const CohortOptions& options, std::uint64_t seed);

}  // namespace igbeat::synth
