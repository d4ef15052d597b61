#include "igbeat/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "igbeat/errors.hpp"

namespace igbeat::synth {
namespace {

void check_params(double mu, double sigma, const char* what) {
  if (!(mu > kMinMu) || !(sigma >= kMinSigma && sigma <= kMaxSigma)) {
    throw DomainError(std::string(what) + ": need mu > 0.3 and sigma in [0.0111, 2.118], got mu=" +
                      std::to_string(mu) + " sigma=" + std::to_string(sigma));
  }
}

}  // namespace

ParamTrajectory ParamTrajectory::constant(double mu, double sigma) {
  ParamTrajectory t;
  t.kind = Kind::kConstant;
  t.mu = mu;
  t.sigma = sigma;
  t.validate();
  return t;
}

ParamTrajectory ParamTrajectory::sinusoidal(double mu, double sigma, double amplitude,
                                            double period, double phase) {
  ParamTrajectory t;
  t.kind = Kind::kSinusoidal;
  t.mu = mu;
  t.sigma = sigma;
  t.amplitude = amplitude;
  t.period = period;
  t.phase = phase;
  t.validate();
  return t;
}

ParamTrajectory ParamTrajectory::regime_switch(std::vector<RegimeSegment> regimes) {
  ParamTrajectory t;
  t.kind = Kind::kRegimeSwitch;
  t.regimes = std::move(regimes);
  t.validate();
  return t;
}

ig::IGParams ParamTrajectory::at(std::size_t beat, double t) const {
  switch (kind) {
    case Kind::kConstant:
      return {mu, sigma};
    case Kind::kSinusoidal:
      return {mu + amplitude * std::sin(2.0 * std::numbers::pi * t / period + phase), sigma};
    case Kind::kRegimeSwitch: {
      auto it = std::upper_bound(regimes.begin(), regimes.end(), beat,
                                 [](std::size_t b, const RegimeSegment& r) { return b < r.start_beat; });
      const RegimeSegment& r = *std::prev(it);
      return {r.mu, r.sigma};
    }
  }
  return {mu, sigma};
}

void ParamTrajectory::validate() const {
  switch (kind) {
    case Kind::kConstant:
      check_params(mu, sigma, "constant trajectory");
      break;
    case Kind::kSinusoidal:
      if (!(period > 0.0) || !(amplitude >= 0.0)) {
        throw DomainError("sinusoidal trajectory needs period > 0 and amplitude >= 0");
      }
      // extremes of the modulation
      check_params(mu - amplitude, sigma, "sinusoidal trajectory");
      check_params(mu + amplitude, sigma, "sinusoidal trajectory");
      break;
    case Kind::kRegimeSwitch:
      if (regimes.empty() || regimes.front().start_beat != 0) {
        throw DomainError("regime schedule must start at beat 0");
      }
      for (std::size_t i = 0; i < regimes.size(); ++i) {
        if (i > 0 && regimes[i].start_beat <= regimes[i - 1].start_beat) {
          throw DomainError("regime start beats must increase");
        }
        check_params(regimes[i].mu, regimes[i].sigma, "regime");
      }
      break;
  }
}

GeneratedRR generate_rr(const ParamTrajectory& traj, std::size_t n_beats, Rng& rng) {
  traj.validate();
  if (n_beats < 2) throw DomainError("generate_rr needs at least 2 beats");
  const std::size_t n = n_beats - 1;
  std::vector<double> intervals(n);
  GeneratedRR out;
  out.truth.params.resize(n);
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const ig::IGParams p = traj.at(i, t);
    out.truth.params[i] = p;
    intervals[i] = ig::sample(p, rng);
    t += intervals[i];
  }
  out.truth.targets = intervals;
  out.series = RRSeries::from_intervals(std::move(intervals), 0.0);
  return out;
}

EcgRecord generate_ecg(std::span<const double> peak_times, double fs, double snr_db, Rng& rng,
                       const EcgOptions& o, std::optional<double> duration) {
  if (!(fs >= 100.0)) throw DomainError("generate_ecg needs fs >= 100 Hz");
  for (std::size_t i = 1; i < peak_times.size(); ++i) {
    if (!(peak_times[i] > peak_times[i - 1])) {
      throw DomainError("peak times must be strictly increasing");
    }
  }
  double total = duration.value_or(peak_times.empty() ? 10.0 : peak_times.back() + o.padding);
  if (!(total > 0.0)) throw DomainError("ECG duration must be positive");
  const auto n = static_cast<std::size_t>(std::ceil(total * fs));

  std::vector<double> clean(n, 0.0);
  auto add_bump = [&](double center, double amp, double width) {
    const double reach = 5.0 * width;
    const auto lo = static_cast<long>(std::floor((center - reach) * fs));
    const auto hi = static_cast<long>(std::ceil((center + reach) * fs));
    for (long i = std::max(0L, lo); i <= hi && i < static_cast<long>(n); ++i) {
      const double z = (static_cast<double>(i) / fs - center) / width;
      clean[static_cast<std::size_t>(i)] += amp * std::exp(-0.5 * z * z);
    }
  };
  for (double tp : peak_times) {
    add_bump(tp + o.p_offset, o.p_amplitude, o.p_width);
    add_bump(tp, o.r_amplitude, o.r_width);
    add_bump(tp + o.t_offset, o.t_amplitude, o.t_width);
  }

  double power = 0.0;
  for (double v : clean) power += v * v;
  power /= static_cast<double>(n);
  // With no beats there is no signal power to refer to; use the power of a
  // nominal 1 Hz rhythm so the noise floor stays comparable.
  if (!(power > 0.0)) {
    const double rp = std::sqrt(std::numbers::pi);
    power = rp * (o.r_amplitude * o.r_amplitude * o.r_width +
                  o.p_amplitude * o.p_amplitude * o.p_width +
                  o.t_amplitude * o.t_amplitude * o.t_width);
  }
  const double noise_sd = std::sqrt(power / std::pow(10.0, snr_db / 10.0));

  std::normal_distribution<double> gauss(0.0, noise_sd);
  EcgRecord rec;
  rec.fs = fs;
  rec.record_id = "synthetic";
  rec.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) rec.samples[i] = clean[i] + gauss(rng);
  return rec;
}

}  // namespace igbeat::synth

namespace igbeat::synth {

void CohortOptions::validate() const {
  if (n_subjects == 0) throw DomainError("cohort needs at least one subject");
  if (n_beats < 2) throw DomainError("cohort needs at least 2 beats per subject");
  if (!(mu_lo <= mu_hi && sigma_lo <= sigma_hi && amplitude_lo <= amplitude_hi &&
        period_lo <= period_hi)) {
    throw DomainError("cohort ranges must have lo <= hi");
  }
}

std::vector<Subject> generate_cohort(const CohortOptions& o, std::uint64_t seed) {
  o.validate();
  std::vector<Subject> out;
  out.reserve(o.n_subjects);
  const int width = o.n_subjects > 99 ? 3 : 2;
  for (std::size_t k = 0; k < o.n_subjects; ++k) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(k)};
    Rng rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    const double mu = draw(o.mu_lo, o.mu_hi);
    const double sigma = draw(o.sigma_lo, o.sigma_hi);
    ParamTrajectory traj;
    switch (o.kind) {
      case ParamTrajectory::Kind::kConstant:
        traj = ParamTrajectory::constant(mu, sigma);
        break;
      case ParamTrajectory::Kind::kSinusoidal: {
        const double amp = draw(o.amplitude_lo, o.amplitude_hi);
        const double period = draw(o.period_lo, o.period_hi);
        const double phase = draw(0.0, 2.0 * std::numbers::pi);
        traj = ParamTrajectory::sinusoidal(mu, sigma, amp, period, phase);
        break;
      }
      case ParamTrajectory::Kind::kRegimeSwitch: {
        const double mu2 = draw(o.mu_lo, o.mu_hi);
        const double sigma2 = draw(o.sigma_lo, o.sigma_hi);
        traj = ParamTrajectory::regime_switch({{0, mu, sigma}, {o.n_beats / 2, mu2, sigma2}});
        break;
      }
    }
    std::string id = std::to_string(k + 1);
    id = "syn" + std::string(static_cast<std::size_t>(width) - std::min<std::size_t>(id.size(), width), '0') + id;
    GeneratedRR data = generate_rr(traj, o.n_beats, rng);
    out.push_back({std::move(id), std::move(traj), std::move(data)});
  }
  return out;
}

}  // namespace igbeat::synth
