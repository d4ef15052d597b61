#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "igbeat/errors.hpp"
#include "igbeat/preprocess.hpp"

namespace igbeat::preprocess {
namespace {

struct Biquad {
  double b0, b1, b2, a1, a2;

  std::vector<double> run(const std::vector<double>& x) const {
    std::vector<double> y(x.size());
    double z1 = 0.0, z2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double out = b0 * x[i] + z1;
      z1 = b1 * x[i] - a1 * out + z2;
      z2 = b2 * x[i] - a2 * out;
      y[i] = out;
    }
    return y;
  }
};

// Second-order Butterworth sections from the bilinear transform (Q = 1/sqrt 2).
Biquad butter2(double cutoff, double fs, bool highpass) {
  const double w0 = 2.0 * std::numbers::pi * cutoff / fs;
  const double cw = std::cos(w0);
  const double alpha = std::sin(w0) / std::numbers::sqrt2;
  const double a0 = 1.0 + alpha;
  Biquad q{};
  if (highpass) {
    q.b0 = (1.0 + cw) / 2.0 / a0;
    q.b1 = -(1.0 + cw) / a0;
  } else {
    q.b0 = (1.0 - cw) / 2.0 / a0;
    q.b1 = (1.0 - cw) / a0;
  }
  q.b2 = q.b0;
  q.a1 = -2.0 * cw / a0;
  q.a2 = (1.0 - alpha) / a0;
  return q;
}

// Forward-backward application with odd reflection at both ends to tame
// start-up transients.
std::vector<double> filtfilt(const Biquad& q, const std::vector<double>& x, std::size_t pad) {
  const std::size_t n = x.size();
  pad = std::min(pad, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x.back() - x[n - 1 - i]);

  std::vector<double> y = q.run(ext);
  std::reverse(y.begin(), y.end());
  y = q.run(y);
  std::reverse(y.begin(), y.end());
  return {y.begin() + static_cast<std::ptrdiff_t>(pad),
          y.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

std::size_t samples(double seconds, double fs) {
  return static_cast<std::size_t>(std::lround(seconds * fs));
}

std::size_t argmax_in(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  hi = std::min(hi, v.size() - 1);
  std::size_t best = lo;
  for (std::size_t i = lo; i <= hi; ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

double max_slope_before(const std::vector<double>& v, std::size_t loc, std::size_t window) {
  const std::size_t lo = loc > window ? loc - window : 1;
  double best = 0.0;
  for (std::size_t i = std::max<std::size_t>(lo, 1); i <= loc; ++i) {
    best = std::max(best, v[i] - v[i - 1]);
  }
  return best;
}

// Local maxima of `v`, greedily thinned by height so that kept peaks are at
// least `min_gap` samples apart.
std::vector<std::size_t> candidate_peaks(const std::vector<double>& v, std::size_t min_gap) {
  std::vector<std::size_t> maxima;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (v[i] > v[i - 1] && v[i] >= v[i + 1]) maxima.push_back(i);
  }
  std::vector<std::size_t> order(maxima);
  std::stable_sort(order.begin(), order.end(),
                   [&v](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  std::vector<char> taken(v.size(), 0);
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    const std::size_t lo = idx >= min_gap ? idx - min_gap + 1 : 0;
    const std::size_t hi = std::min(v.size() - 1, idx + min_gap - 1);
    bool clear = true;
    for (std::size_t j = lo; j <= hi && clear; ++j) clear = taken[j] == 0;
    if (!clear) continue;
    taken[idx] = 1;
    kept.push_back(idx);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

struct Levels {
  double signal = 0.0;
  double noise = 0.0;
  double threshold() const { return noise + 0.25 * (signal - noise); }
};

}  // namespace

std::vector<double> detect_rpeaks(const EcgRecord& ecg, const PanTompkinsOptions& opt,
                                  PanTompkinsTrace* trace) {
  ecg.validate();
  const double fs = ecg.fs;
  if (fs < 100.0) {
    throw DomainError("Pan-Tompkins needs fs >= 100 Hz, got " + std::to_string(fs));
  }
  if (ecg.duration() < opt.learning_period_s) {
    throw DomainError("ECG record shorter than the " + std::to_string(opt.learning_period_s) +
                      " s learning period");
  }
  for (double v : ecg.samples) {
    if (!std::isfinite(v)) throw DomainError("ECG contains non-finite samples");
  }
  const std::size_t n = ecg.samples.size();

  const std::size_t pad = samples(1.0, fs);
  std::vector<double> bp = filtfilt(butter2(opt.low_cut_hz, fs, true), ecg.samples, pad);
  bp = filtfilt(butter2(opt.high_cut_hz, fs, false), bp, pad);

  std::vector<double> deriv(n, 0.0);
  for (std::size_t i = 2; i + 2 < n; ++i) {
    deriv[i] = (-bp[i - 2] - 2.0 * bp[i - 1] + 2.0 * bp[i + 1] + bp[i + 2]) * fs / 8.0;
  }
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = deriv[i] * deriv[i];

  const std::size_t win = std::max<std::size_t>(1, samples(opt.integration_window_s, fs));
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + sq[i];
  std::vector<double> mwi(n);
  const std::size_t back = (win - 1) / 2;
  const std::size_t fwd = win / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= back ? i - back : 0;
    const std::size_t hi = std::min(n - 1, i + fwd);
    mwi[i] = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(win);
  }

  if (trace) *trace = {bp, deriv, sq, mwi};

  const std::size_t refractory = samples(opt.refractory_s, fs);
  const std::size_t refine = samples(opt.refine_window_s, fs);
  const std::size_t learn = std::min(n, samples(opt.learning_period_s, fs));
  const std::vector<std::size_t> cands = candidate_peaks(mwi, refractory);

  // Thresholds on the integrated signal (i) and the band-passed one (f).
  Levels li, lf;
  li.signal = *std::max_element(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(learn)) / 3.0;
  li.noise = std::accumulate(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(learn), 0.0) /
             static_cast<double>(learn) / 2.0;
  {
    double mx = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < learn; ++i) {
      mx = std::max(mx, bp[i]);
      mean += std::fabs(bp[i]);
    }
    lf.signal = mx / 3.0;
    lf.noise = mean / static_cast<double>(learn) / 2.0;
  }
  if (!(li.signal > 0.0)) return {};

  auto bp_peak = [&](std::size_t loc) {
    const std::size_t lo = loc >= refine ? loc - refine : 0;
    return argmax_in(bp, lo, loc + refine);
  };

  std::vector<std::size_t> qrs_mwi;  // detection locations on the integrated signal
  std::vector<std::size_t> qrs;      // refined locations on the band-passed signal
  double rr_avg = 0.0;

  auto update_rr = [&] {
    if (qrs.size() < 2) return;
    const std::size_t k = std::min<std::size_t>(8, qrs.size() - 1);
    double sum = 0.0;
    for (std::size_t j = qrs.size() - k; j < qrs.size(); ++j) {
      sum += static_cast<double>(qrs[j] - qrs[j - 1]);
    }
    const double mean = sum / static_cast<double>(k);
    const double last = static_cast<double>(qrs.back() - qrs[qrs.size() - 2]);
    if (rr_avg == 0.0 || (last >= 0.92 * mean && last <= 1.16 * mean)) rr_avg = mean;
  };

  auto accept = [&](std::size_t loc, std::size_t peak, double weight) {
    qrs_mwi.push_back(loc);
    qrs.push_back(peak);
    li.signal = weight * mwi[loc] + (1.0 - weight) * li.signal;
    lf.signal = weight * bp[peak] + (1.0 - weight) * lf.signal;
    update_rr();
  };

  auto as_noise = [&](std::size_t loc, std::size_t peak) {
    li.noise = 0.125 * mwi[loc] + 0.875 * li.noise;
    lf.noise = 0.125 * bp[peak] + 0.875 * lf.noise;
  };

  for (std::size_t ci = 0; ci < cands.size(); ++ci) {
    const std::size_t loc = cands[ci];
    const std::size_t peak = bp_peak(loc);

    // Search back for a missed beat when the gap grows too long.
    if (rr_avg > 0.0 && !qrs_mwi.empty() &&
        static_cast<double>(loc - qrs_mwi.back()) >= opt.searchback_factor * rr_avg) {
      const std::size_t lo = qrs_mwi.back() + refractory;
      const std::size_t hi = loc >= refractory ? loc - refractory : 0;
      std::size_t best = 0;
      bool found = false;
      for (std::size_t cj = 0; cj < ci; ++cj) {
        const std::size_t c = cands[cj];
        if (c < lo || c > hi) continue;
        if (!found || mwi[c] > mwi[best]) {
          best = c;
          found = true;
        }
      }
      if (found && mwi[best] > 0.5 * li.threshold()) {
        const std::size_t bpk = bp_peak(best);
        if (bp[bpk] > 0.5 * lf.threshold()) accept(best, bpk, 0.25);
      }
    }

    if (mwi[loc] >= li.threshold()) {
      bool t_wave = false;
      if (qrs_mwi.size() >= 3 &&
          static_cast<double>(loc - qrs_mwi.back()) <= opt.t_wave_window_s * fs) {
        const std::size_t w = samples(0.075, fs);
        const double slope = max_slope_before(mwi, loc, w);
        const double prev_slope = max_slope_before(mwi, qrs_mwi.back(), w);
        t_wave = slope < 0.5 * prev_slope;
      }
      if (t_wave) {
        as_noise(loc, peak);
      } else if (bp[peak] >= lf.threshold()) {
        accept(loc, peak, 0.125);
      } else {
        as_noise(loc, peak);
      }
    } else {
      as_noise(loc, peak);
    }
  }

  // Refined positions can collide; keep the taller of any pair closer than the
  // refractory period.
  std::sort(qrs.begin(), qrs.end());
  qrs.erase(std::unique(qrs.begin(), qrs.end()), qrs.end());
  std::vector<std::size_t> out;
  for (std::size_t p : qrs) {
    if (!out.empty() && p - out.back() < refractory) {
      if (bp[p] > bp[out.back()]) out.back() = p;
      continue;
    }
    out.push_back(p);
  }
  std::vector<double> times(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) times[i] = static_cast<double>(out[i]) / fs;
  return times;
}

}  // namespace igbeat::preprocess
