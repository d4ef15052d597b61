#include <algorithm>
#include <cmath>
#include <string>

#include "igbeat/errors.hpp"
#include "igbeat/preprocess.hpp"

namespace igbeat::preprocess {
namespace {

int sign(double v) { return (v > 0.0) - (v < 0.0); }

// One-sided three-point end slope, limited to keep the end segment
// shape-preserving.
double end_slope(double h0, double h1, double d0, double d1) {
  double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
  if (sign(m) != sign(d0)) {
    m = 0.0;
  } else if (sign(d0) != sign(d1) && std::fabs(m) > 3.0 * std::fabs(d0)) {
    m = 3.0 * d0;
  }
  return m;
}

}  // namespace

Pchip::Pchip(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
  const std::size_t n = xs_.size();
  if (n != ys_.size()) throw DomainError("PCHIP needs as many values as knots");
  if (n < 2) throw DomainError("PCHIP needs at least 2 knots");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(xs_[i] > xs_[i - 1])) {
      throw DomainError("PCHIP knots must be strictly increasing (duplicate or unordered at " +
                        std::to_string(i) + ")");
    }
  }

  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = xs_[k + 1] - xs_[k];
    delta[k] = (ys_[k + 1] - ys_[k]) / h[k];
  }
  slopes_.assign(n, 0.0);
  if (n == 2) {
    slopes_[0] = slopes_[1] = delta[0];
    return;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (sign(delta[k - 1]) * sign(delta[k]) <= 0) continue;
    // weighted harmonic mean of the adjacent secants
    const double w1 = 2.0 * h[k] + h[k - 1];
    const double w2 = h[k] + 2.0 * h[k - 1];
    slopes_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
  }
  slopes_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  slopes_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
}

double Pchip::operator()(double x) const {
  // Outside the knot range the nearest end value is held.
  if (x <= xs_.front()) return ys_.front();
  if (x >= xs_.back()) return ys_.back();
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - xs_.begin()) - 1;
  const double h = xs_[k + 1] - xs_[k];
  const double t = (x - xs_[k]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + t;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  return h00 * ys_[k] + h10 * h * slopes_[k] + h01 * ys_[k + 1] + h11 * h * slopes_[k + 1];
}

std::vector<double> Pchip::operator()(std::span<const double> xs) const {
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = (*this)(xs[i]);
  return out;
}

std::vector<double> pchip_eval(std::span<const double> knot_x, std::span<const double> knot_y,
                               std::span<const double> query) {
  Pchip p({knot_x.begin(), knot_x.end()}, {knot_y.begin(), knot_y.end()});
  return p(query);
}

}  // namespace igbeat::preprocess
