#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "igbeat/errors.hpp"
#include "igbeat/eval.hpp"

namespace igbeat::eval {

std::vector<double> rescale(const ig::IGTrajectory& traj) {
  traj.validate();
  std::vector<double> u(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) u[i] = ig::cdf(traj.targets[i], traj.params[i]);
  return u;
}

double ks_bound(std::size_t n) {
  if (n == 0) throw DomainError("KS bound needs n >= 1");
  return kKs5Percent / std::sqrt(static_cast<double>(n));
}

double lag1_autocorrelation(std::span<const double> u) {
  const std::size_t n = u.size();
  if (n < 3) return 0.0;
  const double mean = std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = u[i] - mean;
    den += d * d;
    if (i + 1 < n) num += d * (u[i + 1] - mean);
  }
  return den > 0.0 ? num / den : 0.0;
}

KSReport ks_distance(std::span<const double> u) {
  const std::size_t n = u.size();
  if (n == 0) throw DomainError("KS distance of an empty sample");
  KSReport r;
  r.u.assign(u.begin(), u.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (!(u[i] >= 0.0 && u[i] <= 1.0)) {
      throw DomainError("rescaled sample " + std::to_string(i) + " outside [0, 1]");
    }
  }
  r.sorted_u = r.u;
  std::sort(r.sorted_u.begin(), r.sorted_u.end());
  r.quantile.resize(n);
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.quantile[i] = (static_cast<double>(i) + 0.5) / dn;
    const double dev = std::fabs(r.sorted_u[i] - r.quantile[i]);
    if (dev > r.ksd) {
      r.ksd = dev;
      r.max_index = i;
    }
  }
  r.bound = ks_bound(n);
  r.pass = r.ksd < r.bound;
  r.lag1_autocorrelation = lag1_autocorrelation(r.u);
  return r;
}

}  // namespace igbeat::eval
