#include "igbeat/igdist.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "igbeat/errors.hpp"

namespace igbeat::ig {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(name) + " must be finite and > 0, got " +
                      std::to_string(v));
  }
}

// log Phi(z) for z <= -8 via the asymptotic Mills-ratio series
//   Phi(z) ~ phi(z)/(-z) * sum_k (-1)^k (2k-1)!! / z^(2k).
double log_normal_cdf_tail(double z) {
  const double inv_z2 = 1.0 / (z * z);
  double term = 1.0;
  double sum = 1.0;
  double prev_mag = 1.0;
  for (int k = 1; k < 64; ++k) {
    term *= -(2.0 * k - 1.0) * inv_z2;
    const double mag = std::fabs(term);
    if (mag >= prev_mag) break;  // series started diverging
    sum += term;
    if (mag < 1e-17 * std::fabs(sum)) break;
    prev_mag = mag;
  }
  return -0.5 * z * z - std::log(-z) - 0.5 * kLog2Pi + std::log(sum);
}

}  // namespace

double IGParams::lambda() const { return lambda_from(mu, sigma); }

bool IGParams::valid() const {
  return mu > 0.0 && sigma > 0.0 && std::isfinite(mu) && std::isfinite(sigma) &&
         std::isfinite(mu * mu * mu / (sigma * sigma));
}

void IGParams::validate() const {
  require_positive(mu, "mu");
  require_positive(sigma, "sigma");
  const double l = mu * mu * mu / (sigma * sigma);
  if (!(l > 0.0) || !std::isfinite(l)) {
    throw DomainError("lambda = mu^3/sigma^2 is not finite and positive");
  }
}

IGParams IGParams::from_lambda(double mu, double lambda) {
  return IGParams{mu, sigma_from(mu, lambda)};
}

double lambda_from(double mu, double sigma) {
  require_positive(mu, "mu");
  require_positive(sigma, "sigma");
  return mu * mu * mu / (sigma * sigma);
}

double sigma_from(double mu, double lambda) {
  require_positive(mu, "mu");
  require_positive(lambda, "lambda");
  return std::sqrt(mu * mu * mu / lambda);
}

double normal_cdf(double z) {
  return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0);
}

double log_normal_cdf(double z) {
  if (std::isnan(z)) return z;
  if (z < -8.0) return log_normal_cdf_tail(z);
  if (z < 0.0) return std::log(normal_cdf(z));
  return std::log1p(-normal_cdf(-z));
}

double log_pdf(double x, const IGParams& p) {
  require_positive(x, "x");
  p.validate();
  const double l = p.lambda();
  const double d = x - p.mu;
  return 0.5 * (std::log(l) - kLog2Pi - 3.0 * std::log(x)) -
         l * d * d / (2.0 * p.mu * p.mu * x);
}

double pdf(double x, const IGParams& p) { return std::exp(log_pdf(x, p)); }

double cdf(double x, const IGParams& p) {
  require_positive(x, "x");
  p.validate();
  const double l = p.lambda();
  const double r = std::sqrt(l / x);
  const double a = r * (x / p.mu - 1.0);
  const double b = -r * (x / p.mu + 1.0);
  const double body = normal_cdf(a);
  const double tail = std::exp(2.0 * l / p.mu + log_normal_cdf(b));
  return std::clamp(body + tail, 0.0, 1.0);
}

double sample(const IGParams& p, Rng& rng) {
  p.validate();
  const double mu = p.mu;
  const double l = p.lambda();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  const double z = normal(rng);
  const double y = z * z;
  // Roots of the quadratic share product mu^2; take the large root without
  // cancellation and divide.
  const double my = mu * y;
  const double large = mu + mu * (my + std::sqrt(4.0 * mu * l * y + my * my)) / (2.0 * l);
  const double small = mu * mu / large;
  const double u = uniform(rng);
  return (u <= mu / (mu + small)) ? small : large;
}

double nll_step(double x_next, const IGParams& p) {
  require_positive(x_next, "x_next");
  p.validate();
  const double mu = p.mu;
  const double s2 = p.sigma * p.sigma;
  const double d = x_next - mu;
  return 0.5 * (kLog2Pi + 3.0 * std::log(x_next) + std::log(s2) - 3.0 * std::log(mu)) +
         mu * d * d / (2.0 * s2 * x_next);
}

void IGTrajectory::validate() const {
  if (params.size() != targets.size()) {
    throw DomainError("trajectory has " + std::to_string(params.size()) +
                      " parameter pairs but " + std::to_string(targets.size()) +
                      " targets");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i].validate();
    require_positive(targets[i], "target");
  }
}

void IGTrajectory::append(const IGTrajectory& other) {
  params.insert(params.end(), other.params.begin(), other.params.end());
  targets.insert(targets.end(), other.targets.begin(), other.targets.end());
}

double nll_total(const IGTrajectory& traj) {
  if (traj.empty()) throw DomainError("nll_total of an empty trajectory");
  traj.validate();
  double total = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    total += nll_step(traj.targets[i], traj.params[i]);
  }
  return total;
}

}  // namespace igbeat::ig
