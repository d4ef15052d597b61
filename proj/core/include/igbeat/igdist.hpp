#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace igbeat {

using Rng = std::mt19937_64;

namespace ig {

// Inverse Gaussian parameters in the (mean, standard deviation) form used by
// the model heads. Both are in seconds.
struct IGParams {
  double mu = 1.0;
  double sigma = 1.0;

  // Shape parameter lambda = mu^3 / sigma^2.
  double lambda() const;
  bool valid() const;
  void validate() const;

  static IGParams from_lambda(double mu, double lambda);
};

double lambda_from(double mu, double sigma);
double sigma_from(double mu, double lambda);

// Standard normal CDF and its logarithm. log_normal_cdf switches to an
// asymptotic tail series below z = -8.
double normal_cdf(double z);
double log_normal_cdf(double z);

double log_pdf(double x, const IGParams& p);
double pdf(double x, const IGParams& p);

// F(x) = Phi(sqrt(l/x)(x/mu - 1)) + exp(2l/mu) Phi(-sqrt(l/x)(x/mu + 1)).
// The second product is formed in log space; exp(2l/mu) overflows for
// lambda/mu beyond ~355.
double cdf(double x, const IGParams& p);

// Michael-Schucany-Haas transformation sampler.
double sample(const IGParams& p, Rng& rng);

// Per-step negative log-likelihood in the sigma parameterization:
//   0.5 log(2 pi x^3 sigma^2 / mu^3) + mu (x - mu)^2 / (2 sigma^2 x)
double nll_step(double x_next, const IGParams& p);

// One predicted distribution per step, paired with the interval it predicts.
struct IGTrajectory {
  std::vector<IGParams> params;
  std::vector<double> targets;

  std::size_t size() const { return params.size(); }
  bool empty() const { return params.empty(); }
  void validate() const;
  void append(const IGTrajectory& other);
};

double nll_total(const IGTrajectory& traj);

}  // namespace ig
}  // namespace igbeat
