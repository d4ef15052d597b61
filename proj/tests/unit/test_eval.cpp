#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "igbeat/errors.hpp"
#include "igbeat/eval.hpp"
#include "igbeat/igdist.hpp"

namespace eval = igbeat::eval;
namespace ig = igbeat::ig;
using igbeat::Rng;

namespace {

// Largest vertical gap between the sorted u and the uniform quantiles
// (k - 1/2)/n, with k counted by rank rather than by sorting.
double brute_ksd(const std::vector<double>& u) {
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    std::size_t rank = 0;
    for (std::size_t j = 0; j < u.size(); ++j) rank += u[j] < u[i] || (u[j] == u[i] && j < i);
    d = std::max(d, std::fabs(u[i] - (rank + 0.5) / n));
  }
  return d;
}

}  // namespace

TEST(Bounds, ReportedConstants) {
  EXPECT_NEAR(eval::ks_bound(600), 0.056, 5e-4);
  EXPECT_NEAR(eval::ks_bound(1800), 0.032, 5e-4);
  EXPECT_DOUBLE_EQ(eval::ks_bound(100), 0.136);
  EXPECT_THROW(eval::ks_bound(0), igbeat::DomainError);
}

TEST(Ksd, TwoPointExample) {
  const std::vector<double> u{0.25, 0.75};
  const auto r = eval::ks_distance(u);
  EXPECT_DOUBLE_EQ(r.ksd, 0.0);
  EXPECT_EQ(r.quantile, (std::vector<double>{0.25, 0.75}));
  EXPECT_EQ(r.sorted_u, u);
}

TEST(Ksd, MatchesBruteForceAndIsPermutationInvariant) {
  Rng rng(2);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> u(1 + trial % 50);
    for (double& v : u) v = U(rng);
    const double d = eval::ks_distance(u).ksd;
    EXPECT_NEAR(d, brute_ksd(u), 1e-15);
    std::shuffle(u.begin(), u.end(), rng);
    EXPECT_EQ(eval::ks_distance(u).ksd, d);
  }
}

TEST(Ksd, PassFlagAndMaxIndex) {
  std::vector<double> u(100);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = (i + 0.5) / 100.0;
  auto r = eval::ks_distance(u);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.ksd, 0.0, 1e-15);
  for (double& v : u) v *= 0.5;  // crowded into the lower half
  r = eval::ks_distance(u);
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.ksd, 0.995 - 0.4975, 1e-12);
  EXPECT_EQ(r.max_index, 99u);
}

TEST(Ksd, RejectsBadInput) {
  EXPECT_THROW(eval::ks_distance(std::vector<double>{}), igbeat::DomainError);
  EXPECT_THROW(eval::ks_distance(std::vector<double>{0.5, 1.5}), igbeat::DomainError);
  EXPECT_THROW(eval::ks_distance(std::vector<double>{std::nan("")}), igbeat::DomainError);
}

TEST(Rescale, MedianMapsToOneHalf) {
  // The IG median has no closed form; find it by bisection on the CDF.
  const ig::IGParams p{0.9, 0.04};
  double lo = 0.5, hi = 1.5;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ig::cdf(mid, p) < 0.5 ? lo : hi) = mid;
  }
  ig::IGTrajectory t{{p}, {lo}};
  EXPECT_NEAR(eval::rescale(t)[0], 0.5, 1e-12);
}

TEST(Rescale, TrueParametersGiveUniformValues) {
  Rng rng(4);
  ig::IGTrajectory t;
  std::uniform_real_distribution<double> mu(0.6, 1.2), sd(0.02, 0.1);
  for (int i = 0; i < 5000; ++i) {
    const ig::IGParams p{mu(rng), sd(rng)};
    t.params.push_back(p);
    t.targets.push_back(ig::sample(p, rng));
  }
  const auto r = eval::ks_distance(eval::rescale(t));
  EXPECT_LT(r.ksd, eval::ks_bound(5000));
  EXPECT_LT(std::fabs(r.lag1_autocorrelation), 0.05);
}

TEST(Autocorrelation, KnownSequences) {
  EXPECT_EQ(eval::lag1_autocorrelation(std::vector<double>{0.1, 0.2}), 0.0);
  EXPECT_EQ(eval::lag1_autocorrelation(std::vector<double>{0.3, 0.3, 0.3, 0.3}), 0.0);
  const std::vector<double> alt{0.1, 0.9, 0.1, 0.9, 0.1, 0.9};
  EXPECT_LT(eval::lag1_autocorrelation(alt), -0.8);
}

TEST(Plot, CsvBandsAndSvgMarker) {
  std::vector<double> u(50);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = 0.5 * (i + 0.5) / 50.0;
  const auto r = eval::ks_distance(u);
  std::ostringstream csv;
  eval::write_ks_csv(csv, r);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# n=50", 0), 0u);
  std::getline(in, line);
  EXPECT_EQ(line, "q,u,lower_band,upper_band");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 50u);

  std::ostringstream svg;
  eval::write_ks_svg(svg, r, "fail case");
  EXPECT_NE(svg.str().find("<svg"), std::string::npos);
  EXPECT_NE(svg.str().find("max-deviation"), std::string::npos);

  std::vector<double> good(50);
  for (std::size_t i = 0; i < good.size(); ++i) good[i] = (i + 0.5) / 50.0;
  std::ostringstream svg_ok;
  eval::write_ks_svg(svg_ok, eval::ks_distance(good));
  EXPECT_EQ(svg_ok.str().find("max-deviation"), std::string::npos);

  const auto stem = std::filesystem::temp_directory_path() / "igbeat_ks_plot";
  eval::write_ks_plot(stem, r);
  EXPECT_TRUE(std::filesystem::exists(stem.string() + ".csv"));
  EXPECT_TRUE(std::filesystem::exists(stem.string() + ".svg"));
  std::filesystem::remove(stem.string() + ".csv");
  std::filesystem::remove(stem.string() + ".svg");
}
