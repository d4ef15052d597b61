#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "igbeat/igdist.hpp"

namespace igbeat::eval {

// Asymptotic 5% Kolmogorov-Smirnov coefficient.
inline constexpr double kKs5Percent = 1.36;

struct KSReport {
  std::vector<double> u;         // rescaled samples in input order
  std::vector<double> quantile;  // (i - 0.5) / n
  std::vector<double> sorted_u;  // ascending
  double ksd = 0.0;
  double bound = 0.0;
  bool pass = false;
  std::size_t max_index = 0;  // position in sorted order of the largest deviation
  double lag1_autocorrelation = 0.0;

  std::size_t size() const { return u.size(); }
};

// u_i = F(x_{i+1} | mu_i, sigma_i).
std::vector<double> rescale(const ig::IGTrajectory& traj);

double ks_bound(std::size_t n);

KSReport ks_distance(std::span<const double> u);

// Sample lag-1 autocorrelation; 0 for fewer than 3 values or zero variance.
double lag1_autocorrelation(std::span<const double> u);

// q,u,lower_band,upper_band rows; bands are clamped to [0, 1].
void write_ks_csv(std::ostream& out, const KSReport& report);
// Standalone SVG of the KS plot. A failing report gets its maximum-deviation
// point circled.
void write_ks_svg(std::ostream& out, const KSReport& report, const std::string& title = "");
void write_ks_plot(const std::filesystem::path& stem, const KSReport& report,
                   const std::string& title = "");

}  // namespace igbeat::eval
