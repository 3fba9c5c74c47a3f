#pragma once

#include <span>
#include <vector>

namespace igeom::stats {

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error() const;
};

Summary summarize(std::span<const double> xs);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic two-sample KS critical value at level alpha (0.05 or 0.01 or 0.001).
double ks_critical(std::size_t n, std::size_t m, double alpha);

struct NormalityResult {
  double skewness = 0.0;
  double excessKurtosis = 0.0;
  double statistic = 0.0;  // Jarque-Bera
  double pValue = 1.0;     // chi-square(2) tail
};

/// Jarque-Bera normality test.
NormalityResult jarque_bera(std::span<const double> xs);

double pearson_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace igeom::stats
