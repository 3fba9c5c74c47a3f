#include "igeom/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace igeom::stats {

double Summary::std_error() const {
  return count > 0 ? std::sqrt(variance / static_cast<double>(count)) : 0.0;
}

Summary summarize(std::span<const double> xs) {
  Summary s;
  // Welford, fixed order.
  double m2 = 0.0;
  for (double x : xs) {
    ++s.count;
    const double d = x - s.mean;
    s.mean += d / static_cast<double>(s.count);
    m2 += d * (x - s.mean);
  }
  s.variance = s.count > 1 ? m2 / static_cast<double>(s.count - 1) : 0.0;
  return s;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical(std::size_t n, std::size_t m, double alpha) {
  // c(alpha) = sqrt(-log(alpha/2)/2)
  const double c = std::sqrt(-0.5 * std::log(0.5 * alpha));
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

NormalityResult jarque_bera(std::span<const double> xs) {
  NormalityResult r;
  const double n = static_cast<double>(xs.size());
  if (xs.size() < 8) return r;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double x : xs) {
    const double d = x - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  r.skewness = m3 / std::pow(m2, 1.5);
  r.excessKurtosis = m4 / (m2 * m2) - 3.0;
  r.statistic = n / 6.0 * (r.skewness * r.skewness + 0.25 * r.excessKurtosis * r.excessKurtosis);
  r.pValue = std::exp(-0.5 * r.statistic);
  return r;
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument("pearson_correlation: size mismatch");
  }
  const Summary sa = summarize(a);
  const Summary sb = summarize(b);
  double cov = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) cov += (a[i] - sa.mean) * (b[i] - sb.mean);
  cov /= static_cast<double>(a.size() - 1);
  return cov / std::sqrt(sa.variance * sb.variance);
}

}  // namespace igeom::stats
