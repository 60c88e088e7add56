#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace mallows {

/// Every Monte Carlo output is reported as (mean, standard error, replicates).
struct Estimate {
  double mean = 0;
  double std_error = 0;
  std::int64_t replicates = 0;
};

namespace stats {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("stats::mean: empty sample");
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double variance(std::span<const double> xs) {
  const std::int64_t n = static_cast<std::int64_t>(xs.size());
  if (n < 2) throw std::invalid_argument("stats::variance: need at least two samples");
  const double m = mean(xs);
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(n - 1);
}

inline Estimate estimate_of(std::span<const double> xs) {
  const std::int64_t n = static_cast<std::int64_t>(xs.size());
  Estimate e;
  e.mean = mean(xs);
  e.std_error = n >= 2 ? std::sqrt(variance(xs) / static_cast<double>(n)) : 0.0;
  e.replicates = n;
  return e;
}

struct Moments {
  double mean = 0;
  double variance = 0;         // unbiased
  double skewness = 0;         // g1, biased sample version
  double excess_kurtosis = 0;  // g2
};

inline Moments moments(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  if (xs.size() < 4) throw std::invalid_argument("stats::moments: need at least 4 samples");
  const double m = mean(xs);
  double m2 = 0, m3 = 0, m4 = 0;
  for (double x : xs) {
    const double d = x - m;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  Moments out;
  out.mean = m;
  out.variance = m2 * n / (n - 1.0);
  out.skewness = m3 / std::pow(m2, 1.5);
  out.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  return out;
}

/// Upper tail of the chi-square distribution with dof degrees of freedom.
inline double chi_square_pvalue(double statistic, std::int64_t dof) {
  if (dof < 1) throw std::invalid_argument("chi_square_pvalue: dof must be >= 1");
  if (statistic <= 0) return 1.0;
  return boost::math::gamma_q(static_cast<double>(dof) / 2.0, statistic / 2.0);
}

}  // namespace stats
}  // namespace mallows
