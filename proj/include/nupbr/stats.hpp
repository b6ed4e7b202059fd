#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace nupbr {

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must lie in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>{}, p);
}

/// Monte Carlo point estimate with its standard error.
///
/// The confidence interval is mean +/- z * std_error with z the two-sided
/// standard normal quantile for `confidence`. Probability estimates clamp the
/// interval to [lower_clamp, upper_clamp].
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  double confidence = 0.99;
  double lower_clamp = -std::numeric_limits<double>::infinity();
  double upper_clamp = std::numeric_limits<double>::infinity();

  double z() const { return normal_quantile(1.0 - 0.5 * (1.0 - confidence)); }
  double lower() const { return std::max(lower_clamp, mean - z() * std_error); }
  double upper() const { return std::min(upper_clamp, mean + z() * std_error); }
  /// Upper end of the one-sided interval at the same confidence level.
  double one_sided_upper() const {
    return std::min(upper_clamp, mean + normal_quantile(confidence) * std_error);
  }
  bool within_se(double target, double k) const { return std::abs(mean - target) <= k * std_error; }
};

inline bool ci_contains(const Estimate& est, double target) {
  return est.lower() <= target && target <= est.upper();
}

/// Sample mean and standard error (n-1 denominator). The reduction runs in
/// index order so the result is a deterministic function of the input.
inline Estimate estimate_mean(std::span<const double> xs, double confidence = 0.99) {
  if (xs.empty()) throw std::invalid_argument("estimate_mean: empty sample");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::invalid_argument("estimate_mean: confidence must lie in (0,1)");
  // Two passes: the mean first, then centred squares.
  double sum = 0.0;
  for (double v : xs) sum += v;
  const double n = static_cast<double>(xs.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : xs) ss += (v - mean) * (v - mean);
  const double var = xs.size() > 1 ? ss / (n - 1.0) : 0.0;
  return Estimate{mean, std::sqrt(var / n), xs.size(), confidence};
}

/// Asymptotic Kolmogorov survival function Q(t) = 2 sum (-1)^{k-1} exp(-2 k^2 t^2).
inline double kolmogorov_survival(double t) {
  if (t <= 0.0) return 1.0;
  if (t < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic;
  double p_value;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// (Stephens' small-sample correction on the effective size).
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d)};
}

}  // namespace nupbr
