#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cloudsre/errors.hpp"

namespace cloudsre {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased (n - 1 denominator)
  std::optional<double> skewness;
  std::optional<double> excess_kurtosis;
};

/// Mean, unbiased variance and the standardized sample moments
/// g1 = m3 / m2^{3/2}, g2 = m4 / m2^2 - 3 (central moments with 1/n).
/// Zero variance leaves the normalized moments unset.
inline Moments moments(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 4) throw domain_error("moments: need at least 4 observations");
  double mean = 0.0;
  for (double x : sample) mean += x;
  mean /= static_cast<double>(n);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : sample) {
    const double d = x - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const auto dn = static_cast<double>(n);
  Moments out;
  out.mean = mean;
  out.variance = m2 / (dn - 1.0);
  m2 /= dn;
  m3 /= dn;
  m4 /= dn;
  if (m2 > 0.0) {
    out.skewness = m3 / std::pow(m2, 1.5);
    out.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return out;
}

/// Survival function Q(z) = P(K > z) of the asymptotic Kolmogorov
/// distribution. Small z uses the theta-transformed form of the CDF, large z
/// the alternating exponential series (the classic two-branch evaluation).
inline double kolmogorov_q(double z) noexcept {
  if (z <= 0.0) return 1.0;
  constexpr double kPi = 3.14159265358979323846;
  if (z < 1.18) {
    const double v = std::exp(-kPi * kPi / (8.0 * z * z));
    const double v8 = std::pow(v, 8.0);
    const double cdf = std::sqrt(2.0 * kPi) / z *
                       (v * (1.0 + v8 * (1.0 + v8 * v8 * (1.0 + v8 * v8 * v8))));
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * z * z);
    sum += sign * term;
    if (term < 1e-18) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov: D = sup |F_a - F_b| (ties handled by
/// stepping both empirical CDFs across each distinct value) with the
/// asymptotic p-value Q(D * sqrt(n m / (n + m))).
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw domain_error("ks_two_sample: both samples must be nonempty");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  std::size_t ia = 0, ib = 0;
  double d = 0.0;
  while (ia < a.size() && ib < b.size()) {
    const double v = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] == v) ++ia;
    while (ib < b.size() && b[ib] == v) ++ib;
    d = std::max(d, std::fabs(static_cast<double>(ia) / na -
                              static_cast<double>(ib) / nb));
  }
  const double z = d * std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_q(z)};
}

/// One-sample D_n = sup |F_n - F| against a reference CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> sample, const Cdf& cdf) {
  if (sample.empty()) throw domain_error("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::max((static_cast<double>(i) + 1.0) / n - f,
                             f - static_cast<double>(i) / n));
  }
  return d;
}

namespace detail {

/// Least-squares slope of y against x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace detail

}  // namespace cloudsre
