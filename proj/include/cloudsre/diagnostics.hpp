#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "cloudsre/errors.hpp"
#include "cloudsre/noise.hpp"
#include "cloudsre/special_functions.hpp"
#include "cloudsre/sre.hpp"
#include "cloudsre/stats.hpp"

namespace cloudsre {

/// Significance level for the stationarity KS tests.
inline constexpr double kStationarityAlpha = 0.01;

/// Default burn-in: with a contraction rate near -0.635 nats/step the
/// initial condition is forgotten far below double precision by step 500.
inline constexpr std::size_t kDefaultBurnIn = 500;

namespace detail {

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& body) {
  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  threads = static_cast<unsigned>(
      std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const std::size_t chunk = (count + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::size_t begin = std::min(count, w * chunk);
    const std::size_t end = std::min(count, begin + chunk);
    if (begin == end) break;
    pool.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct Welford {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) noexcept {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  double stderr_of_mean() const noexcept {
    if (n < 2) return 0.0;
    const auto dn = static_cast<double>(n);
    return std::sqrt(m2 / (dn - 1.0) / dn);
  }
};

}  // namespace detail

struct MomentEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
};

/// Sample mean of log|A_i| over n draws with its standard error. Exact-zero
/// draws (a measure-zero event) are rejected and redrawn; more than n/1000 of
/// them indicates a broken source. Constant sources are evaluated exactly.
template <GaussianSource Stream>
MomentEstimate estimate_lyapunov(const ASpec& a_source, std::size_t n,
                                 Stream& stream) {
  if (n < 1000) throw domain_error("estimate_lyapunov: n must be >= 1000");
  if (const auto* c = std::get_if<ConstA>(&a_source)) {
    return {std::log(std::fabs(c->value)), 0.0};
  }
  const double scale = std::get<GaussA>(a_source).scale;
  detail::Welford acc;
  std::size_t zero_draws = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double a = scale * stream.next_gaussian();
    while (a == 0.0) {
      if (++zero_draws > n / 1000) {
        throw numeric_error(
            "estimate_lyapunov: too many exact-zero coefficient draws");
      }
      a = scale * stream.next_gaussian();
    }
    acc.add(std::log(std::fabs(a)));
  }
  return {acc.mean, acc.stderr_of_mean()};
}

/// Sample mean of log+|B_i| = max(log|B_i|, 0) over n draws.
template <GaussianSource Stream>
MomentEstimate estimate_logplus_b(const BSpec& b_source, std::size_t n,
                                  Stream& stream) {
  if (n < 1000) throw domain_error("estimate_logplus_b: n must be >= 1000");
  if (const auto* c = std::get_if<ConstB>(&b_source)) {
    return {std::max(std::log(std::fabs(c->value)), 0.0), 0.0};
  }
  CoeffSampler<Stream> sampler({ConstA{0.0}, b_source}, stream);
  detail::Welford acc;
  for (std::size_t i = 0; i < n; ++i) {
    const double b = sampler.next().b;
    acc.add(std::max(std::log(std::fabs(b)), 0.0));
  }
  return {acc.mean, acc.stderr_of_mean()};
}

struct CouplingReport {
  std::vector<double> deltas;  // X_k - X'_k for k = 0..n
  std::optional<double> slope;
  std::size_t contraction_violations = 0;
  std::optional<std::size_t> merged_at;  // first k with delta exactly 0
};

/// Runs two abs-form trajectories on one coefficient realization from x0 and
/// x0_alt and verifies the pathwise contraction
/// |delta_{k+1}| <= |A_{k+1}| |delta_k| up to a 1e-12 relative band plus the
/// forward rounding error of one step. The absolute term matters only once
/// delta sits at the ulp floor of the states, where a single rounding
/// perturbs delta by ~eps * |X| regardless of how small delta is. Once the
/// trajectories merge their states are bitwise equal, so the deltas stay at
/// exactly zero; the decay slope is fitted on the pre-merge prefix.
template <GaussianSource Stream>
CouplingReport coupling_decay(const CoeffProcess& coeffs, double x0,
                              double x0_alt, std::size_t n, Stream& stream) {
  if (x0 == x0_alt) {
    throw domain_error("coupling_decay: x0 and x0_alt must differ");
  }
  if (n < 10) throw domain_error("coupling_decay: n must be >= 10");
  CoeffSampler<Stream> sampler(coeffs, stream);

  CouplingReport report;
  report.deltas.reserve(n + 1);
  report.deltas.push_back(x0 - x0_alt);
  double x = x0;
  double x_alt = x0_alt;
  for (std::size_t k = 1; k <= n; ++k) {
    const CoeffPair c = sampler.next();
    const double prev = x;
    const double prev_alt = x_alt;
    x = c.a * std::fabs(x) + c.b;
    x_alt = c.a * std::fabs(x_alt) + c.b;
    if (std::fabs(x) > kDivergenceThreshold ||
        std::fabs(x_alt) > kDivergenceThreshold) {
      throw divergence_error("coupling_decay: a trajectory hit the guard", k);
    }
    const double delta = x - x_alt;
    const double bound = std::fabs(c.a) * std::fabs(report.deltas.back());
    const double rounding =
        2.0 * std::numeric_limits<double>::epsilon() *
        (std::fabs(c.a) * (std::fabs(prev) + std::fabs(prev_alt)) +
         std::fabs(x) + std::fabs(x_alt));
    if (std::fabs(delta) > bound * (1.0 + 1e-12) + rounding) {
      ++report.contraction_violations;
    }
    report.deltas.push_back(delta);
    if (!report.merged_at && delta == 0.0) report.merged_at = k;
  }

  std::vector<double> ks, logs;
  for (std::size_t k = 0; k < report.deltas.size(); ++k) {
    const double ad = std::fabs(report.deltas[k]);
    if (!(ad > 1e-300)) break;  // pre-merge prefix only
    ks.push_back(static_cast<double>(k));
    logs.push_back(std::log(ad));
  }
  if (ks.size() >= 2) report.slope = detail::ols_slope(ks, logs);
  return report;
}

struct KsLagResult {
  std::size_t lag = 0;
  double statistic = 0.0;
  double p_value = 1.0;
};

struct StationarityReport {
  std::vector<KsLagResult> ks_stats;
  double rejection_rate = 0.0;
};

/// Runs `replicas` independent abs-form trajectories (one substream each) and
/// KS-compares the cross-replica marginal at time burn_in against the
/// marginal at burn_in + lag, for each lag. rejection_rate is the fraction of
/// lags rejected at alpha = 0.01. Any replica tripping the divergence guard
/// aborts the test with a divergence_error.
template <SplittableGaussianSource Stream>
StationarityReport stationarity_test(const CoeffProcess& coeffs, double x0,
                                     std::size_t burn_in,
                                     const std::vector<std::size_t>& lags,
                                     std::size_t replicas, const Stream& stream,
                                     unsigned threads = 0) {
  if (replicas < 50) {
    throw domain_error(
        "stationarity_test: need at least 50 replicas for the KS asymptotics");
  }
  if (lags.empty()) throw domain_error("stationarity_test: no lags given");
  std::size_t max_lag = 0;
  for (std::size_t lag : lags) {
    if (lag == 0) throw domain_error("stationarity_test: lags must be >= 1");
    max_lag = std::max(max_lag, lag);
  }
  const std::size_t total_steps = burn_in + max_lag;

  std::vector<double> base_sample(replicas);
  std::vector<std::vector<double>> lag_samples(
      lags.size(), std::vector<double>(replicas));
  detail::parallel_for(replicas, threads, [&](std::size_t begin,
                                              std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      auto sub = stream.substream(r);
      const Trajectory traj = iterate_abs(coeffs, x0, total_steps, sub);
      if (traj.diverged_at) {
        throw divergence_error(
            "stationarity_test: replica " + std::to_string(r) +
                " exceeded the divergence guard before sampling completed",
            *traj.diverged_at);
      }
      base_sample[r] = traj.values[burn_in];
      for (std::size_t li = 0; li < lags.size(); ++li) {
        lag_samples[li][r] = traj.values[burn_in + lags[li]];
      }
    }
  });

  StationarityReport report;
  std::size_t rejected = 0;
  for (std::size_t li = 0; li < lags.size(); ++li) {
    const KsResult ks = ks_two_sample(base_sample, lag_samples[li]);
    report.ks_stats.push_back({lags[li], ks.statistic, ks.p_value});
    if (ks.p_value < kStationarityAlpha) ++rejected;
  }
  report.rejection_rate =
      static_cast<double>(rejected) / static_cast<double>(lags.size());
  return report;
}

struct FixedPointReport {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-step invariance: maps each sample point x to A|x| + B with fresh
/// coefficient draws and KS-compares the pushed-forward sample against the
/// original. Under the stationary law both share one marginal.
template <GaussianSource Stream>
FixedPointReport fixed_point_check(const CoeffProcess& coeffs,
                                   std::span<const double> stationary_sample,
                                   Stream& stream) {
  if (stationary_sample.size() < 200) {
    throw domain_error("fixed_point_check: need at least 200 sample points");
  }
  CoeffSampler<Stream> sampler(coeffs, stream);
  std::vector<double> pushed;
  pushed.reserve(stationary_sample.size());
  for (double x : stationary_sample) {
    const CoeffPair c = sampler.next();
    pushed.push_back(c.a * std::fabs(x) + c.b);
  }
  const KsResult ks = ks_two_sample(
      {stationary_sample.begin(), stationary_sample.end()}, std::move(pushed));
  return {ks.statistic, ks.p_value};
}

enum class StabilityVerdict { stationary_expected, unstable_expected, boundary };

struct Theorem2Report {
  MomentEstimate lyapunov;  // empirical estimate over n draws
  std::optional<double> lyapunov_closed_form;
  MomentEstimate logplus_b;
  bool lyapunov_ok = false;
  bool logplus_ok = false;
  StabilityVerdict verdict = StabilityVerdict::boundary;
};

/// Closed-form E[log|A|] where one exists for the A-source.
inline std::optional<double> lyapunov_closed_form(const ASpec& a_source) {
  if (const auto* c = std::get_if<ConstA>(&a_source)) {
    return std::log(std::fabs(c->value));
  }
  const double scale = std::get<GaussA>(a_source).scale;
  return std::log(std::fabs(scale)) + expected_log_abs_std_normal().value;
}

/// Evaluates both stationarity conditions: E[log|A|] < 0 and
/// E[log+|B|] < inf. The verdict uses the closed form when the A-source has
/// one (both built-in sources do), otherwise the empirical estimate with a
/// 4-standard-error band.
template <GaussianSource Stream>
Theorem2Report check_theorem2_conditions(const CoeffProcess& coeffs,
                                         std::size_t n, Stream& stream) {
  if (n < 10'000) {
    throw domain_error("check_theorem2_conditions: n must be >= 10^4");
  }
  Theorem2Report report;
  report.lyapunov_closed_form = lyapunov_closed_form(coeffs.a);

  const auto* gauss = std::get_if<GaussA>(&coeffs.a);
  if (gauss != nullptr && gauss->scale == 0.0) {
    report.lyapunov = {-std::numeric_limits<double>::infinity(), 0.0};
  } else {
    report.lyapunov = estimate_lyapunov(coeffs.a, n, stream);
  }
  report.logplus_b = estimate_logplus_b(coeffs.b, n, stream);

  double low, high;
  if (report.lyapunov_closed_form) {
    low = high = *report.lyapunov_closed_form;
  } else {
    low = report.lyapunov.estimate - 4.0 * report.lyapunov.stderr_;
    high = report.lyapunov.estimate + 4.0 * report.lyapunov.stderr_;
  }
  if (high < 0.0) {
    report.verdict = StabilityVerdict::stationary_expected;
  } else if (low > 0.0) {
    report.verdict = StabilityVerdict::unstable_expected;
  } else {
    report.verdict = StabilityVerdict::boundary;
  }
  report.lyapunov_ok = high < 0.0;
  report.logplus_ok = std::isfinite(report.logplus_b.estimate);
  return report;
}

}  // namespace cloudsre
