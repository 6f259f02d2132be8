#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cloudsre/cloud.hpp"
#include "cloudsre/errors.hpp"
#include "cloudsre/noise.hpp"

namespace cloudsre {

/// Trajectories are truncated (and flagged) once |X| exceeds this.
inline constexpr double kDivergenceThreshold = 1e12;

// ---------------------------------------------------------------------------
// Coefficient processes
// ---------------------------------------------------------------------------

struct ConstA {
  double value = 0.0;
};
struct GaussA {
  double scale = 1.0;  // A = scale * eps, eps ~ N(0,1)
};
using ASpec = std::variant<ConstA, GaussA>;

struct ConstB {
  double value = 0.0;
};
struct GaussB {
  double mean = 0.0;
  double sd = 1.0;
};
struct Ar1B {
  double mean = 0.0;
  double rho = 0.0;  // requires |rho| < 1
  double sd = 1.0;   // innovation standard deviation
};

/// How a finite cloud schedule continues once exhausted.
enum class Extension { hold_last, resample_iid };

struct CloudScheduleB {
  std::vector<double> schedule;  // B_1, B_2, ... in consumption order
  Extension extension = Extension::hold_last;
};

using BSpec = std::variant<ConstB, GaussB, Ar1B, CloudScheduleB>;

/// A pair source for the recursion X_{t+1} = A |X_t| + B (or the linear
/// form). The A component is independent of the B component by construction:
/// they consume separate draws (or separate substreams in time-indexed mode).
struct CoeffProcess {
  ASpec a;
  BSpec b;
};

struct CoeffPair {
  double a = 0.0;
  double b = 0.0;
};

inline void validate(const CoeffProcess& proc) {
  std::visit(
      [](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, ConstA>) {
          if (!std::isfinite(a.value)) throw domain_error("const A not finite");
        } else {
          if (!std::isfinite(a.scale)) throw domain_error("A scale not finite");
        }
      },
      proc.a);
  std::visit(
      [](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, ConstB>) {
          if (!std::isfinite(b.value)) throw domain_error("const B not finite");
        } else if constexpr (std::is_same_v<T, GaussB>) {
          if (!std::isfinite(b.mean) || !std::isfinite(b.sd) || b.sd < 0.0) {
            throw domain_error("gaussian B needs finite mean and sd >= 0");
          }
        } else if constexpr (std::is_same_v<T, Ar1B>) {
          if (!(std::fabs(b.rho) < 1.0)) {
            throw domain_error("AR(1) B requires |rho| < 1");
          }
          if (!std::isfinite(b.mean) || !std::isfinite(b.sd) || b.sd < 0.0) {
            throw domain_error("AR(1) B needs finite mean and sd >= 0");
          }
        } else {
          if (b.schedule.empty()) {
            throw domain_error("cloud B schedule must be nonempty");
          }
          for (double v : b.schedule) {
            if (!std::isfinite(v)) {
              throw domain_error("cloud B schedule entries must be finite");
            }
          }
        }
      },
      proc.b);
}

/// B-schedule of the cloud model read as a recurrence: B_1 = En_p,
/// B_2 = En_{p-1}, ..., B_p = En_1.
inline std::vector<double> cloud_b_schedule(const CloudParams& params) {
  return {params.en.rbegin(), params.en.rend()};
}

/// Coefficient process realizing the cloud model's recursion:
/// A = eps ~ N(0,1), B = the reversed En schedule, X_0 = He.
inline CoeffProcess cloud_coeffs(const CloudParams& params,
                                 Extension ext = Extension::hold_last) {
  return {GaussA{1.0}, CloudScheduleB{cloud_b_schedule(params), ext}};
}

/// Draws (A_t, B_t) pairs sequentially from one stream. Per step the A draw
/// happens before the B draw; constant sources consume nothing, so a
/// GaussA/CloudScheduleB process consumes exactly one draw per step and stays
/// in lockstep with gen_drop_def2 on a shared stream. The first AR(1) value
/// comes from the stationary marginal N(mean, sd^2 / (1 - rho^2)).
template <GaussianSource Stream>
class CoeffSampler {
 public:
  CoeffSampler(CoeffProcess proc, Stream& stream)
      : proc_(std::move(proc)), stream_(&stream) {
    validate(proc_);
  }

  CoeffPair next() {
    CoeffPair pair;
    pair.a = next_a();
    pair.b = next_b();
    return pair;
  }

 private:
  double next_a() {
    if (const auto* c = std::get_if<ConstA>(&proc_.a)) return c->value;
    return std::get<GaussA>(proc_.a).scale * stream_->next_gaussian();
  }

  double next_b() {
    return std::visit(
        [this](const auto& b) -> double {
          using T = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<T, ConstB>) {
            return b.value;
          } else if constexpr (std::is_same_v<T, GaussB>) {
            return b.mean + b.sd * stream_->next_gaussian();
          } else if constexpr (std::is_same_v<T, Ar1B>) {
            const double z = stream_->next_gaussian();
            if (!ar1_started_) {
              ar1_started_ = true;
              ar1_prev_ =
                  b.mean + b.sd / std::sqrt(1.0 - b.rho * b.rho) * z;
            } else {
              ar1_prev_ = b.mean + b.rho * (ar1_prev_ - b.mean) + b.sd * z;
            }
            return ar1_prev_;
          } else {
            if (schedule_pos_ < b.schedule.size()) {
              return b.schedule[schedule_pos_++];
            }
            if (b.extension == Extension::hold_last) {
              return b.schedule.back();
            }
            const double u = normal_cdf(stream_->next_gaussian());
            auto idx = static_cast<std::size_t>(
                u * static_cast<double>(b.schedule.size()));
            if (idx >= b.schedule.size()) idx = b.schedule.size() - 1;
            return b.schedule[idx];
          }
        },
        proc_.b);
  }

  CoeffProcess proc_;
  Stream* stream_;
  bool ar1_started_ = false;
  double ar1_prev_ = 0.0;
  std::size_t schedule_pos_ = 0;
};

/// Coefficients indexed by calendar time: (A_t, B_t) is a pure function of
/// (seed, t), so runs that start at different past times share realizations
/// wherever their times overlap. Each (t, component) pair owns a substream.
///
/// AR(1) values are produced from the moving-average form
/// B_t = mean + sd * sum_j rho^j eta_{t-j}, truncated once |rho|^j < 1e-18;
/// the innovations eta are themselves time-indexed, which keeps the joint law
/// intact across overlapping windows.
template <SplittableGaussianSource Stream>
class TimeIndexedCoeffs {
 public:
  TimeIndexedCoeffs(CoeffProcess proc, const Stream& base)
      : proc_(std::move(proc)), base_(base) {
    validate(proc_);
    if (const auto* ar = std::get_if<Ar1B>(&proc_.b)) {
      ar1_terms_ = 1;
      double w = ar->rho;
      while (std::fabs(w) >= 1e-18 && ar1_terms_ < 4096) {
        ++ar1_terms_;
        w *= ar->rho;
      }
    }
  }

  CoeffPair at(std::int64_t t) const { return {a_at(t), b_at(t)}; }

  double a_at(std::int64_t t) const {
    if (const auto* c = std::get_if<ConstA>(&proc_.a)) return c->value;
    return std::get<GaussA>(proc_.a).scale * unit_normal(t, 0);
  }

  double b_at(std::int64_t t) const {
    return std::visit(
        [this, t](const auto& b) -> double {
          using T = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<T, ConstB>) {
            return b.value;
          } else if constexpr (std::is_same_v<T, GaussB>) {
            return b.mean + b.sd * unit_normal(t, 1);
          } else if constexpr (std::is_same_v<T, Ar1B>) {
            double acc = 0.0;
            double w = 1.0;
            for (int j = 0; j < ar1_terms_; ++j) {
              acc += w * unit_normal(t - j, 1);
              w *= b.rho;
            }
            return b.mean + b.sd * acc;
          } else {
            const auto n = static_cast<std::int64_t>(b.schedule.size());
            if (t >= 1 && t <= n) {
              return b.schedule[static_cast<std::size_t>(t - 1)];
            }
            if (b.extension == Extension::hold_last) {
              // clamp: times before the schedule see its first value,
              // times after it see the last
              return t < 1 ? b.schedule.front() : b.schedule.back();
            }
            const double u = normal_cdf(unit_normal(t, 1));
            auto idx = static_cast<std::size_t>(
                u * static_cast<double>(b.schedule.size()));
            if (idx >= b.schedule.size()) idx = b.schedule.size() - 1;
            return b.schedule[idx];
          }
        },
        proc_.b);
  }

 private:
  double unit_normal(std::int64_t t, int component) const {
    auto sub = base_.substream(time_key(t, component));
    return sub.next_gaussian();
  }

  // zigzag-encodes signed time, then interleaves the component tag
  static std::uint64_t time_key(std::int64_t t, int component) noexcept {
    const std::uint64_t zig =
        t >= 0 ? 2ull * static_cast<std::uint64_t>(t)
               : 2ull * static_cast<std::uint64_t>(-(t + 1)) + 1ull;
    return zig * 2ull + static_cast<std::uint64_t>(component);
  }

  CoeffProcess proc_;
  Stream base_;
  int ar1_terms_ = 0;
};

// ---------------------------------------------------------------------------
// Recursion engines
// ---------------------------------------------------------------------------

enum class Form { linear, abs };

struct Trajectory {
  std::vector<double> values;  // X_0 .. X_n (shorter if the guard tripped)
  double x0 = 0.0;
  std::uint64_t seed = 0;
  Form form = Form::linear;
  std::optional<std::size_t> diverged_at;
};

namespace detail {

template <GaussianSource Stream>
Trajectory iterate(const CoeffProcess& coeffs, double x0, std::size_t n,
                   Stream& stream, Form form) {
  if (n < 1) throw domain_error("iterate: n must be at least 1");
  if (!std::isfinite(x0)) throw domain_error("iterate: x0 must be finite");
  Trajectory traj;
  traj.x0 = x0;
  traj.form = form;
  if constexpr (SplittableGaussianSource<Stream>) {
    traj.seed = stream.seed();
  }
  traj.values.reserve(n + 1);
  traj.values.push_back(x0);
  CoeffSampler<Stream> sampler(coeffs, stream);
  double x = x0;
  for (std::size_t k = 1; k <= n; ++k) {
    const CoeffPair c = sampler.next();
    x = (form == Form::abs) ? c.a * std::fabs(x) + c.b : c.a * x + c.b;
    traj.values.push_back(x);
    if (std::fabs(x) > kDivergenceThreshold) {
      traj.diverged_at = k;
      break;
    }
  }
  return traj;
}

}  // namespace detail

/// X_{t+1} = A_{t+1} X_t + B_{t+1}; the coefficient carries the index of the
/// state it produces.
template <GaussianSource Stream>
Trajectory iterate_linear(const CoeffProcess& coeffs, double x0, std::size_t n,
                          Stream& stream) {
  return detail::iterate(coeffs, x0, n, stream, Form::linear);
}

/// X_{t+1} = A_{t+1} |X_t| + B_{t+1}. With A = eps (scale 1) and the cloud
/// B-schedule this reproduces gen_drop_def2 bit-for-bit from X_0 = He.
template <GaussianSource Stream>
Trajectory iterate_abs(const CoeffProcess& coeffs, double x0, std::size_t n,
                       Stream& stream) {
  return detail::iterate(coeffs, x0, n, stream, Form::abs);
}

struct SeriesApprox {
  double value = 0.0;
  std::size_t terms_used = 0;
  double last_weight = 0.0;  // |prod A| at the point the accumulation stopped
};

/// Accumulates sum_k (prod_{i=1..k} A_{n-i}) B_{n-k-1} over a freshly drawn
/// past history; the k = 0 term is B_{n-1} (empty product = 1). Stops once
/// |prod A| < tol; hitting k_max first signals the non-summable regime.
template <GaussianSource Stream>
SeriesApprox series_solution(const CoeffProcess& coeffs, Stream& stream,
                             std::size_t k_max, double tol) {
  if (k_max < 1) throw domain_error("series_solution: k_max must be >= 1");
  if (!(tol > 0.0)) throw domain_error("series_solution: tol must be > 0");
  CoeffSampler<Stream> sampler(coeffs, stream);
  double value = 0.0;
  double weight = 1.0;
  for (std::size_t k = 0; k < k_max; ++k) {
    const CoeffPair c = sampler.next();
    value += weight * c.b;
    weight *= c.a;
    if (std::fabs(weight) < tol) {
      return {value, k + 1, std::fabs(weight)};
    }
  }
  throw numeric_error(
      "series_solution: |prod A| stayed above tol for k_max terms; the "
      "series looks non-summable (E[log|A|] >= 0 regime)");
}

/// The proof construction: start at zero at time -k and run
/// X_{t+1} = A_{t+1} |X_t| + B_{t+1} up to time n on time-indexed
/// coefficients, so every k shares one realization.
template <SplittableGaussianSource Stream>
double partial_solution(const CoeffProcess& coeffs, std::size_t k,
                        std::int64_t n, const Stream& stream) {
  if (k < 1) throw domain_error("partial_solution: k must be >= 1");
  const auto start = -static_cast<std::int64_t>(k);
  if (n < start) throw domain_error("partial_solution: n must be >= -k");
  TimeIndexedCoeffs<Stream> coeff_at(coeffs, stream);
  double x = 0.0;
  for (std::int64_t t = start + 1; t <= n; ++t) {
    const CoeffPair c = coeff_at.at(t);
    x = c.a * std::fabs(x) + c.b;
    if (std::fabs(x) > kDivergenceThreshold) {
      throw divergence_error("partial_solution: |X| exceeded the guard",
                             static_cast<std::size_t>(t - start));
    }
  }
  return x;
}

/// Y_{t+1} = |A_{t+1}| Y_t + |B_{t+1}| from Y_{-k} = 0, on the same
/// time-indexed realization as partial_solution. The pathwise bound
/// |partial_solution| <= Y holds exactly, including in floating point.
template <SplittableGaussianSource Stream>
double dominating_sequence(const CoeffProcess& coeffs, std::size_t k,
                           std::int64_t n, const Stream& stream) {
  if (k < 1) throw domain_error("dominating_sequence: k must be >= 1");
  const auto start = -static_cast<std::int64_t>(k);
  if (n < start) throw domain_error("dominating_sequence: n must be >= -k");
  TimeIndexedCoeffs<Stream> coeff_at(coeffs, stream);
  double y = 0.0;
  for (std::int64_t t = start + 1; t <= n; ++t) {
    const CoeffPair c = coeff_at.at(t);
    y = std::fabs(c.a) * y + std::fabs(c.b);
    if (std::fabs(y) > kDivergenceThreshold) {
      throw divergence_error("dominating_sequence: Y exceeded the guard",
                             static_cast<std::size_t>(t - start));
    }
  }
  return y;
}

}  // namespace cloudsre
