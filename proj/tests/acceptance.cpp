// Acceptance suite: one check per shipping criterion, each printed as a
// single [PASS]/[FAIL] line with the measured quantity and its bound.
// Exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cloudsre/cloudsre.hpp"

using namespace cloudsre;

namespace {

struct Criterion {
  int number;
  std::string name;
  double time_limit_s;
  std::function<bool(std::string&)> check;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

constexpr double kClosedForm = -0.6351814227307391;  // -(gamma + ln 2) / 2

// 1. closed form vs quadrature oracle
bool criterion_closed_form(std::string& detail) {
  const double closed = expected_log_abs_std_normal().value;
  const double quad = log_moment_quadrature(1e-10).value;
  const double diff = std::fabs(closed - quad);
  detail = "|closed - quadrature| = " + fmt(diff) + " (bound 1e-8)";
  return diff <= 1e-8;
}

// 2. Monte-Carlo Lyapunov estimate within 4 SE of the closed form
bool criterion_lyapunov(std::string& detail) {
  const NoiseStream base(2);
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    NoiseStream stream = base.substream(seed);
    const MomentEstimate e = estimate_lyapunov(GaussA{1.0}, 1'000'000, stream);
    if (std::fabs(e.estimate - kClosedForm) <= 4.0 * e.stderr_) ++hits;
  }
  detail = std::to_string(hits) + "/100 seeds within 4 SE (need >= 99)";
  return hits >= 99;
}

// 3. both generative definitions bit-identical over random parameters
bool criterion_equivalence(std::string& detail) {
  NoiseStream meta(3);
  int identical = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = static_cast<std::size_t>(1 + trial % 6);
    CloudParams params;
    for (std::size_t i = 0; i < p; ++i) {
      params.en.push_back(3.0 * meta.next_gaussian());
    }
    params.he = std::fabs(meta.next_gaussian()) + 0.05;
    const auto seed = static_cast<std::uint64_t>(trial) * 6364136223846793005ull + 1442695040888963407ull;
    NoiseStream s1(seed), s2(seed);
    if (gen_drop_def1(params, s1) == gen_drop_def2(params, s2)) ++identical;
  }
  detail = std::to_string(identical) + "/1000 cases bit-identical (need 1000)";
  return identical == 1000;
}

// 4. pathwise contraction with merge and the ergodic decay slope
bool criterion_contraction(std::string& detail) {
  const NoiseStream base(4);
  const CoeffProcess coeffs{GaussA{1.0}, ConstB{1.0}};
  std::size_t violations = 0;
  int merged = 0;
  std::vector<double> slopes;
  for (std::uint64_t run = 0; run < 1000; ++run) {
    NoiseStream stream = base.substream(run);
    const CouplingReport rep = coupling_decay(coeffs, 0.0, 100.0, 500, stream);
    violations += rep.contraction_violations;
    if (rep.merged_at || std::fabs(rep.deltas.back()) < 1e-200) ++merged;
    if (rep.slope) slopes.push_back(*rep.slope);
  }
  const double med = median(slopes);
  detail = "violations = " + std::to_string(violations) + ", merged = " +
           std::to_string(merged) + "/1000, median slope = " + fmt(med) +
           " (target -0.6352 +/- 0.05)";
  return violations == 0 && merged == 1000 && std::fabs(med + 0.6352) <= 0.05;
}

// 5. |partial solution| <= dominating sequence, exactly, at every step
bool criterion_domination(std::string& detail) {
  std::size_t violations = 0;
  std::size_t steps = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const NoiseStream stream = NoiseStream(5).substream(seed);
    const CoeffProcess coeffs =
        seed % 2 == 0 ? CoeffProcess{GaussA{1.0}, ConstB{1.0}}
                      : CoeffProcess{GaussA{1.0}, GaussB{0.0, 1.0}};
    TimeIndexedCoeffs<NoiseStream> coeff_at(coeffs, stream);
    const auto k = static_cast<std::size_t>(1 + seed % 50);
    double x = 0.0, y = 0.0;
    for (std::int64_t t = -static_cast<std::int64_t>(k) + 1; t <= 20; ++t) {
      const CoeffPair c = coeff_at.at(t);
      x = c.a * std::fabs(x) + c.b;
      y = std::fabs(c.a) * y + std::fabs(c.b);
      ++steps;
      if (std::fabs(x) > y) ++violations;
    }
  }
  detail = std::to_string(violations) + " violations over " +
           std::to_string(steps) + " steps (need 0)";
  return violations == 0;
}

// 6. Cauchy property of the partial solutions
bool criterion_cauchy(std::string& detail) {
  const CoeffProcess coeffs{GaussA{1.0}, ConstB{1.0}};
  int good = 0, monotone_count = 0, small_gap_count = 0;
  double worst_gap = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const NoiseStream stream = NoiseStream(6).substream(seed);
    std::vector<double> gaps;
    for (std::size_t k : {8u, 16u, 32u, 64u}) {
      const double near = partial_solution(coeffs, k, 0, stream);
      const double far = partial_solution(coeffs, 2 * k, 0, stream);
      gaps.push_back(std::fabs(far - near));
    }
    bool monotone = true;
    for (std::size_t i = 1; i < gaps.size(); ++i) {
      if (gaps[i] > gaps[i - 1]) monotone = false;
    }
    if (monotone) ++monotone_count;
    if (gaps.back() < 1e-12) ++small_gap_count;
    worst_gap = std::max(worst_gap, gaps.back());
    if (monotone && gaps.back() < 1e-12) ++good;
  }
  detail = std::to_string(good) +
           "/100 seeds with non-increasing gaps and k=64 gap < 1e-12 "
           "(need >= 95; monotone " +
           std::to_string(monotone_count) + "/100, gap < 1e-12 " +
           std::to_string(small_gap_count) + "/100, max k=64 gap " +
           fmt(worst_gap) + ")";
  return good >= 95;
}

// 7. stationarity of the settled ensemble plus the transient control
bool criterion_stationarity(std::string& detail) {
  const CoeffProcess coeffs{GaussA{1.0}, ConstB{1.0}};
  std::size_t rejected = 0, total = 0;
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    const NoiseStream stream = NoiseStream(7).substream(rep);
    const StationarityReport report =
        stationarity_test(coeffs, 0.0, 500, {50, 100, 200}, 500, stream);
    for (const auto& lag : report.ks_stats) {
      ++total;
      if (lag.p_value < kStationarityAlpha) ++rejected;
    }
  }
  const double rate = static_cast<double>(rejected) / static_cast<double>(total);

  const NoiseStream control_stream = NoiseStream(7).substream(1000);
  const StationarityReport control =
      stationarity_test(coeffs, 1e6, 0, {1}, 500, control_stream);
  const bool control_rejects = control.ks_stats[0].p_value < 0.01;

  detail = "rejection rate " + std::to_string(rejected) + "/" +
           std::to_string(total) + " = " + fmt(rate) +
           " (bound 0.05); transient control p = " +
           fmt(control.ks_stats[0].p_value) + " (< 0.01)";
  return rate <= 0.05 && control_rejects;
}

// 8. stability boundary: verdicts at scale 1 and 3, guard trip speed
bool criterion_stability_boundary(std::string& detail) {
  NoiseStream s1(80), s2(81), s3(82);
  const Theorem2Report stable =
      check_theorem2_conditions({GaussA{1.0}, ConstB{1.0}}, 100'000, s1);
  const Theorem2Report unstable =
      check_theorem2_conditions({GaussA{3.0}, ConstB{1.0}}, 100'000, s2);
  const Theorem2Report edge =
      check_theorem2_conditions({ConstA{1.0}, ConstB{1.0}}, 100'000, s3);

  int tripped = 0;
  const NoiseStream base(8);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    NoiseStream stream = base.substream(seed);
    const Trajectory traj =
        iterate_abs({GaussA{3.0}, ConstB{1.0}}, 1.0, 200, stream);
    if (traj.diverged_at) ++tripped;
  }

  detail = "verdicts " +
           std::string(stable.verdict == StabilityVerdict::stationary_expected
                           ? "stationary"
                           : "WRONG") +
           "/" +
           std::string(unstable.verdict == StabilityVerdict::unstable_expected
                           ? "unstable"
                           : "WRONG") +
           "/" +
           std::string(edge.verdict == StabilityVerdict::boundary ? "boundary"
                                                                  : "WRONG") +
           "; guard tripped in " + std::to_string(tripped) +
           "/100 runs within 200 steps (need >= 95)";
  return stable.verdict == StabilityVerdict::stationary_expected &&
         unstable.verdict == StabilityVerdict::unstable_expected &&
         edge.verdict == StabilityVerdict::boundary && tripped >= 95;
}

// 9. truncated series against the geometric closed form and the iteration
bool criterion_series(std::string& detail) {
  NoiseStream stream(9);
  const SeriesApprox series =
      series_solution({ConstA{0.5}, ConstB{1.0}}, stream, 100'000, 1e-12);
  const Trajectory traj =
      iterate_linear({ConstA{0.5}, ConstB{1.0}}, 0.0, 100, stream);
  const double series_err = std::fabs(series.value - 2.0);
  const double iter_err = std::fabs(traj.values.back() - 2.0);
  detail = "|series - 2| = " + fmt(series_err) + ", |iterate - 2| = " +
           fmt(iter_err) + " (bounds 1e-11)";
  return series_err <= 1e-11 && iter_err <= 1e-11;
}

// 10. leptokurtosis of second-order drops at the scale-mixture value
bool criterion_kurtosis(std::string& detail) {
  const CloudParams params = validate(CloudParams{{0.0, 1.0}, 1.0});
  NoiseStream stream(10);
  const DropBatch batch =
      gen_drops(params, 1'000'000, stream, Definition::def2);
  const Moments m = moments(batch.values);
  if (!m.excess_kurtosis) {
    detail = "kurtosis undefined";
    return false;
  }
  detail = "excess kurtosis = " + fmt(*m.excess_kurtosis) +
           " (target 4.5 +/- 0.5, strictly positive)";
  return *m.excess_kurtosis > 0.0 &&
         std::fabs(*m.excess_kurtosis - 4.5) <= 0.5;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "closed-form log-moment vs quadrature oracle", 1.0,
       criterion_closed_form},
      {2, "Monte-Carlo Lyapunov estimate (100 seeds)", 30.0,
       criterion_lyapunov},
      {3, "generative definition equivalence (1000 cases)", 5.0,
       criterion_equivalence},
      {4, "pathwise coupling contraction (1000 runs)", 20.0,
       criterion_contraction},
      {5, "dominating-sequence bound (500 grids)", 10.0, criterion_domination},
      {6, "Cauchy convergence of partial solutions", 10.0, criterion_cauchy},
      {7, "stationarity KS ensemble (20 repetitions)", 60.0,
       criterion_stationarity},
      {8, "stability boundary and divergence guard", 10.0,
       criterion_stability_boundary},
      {9, "linear-SRE series closed form", 1.0, criterion_series},
      {10, "second-order heavy tails", 10.0, criterion_kurtosis},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    std::string detail;
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = criterion.check(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    const bool in_time = seconds < criterion.time_limit_s;
    if (!in_time) {
      detail += " [exceeded " + fmt(criterion.time_limit_s) + " s budget]";
    }
    const bool passed = ok && in_time;
    std::printf("[%s] %2d. %s — %s (%.2f s)\n", passed ? "PASS" : "FAIL",
                criterion.number, criterion.name.c_str(), detail.c_str(),
                seconds);
    if (!passed) ++failures;
  }
  if (failures > 0) {
    std::printf("%d of %zu acceptance criteria failed\n", failures,
                criteria.size());
  } else {
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
  }
  return failures;
}
