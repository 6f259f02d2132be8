#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cloudsre/errors.hpp"
#include "cloudsre/noise.hpp"

namespace cloudsre {

/// The p+1 numerical characteristics of a p-order cloud model:
/// en = [En_1, ..., En_p] with En_1 the expectation, and He > 0.
struct CloudParams {
  std::vector<double> en;
  double he = 1.0;

  std::size_t order() const noexcept { return en.size(); }
};

/// Validates He > 0, p >= 1 and finiteness; returns the params unchanged.
inline CloudParams validate(CloudParams params) {
  if (params.en.empty()) {
    throw domain_error("cloud: en must contain at least one entry");
  }
  if (!(params.he > 0.0)) {
    throw domain_error("cloud: He must be strictly positive");
  }
  if (!std::isfinite(params.he)) {
    throw domain_error("cloud: He must be finite");
  }
  for (double e : params.en) {
    if (!std::isfinite(e)) {
      throw domain_error("cloud: every En entry must be finite");
    }
  }
  return params;
}

enum class Definition { def1, def2 };

struct DropBatch {
  std::vector<double> values;
  CloudParams params;
  std::uint64_t seed = 0;
  Definition definition_used = Definition::def1;
};

/// One realization of N(mu, sigma^2) as mu + sigma * eps. sigma = 0 is the
/// degenerate case: the draw is still consumed so both generative definitions
/// stay in lockstep on one stream.
template <GaussianSource Stream>
double r_n(double mu, double sigma, Stream& stream) {
  return mu + sigma * stream.next_gaussian();
}

/// Nested Gaussian recursion, original form: x_1 = R_N(En_p, He),
/// x_i = R_N(En_{p-(i-1)}, |x_{i-1}|). Consumes exactly p draws.
template <GaussianSource Stream>
double gen_drop_def1(const CloudParams& params, Stream& stream) {
  const std::size_t p = params.order();
  double x = r_n(params.en[p - 1], params.he, stream);
  for (std::size_t i = 2; i <= p; ++i) {
    x = r_n(params.en[p - i], std::fabs(x), stream);
  }
  return x;
}

/// Same recursion with the noise made explicit: x_1 = En_p + He * eps,
/// x_i = En_{p-(i-1)} + |x_{i-1}| * eps. Bit-identical to gen_drop_def1 on a
/// shared stream. Consumes exactly p draws.
template <GaussianSource Stream>
double gen_drop_def2(const CloudParams& params, Stream& stream) {
  const std::size_t p = params.order();
  double x = params.en[p - 1] + params.he * stream.next_gaussian();
  for (std::size_t i = 2; i <= p; ++i) {
    x = params.en[p - i] + std::fabs(x) * stream.next_gaussian();
  }
  return x;
}

/// n sequential drops from one stream (n * p draws total).
template <GaussianSource Stream>
DropBatch gen_drops(const CloudParams& params, std::size_t n, Stream& stream,
                    Definition which) {
  if (n == 0) {
    throw domain_error("gen_drops: n must be at least 1");
  }
  DropBatch batch;
  batch.params = params;
  batch.definition_used = which;
  if constexpr (SplittableGaussianSource<Stream>) {
    batch.seed = stream.seed();
  }
  batch.values.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    batch.values.push_back(which == Definition::def1
                               ? gen_drop_def1(params, stream)
                               : gen_drop_def2(params, stream));
  }
  return batch;
}

}  // namespace cloudsre
