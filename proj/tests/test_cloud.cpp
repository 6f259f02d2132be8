#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "cloudsre/cloud.hpp"
#include "cloudsre/noise.hpp"
#include "cloudsre/stats.hpp"

using namespace cloudsre;

namespace {

// plays back a fixed script of "draws"
struct ScriptedSource {
  std::vector<double> values;
  std::size_t pos = 0;
  double next_gaussian() {
    REQUIRE(pos < values.size());
    return values[pos++];
  }
};
static_assert(GaussianSource<ScriptedSource>);

CloudParams random_params(NoiseStream& rng, std::size_t p) {
  CloudParams params;
  params.en.reserve(p);
  for (std::size_t i = 0; i < p; ++i) {
    params.en.push_back(2.0 * rng.next_gaussian());
  }
  params.he = std::fabs(rng.next_gaussian()) + 0.1;
  return params;
}

}  // namespace

TEST_CASE("validate accepts well-formed parameters", "[cloud]") {
  CHECK_NOTHROW(validate(CloudParams{{0.0}, 1.0}));
  const CloudParams third = validate(CloudParams{{1.0, 2.0, 3.0}, 0.1});
  CHECK(third.order() == 3);
}

TEST_CASE("validate rejects broken parameters", "[cloud]") {
  CHECK_THROWS_AS(validate(CloudParams{{0.0}, 0.0}), domain_error);
  CHECK_THROWS_AS(validate(CloudParams{{0.0}, -1.0}), domain_error);
  CHECK_THROWS_AS(validate(CloudParams{{}, 1.0}), domain_error);
  CHECK_THROWS_AS(validate(CloudParams{{0.0}, std::nan("")}), domain_error);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(validate(CloudParams{{inf}, 1.0}), domain_error);
}

TEST_CASE("degenerate noise collapses both definitions to the expectation",
          "[cloud]") {
  // def1, p = 1: x_1 = R_N(En_1, He) with eps = 0 is exactly En_1
  ScriptedSource zero1{{0.0}};
  CHECK(gen_drop_def1(CloudParams{{5.0}, 2.0}, zero1) == 5.0);

  // p = 3 with every eps = 0 walks the chain down to En_1 = Ex
  ScriptedSource zero3{{0.0, 0.0, 0.0}};
  CHECK(gen_drop_def1(CloudParams{{1.5, -2.0, 0.25}, 0.7}, zero3) == 1.5);
  CHECK(zero3.pos == 3);
}

TEST_CASE("explicit-noise form follows the recurrence step by step",
          "[cloud]") {
  ScriptedSource one{{1.0}};
  CHECK(gen_drop_def2(CloudParams{{5.0}, 2.0}, one) == 7.0);  // 5 + 2*1

  // x_1 = 3 + 1*(-3) = 0, then the sigma = 0 step still consumes a draw
  ScriptedSource script{{-3.0, 0.5}};
  CHECK(gen_drop_def2(CloudParams{{0.0, 3.0}, 1.0}, script) == 0.0);
  CHECK(script.pos == 2);
}

TEST_CASE("the two definitions are bit-identical on a shared stream",
          "[cloud]") {
  NoiseStream meta(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t p = 1 + static_cast<std::size_t>(trial % 6);
    const CloudParams params = random_params(meta, p);
    const auto seed = static_cast<std::uint64_t>(trial) * 2654435761ull + 17;
    NoiseStream s1(seed), s2(seed);
    REQUIRE(gen_drop_def1(params, s1) == gen_drop_def2(params, s2));
  }
}

TEST_CASE("batched drops carry count, seed and consume n*p draws", "[cloud]") {
  const CloudParams params = validate(CloudParams{{0.0, 1.0}, 0.5});
  NoiseStream stream(11);
  const DropBatch batch = gen_drops(params, 1000, stream, Definition::def2);
  CHECK(batch.values.size() == 1000);
  CHECK(batch.seed == 11);
  CHECK(batch.definition_used == Definition::def2);
  CHECK(stream.position() == 2000);
  for (double v : batch.values) REQUIRE(std::isfinite(v));

  NoiseStream other(11);
  CHECK_THROWS_AS(gen_drops(params, 0, other, Definition::def1), domain_error);
}

TEST_CASE("batches from both definitions are bit-identical", "[cloud]") {
  const CloudParams params = validate(CloudParams{{0.3, -1.2, 2.0}, 0.8});
  NoiseStream s1(99), s2(99);
  const DropBatch b1 = gen_drops(params, 500, s1, Definition::def1);
  const DropBatch b2 = gen_drops(params, 500, s2, Definition::def2);
  REQUIRE(b1.values == b2.values);
}

TEST_CASE("second-order drop mean matches the law of total variance band",
          "[cloud]") {
  // p = 2, en = [0, 1], he = 0.1: E[x_2] = En_1 = 0,
  // Var(x_2) = E[x_1^2] = En_2^2 + He^2 = 1.01
  const CloudParams params = validate(CloudParams{{0.0, 1.0}, 0.1});
  constexpr std::size_t n = 1'000'000;
  NoiseStream stream(5);
  const DropBatch batch = gen_drops(params, n, stream, Definition::def2);
  double sum = 0.0;
  for (double v : batch.values) sum += v;
  const double mean = sum / static_cast<double>(n);
  const double band = 4.0 * std::sqrt(1.01 / static_cast<double>(n));
  CHECK(std::fabs(mean) <= band);
}

TEST_CASE("second-order drops are leptokurtic with the scale-mixture kurtosis",
          "[cloud]") {
  // x_2 = |x_1| eps with x_1 ~ N(En_2, He^2):
  //   E[x_1^2] = En_2^2 + He^2, E[x_1^4] = En_2^4 + 6 En_2^2 He^2 + 3 He^4
  //   excess kurtosis = 3 E[x_1^4] / E[x_1^2]^2 - 3
  const double en2 = 1.0, he = 1.0;
  const double m2 = en2 * en2 + he * he;
  const double m4 =
      std::pow(en2, 4) + 6.0 * en2 * en2 * he * he + 3.0 * std::pow(he, 4);
  const double oracle = 3.0 * m4 / (m2 * m2) - 3.0;
  CHECK(oracle == Catch::Approx(4.5));

  const CloudParams params = validate(CloudParams{{0.0, en2}, he});
  NoiseStream stream(8);
  const DropBatch batch =
      gen_drops(params, 1'000'000, stream, Definition::def2);
  const Moments m = moments(batch.values);
  REQUIRE(m.excess_kurtosis.has_value());
  CHECK(*m.excess_kurtosis > 0.0);
  CHECK(std::fabs(*m.excess_kurtosis - oracle) <= 0.5);
}
