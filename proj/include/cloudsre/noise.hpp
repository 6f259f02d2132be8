#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>

namespace cloudsre {

namespace detail {

// SplitMix64 finalizer (Steele/Lea/Flood; Vigna's fixed-increment variant).
inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Phi(x), the standard normal CDF, via the complementary error function.
inline double normal_cdf(double x) noexcept {
  return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

/// Phi^{-1}(p) for p in (0, 1): Wichura's PPND16 rational approximations
/// (algorithm AS 241), accurate to about 1e-16 relative over the full range.
inline double inverse_normal_cdf(double p) {
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  // For u in [0.5, 1], 1 - u is exact in IEEE double, so the two tails are
  // computed from identical inputs and the result is exactly antisymmetric.
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double z;
  if (r <= 5.0) {
    r -= 1.6;
    z = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
            3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
          4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
          2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    z = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
          5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -z : z;
}

/// Deterministic, seedable stream of i.i.d. standard-normal draws.
///
/// Engine: SplitMix64 (one 64-bit state, fixed golden-ratio increment),
/// one engine step per draw. Each uniform is the top 53 output bits mapped
/// to (0, 1) as (k + 0.5) * 2^-53 and pushed through inverse_normal_cdf,
/// so exactly one uniform is consumed per Gaussian and the sequence is a
/// pure function of the seed.
///
/// Substreams are derived by remixing (seed, index); they are deterministic
/// in that pair and statistically independent of the parent and of each
/// other. A stream is single-owner: never draw from one stream concurrently.
/// Distribute substreams instead.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) noexcept
      : seed_(seed), state_(seed), position_(0) {}

  /// One N(0,1) draw; advances position by exactly 1.
  double next_gaussian() noexcept {
    state_ += detail::kGolden;
    const std::uint64_t bits = detail::mix64(state_);
    ++position_;
    const double u = (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    return inverse_normal_cdf(u);
  }

  /// Child stream at `index`, a pure function of (seed, index).
  NoiseStream substream(std::uint64_t index) const noexcept {
    const std::uint64_t child =
        detail::mix64(detail::mix64(seed_ + detail::kGolden * index) ^
                      0x8E9A4D36C1F0B527ull);
    return NoiseStream(child);
  }

  std::uint64_t seed() const noexcept { return seed_; }

  /// Count of Gaussian draws consumed so far.
  std::uint64_t position() const noexcept { return position_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  std::uint64_t position_;
};

/// Anything that yields standard-normal draws; satisfied by NoiseStream and
/// by scripted test sources.
template <typename S>
concept GaussianSource = requires(S s) {
  { s.next_gaussian() } -> std::convertible_to<double>;
};

/// A GaussianSource that can also spawn independent child streams.
template <typename S>
concept SplittableGaussianSource =
    GaussianSource<S> && requires(const S s, std::uint64_t i) {
      { s.substream(i) } -> GaussianSource;
      { s.seed() } -> std::convertible_to<std::uint64_t>;
    };

}  // namespace cloudsre
