#pragma once

#include <cmath>
#include <cstdint>

#include "cloudsre/errors.hpp"

namespace cloudsre {

/// Euler-Mascheroni constant to full double precision.
inline double euler_gamma() noexcept {
  return 0.57721566490153286060651209008240243;
}

/// Gamma(1/2) = sqrt(pi).
inline double gamma_half() noexcept {
  return 1.77245385090551602729816748334114518;
}

/// psi(1/2) = -gamma - 2 log 2, the digamma function at 1/2.
inline double psi_half() noexcept {
  return -euler_gamma() - 2.0 * std::log(2.0);
}

enum class LogMomentMethod { closed_form, quadrature, monte_carlo };

struct LogMomentResult {
  double value = 0.0;
  LogMomentMethod method = LogMomentMethod::closed_form;
  double stderr_ = 0.0;  // 0 for deterministic methods
};

/// E[log|Z|] for Z ~ N(0,1), closed form -(gamma + log 2) / 2. Strictly
/// negative, which is the contraction hypothesis the whole artifact leans on.
inline LogMomentResult expected_log_abs_std_normal() noexcept {
  return {-(euler_gamma() + std::log(2.0)) / 2.0,
          LogMomentMethod::closed_form, 0.0};
}

namespace detail {

inline double std_normal_pdf(double x) noexcept {
  return std::exp(-0.5 * x * x) * 0.39894228040143267794;  // 1/sqrt(2*pi)
}

// Recursive adaptive Simpson with Richardson correction. `evals` is a shared
// budget; exhausting it signals that the requested tolerance is out of reach.
template <typename F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm,
                        double fb, double whole, double tol, int depth,
                        long& evals) {
  if (evals <= 0) {
    throw numeric_error(
        "quadrature: evaluation budget exhausted before reaching tolerance");
  }
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  evals -= 2;
  const double h = b - a;
  const double left = (h / 12.0) * (fa + 4.0 * flm + fm);
  const double right = (h / 12.0) * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0) {
    throw numeric_error("quadrature: recursion limit hit before tolerance");
  }
  if (std::fabs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1,
                          evals) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1,
                          evals);
}

template <typename F>
double integrate(const F& f, double a, double b, double tol, long& evals) {
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  evals -= 3;
  const double whole = ((b - a) / 6.0) * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48, evals);
}

}  // namespace detail

/// Numerically evaluates 2 * int_0^inf log(a) phi(a) da to absolute error
/// <= tol, independently of the closed form above.
///
/// The integrable log singularity at 0 is removed by substituting a = e^{-t}
/// on (0, 1), which turns that piece into -int_0^T t e^{-t} phi(e^{-t}) dt
/// with a smooth integrand. The upper limit of the (1, inf) piece is
/// truncated once the Gaussian tail bound 2 phi(U) drops below tol / 10.
inline LogMomentResult log_moment_quadrature(double tol) {
  if (!(tol > 0.0) || !(tol < 1e-2)) {
    throw domain_error("log_moment_quadrature: tol must lie in (0, 1e-2)");
  }

  // Truncation points with remainder bounds:
  //   right tail:  2 * int_U^inf log(a) phi(a) da <= 2 phi(U)      <= tol/10
  //   left (in t): 2/sqrt(2pi) * int_T^inf t e^{-t} dt = c(T+1)e^{-T} <= tol/10
  double upper = 2.0;
  while (2.0 * detail::std_normal_pdf(upper) > tol / 10.0) upper += 0.5;
  double t_max = 2.0;
  while (2.0 * 0.39894228040143267794 * (t_max + 1.0) * std::exp(-t_max) >
         tol / 10.0) {
    t_max += 0.5;
  }

  const auto left_integrand = [](double t) {
    const double a = std::exp(-t);
    return t * a * detail::std_normal_pdf(a);
  };
  const auto right_integrand = [](double a) {
    return std::log(a) * detail::std_normal_pdf(a);
  };

  long evals = 4'000'000;
  const double left =
      -detail::integrate(left_integrand, 0.0, t_max, 0.2 * tol, evals);
  const double right =
      detail::integrate(right_integrand, 1.0, upper, 0.2 * tol, evals);
  return {2.0 * (left + right), LogMomentMethod::quadrature, 0.0};
}

}  // namespace cloudsre
