#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cloudsre/special_functions.hpp"

using namespace cloudsre;

// frozen with mpmath at 30 digits
constexpr double kEulerGamma = 0.57721566490153286061;
constexpr double kExpectedLogAbs = -0.635181422730739085;
constexpr double kPi = 3.14159265358979323846;

TEST_CASE("euler_gamma matches the tabulated constant", "[special_functions]") {
  CHECK(euler_gamma() == Catch::Approx(0.5772156649015329).epsilon(1e-15));
  CHECK(euler_gamma() == Catch::Approx(kEulerGamma).epsilon(1e-15));
  CHECK(std::floor(euler_gamma()) == 0.0);
  // the 4-digit value as usually printed
  CHECK(std::round(euler_gamma() * 1e4) / 1e4 == 0.5772);
}

TEST_CASE("gamma_half is sqrt(pi)", "[special_functions]") {
  CHECK(gamma_half() > 0.0);
  CHECK(gamma_half() == Catch::Approx(1.7724538509).epsilon(1e-10));
  CHECK(gamma_half() * gamma_half() == Catch::Approx(kPi).margin(1e-12));
}

TEST_CASE("psi_half = -gamma - 2 log 2", "[special_functions]") {
  CHECK(psi_half() < 0.0);
  CHECK(psi_half() == Catch::Approx(-1.9635100260).margin(1e-9));
  CHECK(psi_half() + euler_gamma() ==
        Catch::Approx(-2.0 * std::log(2.0)).margin(1e-12));
  CHECK(psi_half() == Catch::Approx(-1.96351002602142348).epsilon(1e-15));
}

TEST_CASE("closed-form log moment of |N(0,1)|", "[special_functions]") {
  const LogMomentResult r = expected_log_abs_std_normal();
  CHECK(r.value < 0.0);
  CHECK(r.method == LogMomentMethod::closed_form);
  CHECK(r.stderr_ == 0.0);
  CHECK(r.value == Catch::Approx(-0.6351814227).margin(1e-9));
  CHECK(r.value == Catch::Approx(kExpectedLogAbs).epsilon(1e-15));
  CHECK(2.0 * r.value + euler_gamma() + std::log(2.0) ==
        Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("quadrature oracle agrees with the closed form",
          "[special_functions]") {
  const LogMomentResult tight = log_moment_quadrature(1e-10);
  CHECK(tight.method == LogMomentMethod::quadrature);
  CHECK(tight.stderr_ == 0.0);
  CHECK(tight.value == Catch::Approx(kExpectedLogAbs).margin(1e-10));
  CHECK(std::fabs(tight.value - expected_log_abs_std_normal().value) <= 1e-8);

  const LogMomentResult loose = log_moment_quadrature(1e-4);
  CHECK(std::fabs(loose.value - expected_log_abs_std_normal().value) <= 1e-4);
}

TEST_CASE("quadrature honors its requested tolerance", "[special_functions]") {
  for (double tol : {1e-3, 1e-5, 1e-7, 1e-9, 1e-11}) {
    const LogMomentResult r = log_moment_quadrature(tol);
    CHECK(std::fabs(r.value - kExpectedLogAbs) <= tol);
  }
}

TEST_CASE("quadrature tolerance preconditions", "[special_functions]") {
  CHECK_THROWS_AS(log_moment_quadrature(0.0), domain_error);
  CHECK_THROWS_AS(log_moment_quadrature(-1e-6), domain_error);
  CHECK_THROWS_AS(log_moment_quadrature(1e-2), domain_error);
  CHECK_THROWS_AS(log_moment_quadrature(0.5), domain_error);
}
