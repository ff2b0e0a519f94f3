#include "doctest.h"

#include "lifespan/testfn.hpp"

#include <cmath>

using namespace lifespan::testfn;

namespace {
const TestFunctionContext n1(1), n2(2), n3(3);
}

TEST_CASE("closed values") {
  for (const auto& c : {n1, n2, n3}) CHECK(phi(0.0, c) == 1.0);
  CHECK(phi(1.0, n1) == doctest::Approx(1.5430806348).epsilon(1e-10));
  CHECK(phi(2.0, n3) == doctest::Approx(1.8134302039).epsilon(1e-10));
  CHECK(phi_prime(1.0, n1) == doctest::Approx(std::sinh(1.0)).epsilon(1e-14));
  for (const auto& c : {n1, n2, n3}) CHECK(phi_prime(0.0, c) == 0.0);
  CHECK(psi(0, 0, n2) == 1.0);
  CHECK(psi(1, 0, n3) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(psi(2, 2, n3) == doctest::Approx(std::exp(-2.0) * std::sinh(2.0) / 2).epsilon(1e-14));
  CHECK_THROWS(phi(-1.0, n1));
  CHECK_THROWS(TestFunctionContext(4));
}

TEST_CASE("derivatives against central differences") {
  const double h = 1e-5;
  for (const auto& c : {n1, n2, n3}) {
    for (double r : {0.05, 0.3, 1.3, 4.0, 12.0}) {
      const double fd1 = (phi(r + h, c) - phi(r - h, c)) / (2 * h);
      const double fd2 = (phi_prime(r + h, c) - phi_prime(r - h, c)) / (2 * h);
      CHECK(phi_prime(r, c) == doctest::Approx(fd1).epsilon(1e-6));
      CHECK(phi_second(r, c) == doctest::Approx(fd2).epsilon(1e-6));
      const double e = std::exp(-r);
      CHECK(phi_scaled(r, c) == doctest::Approx(phi(r, c) * e).epsilon(1e-13));
      CHECK(phi_prime_scaled(r, c) == doctest::Approx(phi_prime(r, c) * e).epsilon(1e-12));
      CHECK(phi_second_scaled(r, c) == doctest::Approx(phi_second(r, c) * e).epsilon(1e-12));
      CHECK(log_phi(r, c) == doctest::Approx(std::log(phi(r, c))).epsilon(1e-13));
    }
  }
  // n = 3 first derivative near the origin, against the closed form.
  const double r = 0.05;
  CHECK(phi_prime(r, n3) == doctest::Approx((r * std::cosh(r) - std::sinh(r)) / (r * r)).epsilon(1e-9));
}

TEST_CASE("Bessel branches agree around the switch point") {
  for (double x = 20.0; x <= 30.0; x += 0.25) {
    for (int order : {0, 1}) {
      const double s = bessel_i_series(order, x) * std::exp(-x);
      CHECK(bessel_i_asymptotic_scaled(order, x) == doctest::Approx(s).epsilon(1e-10));
    }
  }
  CHECK(bessel_i(0, 1.0) == doctest::Approx(1.2660658777520082).epsilon(1e-15));
  CHECK(bessel_i(1, 1.0) == doctest::Approx(0.5651591039924851).epsilon(1e-15));
}

TEST_CASE("closed forms match the sphere average") {
  for (const auto& c : {n2, n3}) {
    for (double r = 0.0; r <= 10.0; r += 0.5) {
      CHECK(phi_sphere_average(r, c) == doctest::Approx(phi(r, c)).epsilon(1e-8));
    }
  }
  CHECK(phi_sphere_average(3.0, n1) == doctest::Approx(std::cosh(3.0)).epsilon(1e-14));
}

TEST_CASE("Laplacian identity at second order") {
  for (const auto& c : {n1, n2, n3}) {
    // Below dr = 1e-3 rounding in the second difference starts to show.
    const double a = check_laplacian_identity(c, 10.0, 2e-3);
    const double b = check_laplacian_identity(c, 10.0, 1e-3);
    CHECK(b <= 1e-5);
    CHECK(std::log2(a / b) == doctest::Approx(2.0).epsilon(0.1));
  }
}

TEST_CASE("strictly increasing") {
  for (const auto& c : {n1, n2, n3}) {
    double prev = phi(0, c);
    for (int i = 1; i <= 4000; ++i) {
      const double v = phi(0.01 * i, c);
      CHECK(v > prev);
      prev = v;
    }
  }
}

TEST_CASE("integral estimates") {
  for (double t : {0.0, 1.0, 10.0}) CHECK(psi_power_integral(t, 0, n1, 1e-3) == doctest::Approx(2 * (1 + t)).epsilon(1e-12));
  CHECK_THROWS(psi_power_integral(1, 2.5, n1, 1e-3));
  for (const auto& c : {n1, n2, n3}) {
    for (double b : {0.0, 1.0, 2.0}) {
      for (double t : {0.0, 1.0, 10.0, 100.0}) {
        const double a = psi_power_ratio(t, b, c, 1e-2), h = psi_power_ratio(t, b, c, 5e-3);
        CHECK(a > 0);
        CHECK(std::abs(h - a) / a <= 0.1);
      }
    }
  }
}

TEST_CASE("sup bound and growth band") {
  CHECK(check_psi_sup(0.0, n1) == doctest::Approx(std::cosh(1.0)).epsilon(1e-12));
  CHECK(check_psi_sup(100.0, n2) == doctest::Approx(check_psi_sup(50.0, n2)).epsilon(0.1));
  double lo = 1e300, hi = 0;
  for (const auto& c : {n1, n2, n3}) {
    for (double r = 0; r <= 50; r += 0.1) {
      lo = std::min(lo, testpro_ratio(r, c));
      hi = std::max(hi, testpro_ratio(r, c));
    }
  }
  CHECK(lo > 0.1);
  CHECK(hi < 2.0);
}
