#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "ssct/specfun.hpp"

using namespace ssct;

TEST_CASE("hankel half order closed form") {
  const cplx h = hankel1(0.5, pi);
  CHECK(std::abs(h.real()) < 1e-14);
  CHECK(h.imag() == doctest::Approx(0.4501581580785).epsilon(1e-12));
  for (double z : {0.01, 0.7, 3.0, 40.0, 900.0}) CHECK(std::abs(hankel1(0.5, z)) * std::sqrt(z) == doctest::Approx(std::sqrt(2.0 / pi)).epsilon(1e-14));
}

TEST_CASE("hankel order zero at one") {
  const cplx h = hankel1(0.0, 1.0);
  CHECK(h.real() == doctest::Approx(0.7651976866).epsilon(1e-10));
  CHECK(h.imag() == doctest::Approx(0.0882569642).epsilon(1e-9));
}

TEST_CASE("integer orders agree with long double series") {
  for (double z = 1e-3; z <= 20.0; z *= 1.37) {
    long double j0, y0, j1, y1;
    oracle::bessel01(z, j0, y0, j1, y1);
    const cplx a = hankel1(0.0, z), b = hankel1(1.0, z);
    const double s0 = std::hypot(double(j0), double(y0)), s1 = std::hypot(double(j1), double(y1));
    CHECK(std::abs(a - cplx(double(j0), double(y0))) / s0 < 1e-10);
    CHECK(std::abs(b - cplx(double(j1), double(y1))) / s1 < 1e-10);
  }
}

TEST_CASE("Wronskian J Y' - J' Y = 2/(pi z)") {
  // J0' = -J1, Y0' = -Y1
  for (double z = 0.1; z <= 100.0; z *= 1.21) {
    const double w = -bessel_j0(z) * bessel_y1(z) + bessel_j1(z) * bessel_y0(z);
    CHECK(w == doctest::Approx(2.0 / (pi * z)).epsilon(1e-9));
  }
}

TEST_CASE("hankel rejects bad input") {
  CHECK_THROWS_AS(hankel1(0.0, 0.0), DomainError);
  CHECK_THROWS_AS(hankel1(2.0, 1.0), DomainError);
  CHECK_THROWS_AS(fundamental_solution(1.0, 3, -1.0), DomainError);
}

TEST_CASE("3D fundamental solution") {
  const auto e = fundamental_solution(1.0, 3, 1.0);
  CHECK(std::abs(e.value - double(sigma) * std::exp(I) / (4 * pi)) < 1e-15);
  // the commonly quoted digits 0.0430054 + 0.0669758i are off by 2e-4 relative
  CHECK(std::abs(e.value - double(sigma) * cplx(0.0430054, 0.0669758)) < 3e-4 * std::abs(e.value));
  for (double r : {0.01, 0.3, 2.0, 17.0}) CHECK(std::abs(fundamental_solution(1.0, 3, r).value) == doctest::Approx(1.0 / (4 * pi * r)).epsilon(1e-12));
  const cplx v = fundamental_solution(4.0, 3, 0.5).value / double(sigma);
  CHECK(std::arg(v) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("radiation condition") {
  // r (Phi' - i k Phi) = -Phi exactly, so at r = 100 it sits on the bound 1e-2 |Phi| r up to rounding
  const auto e = fundamental_solution(1.0, 3, 100.0);
  const cplx q = 100.0 * (e.radial_derivative - I * e.value);
  CHECK(std::abs(q) <= 1e-2 * std::abs(e.value) * 100.0 * (1 + 1e-12));
  CHECK(std::abs(q + e.value) < 1e-15);
  double prev = 1e300;
  for (double r = 1; r <= 1e4; r *= 10) {
    const auto f = fundamental_solution(1.0, 3, r);
    const double m = std::abs(r * (f.radial_derivative - I * f.value));
    CHECK(m < prev);
    prev = m;
  }
}

TEST_CASE("regular factor bounded near the origin in 3D") {
  double sup = 0.0;
  for (double r = 1.0; r > 1e-9; r *= 0.5) sup = std::max(sup, std::abs(fundamental_solution(4.0, 3, r).regular_factor));
  CHECK(sup <= 1.0 / (4 * pi) + 1e-12);
}

TEST_CASE("Kernel fast path matches Hankel formula") {
  for (int d : {2, 3}) {
    Kernel K(2.5, d);
    for (double r : {0.05, 0.5, 3.0, 15.0}) {
      const auto e = fundamental_solution(2.5, d, r);
      cplx v, dv;
      K.value_deriv(r, v, dv);
      CHECK(std::abs(v - e.value) <= 1e-12 * std::abs(e.value));
      CHECK(std::abs(dv - e.radial_derivative) <= 1e-10 * std::abs(e.radial_derivative));
    }
  }
}
