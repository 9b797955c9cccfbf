#pragma once
// Independent reference implementations used only by tests.

#include <cmath>
#include <complex>

namespace oracle {

// J0, Y0, J1, Y1 by the ascending series in long double; reliable for z <= 20
inline void bessel01(long double z, long double& j0, long double& y0, long double& j1, long double& y1) {
  const long double g = 0.577215664901532860606512090082402431L;
  const long double pi = 3.14159265358979323846264338327950288L;
  const long double q = z * z / 4;
  long double t0 = 1, t1 = z / 2, h = 0, h1 = 1;
  long double sj0 = 0, sy0 = 0, sj1 = 0, sy1 = 0;
  for (int k = 0; k < 400; ++k) {
    const long double s = (k % 2) ? -1 : 1;
    sj0 += s * t0;
    sy0 += s * h * t0;
    sj1 += s * t1;
    sy1 += s * (h + h1) * t1;
    t0 *= q / ((k + 1.0L) * (k + 1.0L));
    t1 *= q / ((k + 1.0L) * (k + 2.0L));
    h += 1.0L / (k + 1);
    h1 += 1.0L / (k + 2);
  }
  const long double lg = std::log(z / 2) + g;
  j0 = sj0;
  y0 = 2 / pi * (lg * sj0 - sy0);
  j1 = sj1;
  y1 = 2 / pi * lg * sj1 - 2 / (pi * z) - sy1 / pi;
}

// spherical Bessel j_l and Hankel h_l^(1) by upward recurrence (fine for l <= kr + a few)
inline std::complex<double> sph_hankel(int l, double x) {
  std::complex<double> I(0, 1);
  std::complex<double> h0 = -I * std::exp(I * x) / x;
  if (l == 0) return h0;
  std::complex<double> h1 = -std::exp(I * x) * (x + I) / (x * x);
  for (int n = 1; n < l; ++n) {
    std::complex<double> h2 = (2.0 * n + 1.0) / x * h1 - h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

}  // namespace oracle

namespace oracle {
// j_l and h_l^(1) and their derivatives (upward recurrence; adequate for small l and moderate x)
struct SphBessel {
  double j, dj;
  std::complex<double> h, dh;
};
inline SphBessel sph_bessel(int l, double x) {
  auto hl = [&](int n) { return sph_hankel(n, x); };
  const std::complex<double> h = hl(l);
  const std::complex<double> hm = l == 0 ? -hl(1) : hl(l - 1);  // h_{-1}' pattern: h_0' = -h_1
  std::complex<double> dh;
  if (l == 0)
    dh = -hl(1);
  else
    dh = hm - (l + 1.0) / x * h;
  // j_l = Re h_l for real x
  return {h.real(), dh.real(), h, dh};
}
}  // namespace oracle

namespace oracle {
// j_l by its power series; stable for all l at moderate x
inline double sph_j(int l, double x) {
  long double pre = 1.0L;
  for (int i = 1; i <= l; ++i) pre *= static_cast<long double>(x) / (2.0L * i + 1.0L);
  long double term = 1.0L, sum = 1.0L;
  for (int k = 1; k < 200; ++k) {
    term *= -0.5L * x * x / (k * (2.0L * l + 2.0L * k + 1.0L));
    sum += term;
    if (std::fabs(term) < 1e-21L * std::fabs(sum)) break;
  }
  return static_cast<double>(pre * sum);
}
}  // namespace oracle
