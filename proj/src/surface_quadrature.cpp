#include "ssct/surface_quadrature.hpp"

#include <gsl/gsl_integration.h>

#include "ssct/parallel.hpp"
#include "ssct/specfun.hpp"

namespace ssct {

namespace {

bool is_latlong_sphere(const Hypersurface& s) { return s.d == 3 && s.sphere && s.sphere->ntheta >= 2; }

std::vector<std::pair<double, double>> gauss_legendre(int n, double a, double b) {
  gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n));
  std::vector<std::pair<double, double>> out(n);
  for (int i = 0; i < n; ++i) gsl_integration_glfixed_point(a, b, static_cast<std::size_t>(i), &out[i].first, &out[i].second, t);
  gsl_integration_glfixed_table_free(t);
  return out;
}

// int_0^a H0(k t) dt with t = a u^2 to tame the logarithm
cplx integral_h0(double k, double a) {
  cplx acc = 0.0;
  for (auto [u, w] : gauss_legendre(48, 0.0, 1.0)) acc += w * 2.0 * a * u * hankel1(0.0, k * a * u * u);
  return acc;
}

}  // namespace

FreeLayerMatrices free_layer_matrices(const Hypersurface& s, double lambda, int parts) {
  return is_latlong_sphere(s) ? sphere_layer_matrices(s, lambda, parts) : polar_layer_matrices(s, lambda, parts);
}

FreeLayerMatrices polar_layer_matrices(const Hypersurface& s, double lambda, int parts) {
  const std::size_t n = s.size();
  Kernel K(lambda, s.d);
  FreeLayerMatrices m;
  if (parts & kS) m.S = Eigen::MatrixXcd::Zero(n, n);
  if (parts & kN) m.N = Eigen::MatrixXcd::Zero(n, n);
  if (parts & kD) m.D = Eigen::MatrixXcd::Zero(n, n);
  const double k = std::sqrt(lambda);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const Vec3 d = s.nodes[i] - s.nodes[j];
      const double r = norm(d);
      cplx v, dv;
      K.value_deriv(r, v, dv);
      if (parts & kS) m.S(i, j) = v * s.weights[j];
      if (parts & kN) m.N(i, j) = dv * dot(d, s.normals[i]) / r * s.weights[j];
      if (parts & kD) m.D(i, j) = -dv * dot(d, s.normals[j]) / r * s.weights[j];
    }
    if (parts & kS) {
      if (s.d == 3) {
        const double rho = std::sqrt(s.weights[i] / pi);
        // int over a disk of radius rho of sigma e^{ikr}/(4 pi r)
        m.S(i, i) = static_cast<double>(sigma) * 0.5 * (std::exp(I * (k * rho)) - 1.0) / (I * k);
      } else {
        m.S(i, i) = static_cast<double>(sigma) * 0.25 * I * 2.0 * integral_h0(k, 0.5 * s.weights[i]);
      }
    }
  });
  return m;
}

FreeLayerMatrices sphere_layer_matrices(const Hypersurface& s, double lambda, int parts) {
  if (!is_latlong_sphere(s)) throw DomainError("sphere_layer_matrices: needs a lat-long sphere");
  const LatLong& g = *s.sphere;
  const int nt = g.ntheta, np = g.nphi, Ld = nt - 1;
  const double R = g.radius;
  const Vec3 c = g.center;
  const std::size_t n = s.size();
  const LatLong unit = LatLong::make({0, 0, 0}, 1.0, nt, np);
  SphericalTransform T(unit);
  const std::size_t ncoef = T.ncoef();

  const int n1 = nt + 16, n2 = np + 16;
  const auto gl = gauss_legendre(n1, 0.0, pi);
  Kernel K(lambda, 3);

  FreeLayerMatrices m;
  m.spectral = true;
  if (parts & kS) m.S = Eigen::MatrixXcd::Zero(n, n);
  if (parts & kN) m.N = Eigen::MatrixXcd::Zero(n, n);
  if (parts & kD) m.D = Eigen::MatrixXcd::Zero(n, n);

  parallel_for(static_cast<std::size_t>(nt), [&](std::size_t ring) {
    const double a = g.theta[ring];
    const double ca = std::cos(a), sa = std::sin(a);
    const Vec3 xh{sa, 0.0, ca};
    const Vec3 X = c + R * xh;
    std::vector<cplx> cS(parts & kS ? ncoef : 0, 0.0), cN(parts & kN ? ncoef : 0, 0.0), cD(parts & kD ? ncoef : 0, 0.0);
    std::vector<double> P;
    std::vector<cplx> em(Ld + 1);
    for (const auto& [tp, wt] : gl) {
      const double st = std::sin(tp), ct = std::cos(tp);
      for (int q = 0; q < n2; ++q) {
        const double pp = 2.0 * pi * q / n2;
        const Vec3 yl{st * std::cos(pp), st * std::sin(pp), ct};
        // rotation about y taking the pole to xh
        const Vec3 yh{ca * yl[0] + sa * yl[2], yl[1], -sa * yl[0] + ca * yl[2]};
        const Vec3 d = X - (c + R * yh);
        const double r = norm(d);
        cplx v, dv;
        K.value_deriv(r, v, dv);
        const double W = wt * st * 2.0 * pi / n2;
        const cplx vS = v * W, vN = dv * dot(d, xh) / r * W, vD = -dv * dot(d, yh) / r * W;
        SphericalTransform::legendre(Ld, std::clamp(yh[2], -1.0, 1.0), P);
        const double phi = std::atan2(yh[1], yh[0]);
        const cplx e1 = std::polar(1.0, phi);
        em[0] = 1.0;
        for (int mm = 1; mm <= Ld; ++mm) em[mm] = em[mm - 1] * e1;
        for (int l = 0; l <= Ld; ++l)
          for (int mm = -l; mm <= l; ++mm) {
            const double p = P[SphericalTransform::lindex(l, std::abs(mm))];
            const cplx b = p * (mm >= 0 ? em[mm] : std::conj(em[-mm]));
            const std::size_t idx = SphericalTransform::index(l, mm);
            if (parts & kS) cS[idx] += vS * b;
            if (parts & kN) cN[idx] += vN * b;
            if (parts & kD) cD[idx] += vD * b;
          }
      }
    }
    auto fill = [&](std::vector<cplx>& coef, Eigen::MatrixXcd& M) {
      for (auto& v : coef) v = std::conj(v);
      const auto vals = T.synthesize_grid(coef, unit);
      // row for column 0 of this ring, then azimuthal shifts
      std::vector<cplx> row(n);
      for (std::size_t j = 0; j < n; ++j) row[j] = s.weights[j] * std::conj(vals[j]);
      for (int p = 0; p < np; ++p) {
        const std::size_t i = g.node(static_cast<int>(ring), p);
        for (int rr = 0; rr < nt; ++rr)
          for (int cc = 0; cc < np; ++cc) M(i, g.node(rr, cc)) = row[g.node(rr, ((cc - p) % np + np) % np)];
      }
    };
    if (parts & kS) fill(cS, m.S);
    if (parts & kN) fill(cN, m.N);
    if (parts & kD) fill(cD, m.D);
  });
  return m;
}

}  // namespace ssct
