#include "ssct/geometry.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace ssct {

BoxGrid BoxGrid::make(int d, double L, int n) {
  if (d != 2 && d != 3) throw DomainError("BoxGrid: d must be 2 or 3");
  if (!(L > 0.0)) throw DomainError("BoxGrid: L must be positive");
  if (n < 4 || (n & (n - 1)) != 0) throw DomainError("BoxGrid: n must be a power of two >= 4");
  return BoxGrid{d, L, n};
}

std::size_t BoxGrid::size() const {
  std::size_t s = 1;
  for (int a = 0; a < d; ++a) s *= static_cast<std::size_t>(n);
  return s;
}

std::array<int, 3> BoxGrid::index3(std::size_t idx) const {
  const std::size_t un = static_cast<std::size_t>(n);
  if (d == 2) return {static_cast<int>(idx / un), static_cast<int>(idx % un), 0};
  return {static_cast<int>(idx / (un * un)), static_cast<int>((idx / un) % un), static_cast<int>(idx % un)};
}

std::size_t BoxGrid::linear(int i0, int i1, int i2) const {
  const std::size_t un = static_cast<std::size_t>(n);
  if (d == 2) return static_cast<std::size_t>(i0) * un + static_cast<std::size_t>(i1);
  return (static_cast<std::size_t>(i0) * un + static_cast<std::size_t>(i1)) * un + static_cast<std::size_t>(i2);
}

Vec3 BoxGrid::point(std::size_t idx) const {
  const auto i = index3(idx);
  return {coord(i[0]), coord(i[1]), d == 3 ? coord(i[2]) : 0.0};
}

Vec3 BoxGrid::frequency(std::size_t idx) const {
  const auto i = index3(idx);
  return {xi(i[0]), xi(i[1]), d == 3 ? xi(i[2]) : 0.0};
}

double BoxGrid::cell_volume() const { return std::pow(h(), d); }

bool BoxGrid::contains(const Vec3& x) const {
  for (int a = 0; a < d; ++a)
    if (std::abs(x[a]) > L * (1.0 + 1e-12)) return false;
  return true;
}

LatLong LatLong::make(const Vec3& center, double radius, int ntheta, int nphi) {
  LatLong g;
  g.center = center;
  g.radius = radius;
  g.ntheta = ntheta;
  g.nphi = nphi;
  gsl_integration_glfixed_table* tab = gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(ntheta));
  std::vector<std::pair<double, double>> tw(ntheta);
  for (int i = 0; i < ntheta; ++i) {
    double t, w;
    gsl_integration_glfixed_point(-1.0, 1.0, static_cast<std::size_t>(i), &t, &w, tab);
    tw[i] = {t, w};
  }
  gsl_integration_glfixed_table_free(tab);
  std::sort(tw.begin(), tw.end(), [](auto& a, auto& b) { return a.first > b.first; });
  for (auto& [t, w] : tw) {
    g.theta.push_back(std::acos(std::clamp(t, -1.0, 1.0)));
    g.weight.push_back(w);
  }
  return g;
}

double Hypersurface::area() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

double Hypersurface::spacing() const {
  const double a = area() / static_cast<double>(size());
  return d == 3 ? std::sqrt(a) : a;
}

void Hypersurface::validate() const {
  const std::size_t n = nodes.size();
  if (weights.size() != n || normals.size() != n || patch_ids.size() != n)
    throw DomainError("Hypersurface: array length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(weights[i] > 0.0)) throw DomainError("Hypersurface: nonpositive weight");
    if (std::abs(norm(normals[i]) - 1.0) > 1e-12) throw DomainError("Hypersurface: normal not unit");
  }
}

std::uint64_t Hypersurface::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&](const void* p, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) h = (h ^ b[i]) * 1099511628211ULL;
  };
  feed(&d, sizeof d);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    feed(nodes[i].data(), sizeof(Vec3));
    feed(&weights[i], sizeof(double));
  }
  return h;
}

Hypersurface make_sphere(const Vec3& center, double radius, int resolution, int d) {
  if (!(radius > 0.0)) throw DomainError("make_sphere: radius must be positive");
  if (resolution < 8) throw DomainError("make_sphere: resolution must be >= 8");
  Hypersurface s;
  s.d = d;
  s.closed = true;
  if (d == 2) {
    LatLong g;
    g.center = center;
    g.radius = radius;
    g.ntheta = 0;
    g.nphi = resolution;
    for (int j = 0; j < resolution; ++j) {
      const double a = 2.0 * pi * j / resolution;
      const Vec3 nu{std::cos(a), std::sin(a), 0.0};
      s.nodes.push_back(center + radius * nu);
      s.normals.push_back(nu);
      s.weights.push_back(2.0 * pi * radius / resolution);
      s.patch_ids.push_back(0);
    }
    s.sphere = g;
    return s;
  }
  if (d != 3) throw DomainError("make_sphere: d must be 2 or 3");
  if (resolution % 2 != 0) throw DomainError("make_sphere: resolution must be even");
  LatLong g = LatLong::make(center, radius, resolution / 2, resolution);
  for (int i = 0; i < g.ntheta; ++i) {
    const double st = std::sin(g.theta[i]), ct = std::cos(g.theta[i]);
    for (int p = 0; p < g.nphi; ++p) {
      const double ph = g.phi(p);
      const Vec3 nu{st * std::cos(ph), st * std::sin(ph), ct};
      s.nodes.push_back(center + radius * nu);
      s.normals.push_back(nu);
      s.weights.push_back(radius * radius * g.weight[i] * 2.0 * pi / g.nphi);
      s.patch_ids.push_back(0);
    }
  }
  s.sphere = g;
  return s;
}

Hypersurface make_ellipsoid(const Vec3& c, const Vec3& ax, int resolution) {
  if (!(ax[0] > 0 && ax[1] > 0 && ax[2] > 0)) throw DomainError("make_ellipsoid: semi-axes must be positive");
  if (resolution < 8 || resolution % 2 != 0) throw DomainError("make_ellipsoid: resolution must be even and >= 8");
  const LatLong g = LatLong::make(c, 1.0, resolution / 2, resolution);
  Hypersurface s;
  s.d = 3;
  s.closed = true;
  for (int i = 0; i < g.ntheta; ++i) {
    const double st = std::sin(g.theta[i]), ct = std::cos(g.theta[i]);
    for (int p = 0; p < g.nphi; ++p) {
      const double ph = g.phi(p), cp = std::cos(ph), sp = std::sin(ph);
      const Vec3 x{ax[0] * st * cp, ax[1] * st * sp, ax[2] * ct};
      // |x_theta x x_phi| / sin(theta)
      const Vec3 m{ax[1] * ax[2] * st * cp, ax[0] * ax[2] * st * sp, ax[0] * ax[1] * ct};
      const Vec3 gr{x[0] / (ax[0] * ax[0]), x[1] / (ax[1] * ax[1]), x[2] / (ax[2] * ax[2])};
      s.nodes.push_back(c + x);
      s.normals.push_back((1.0 / norm(gr)) * gr);
      s.weights.push_back(norm(m) * g.weight[i] * 2.0 * pi / g.nphi);
      s.patch_ids.push_back(0);
    }
  }
  return s;
}

Hypersurface make_graph_patch(const std::function<double(double, double)>& f,
                              const std::function<std::array<double, 2>(double, double)>& grad_f, double a0,
                              double a1, double b0, double b1, int resolution) {
  if (resolution < 2) throw DomainError("make_graph_patch: resolution must be >= 2");
  gsl_integration_glfixed_table* tab = gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(resolution));
  std::vector<double> xs(resolution), wx(resolution), ys(resolution), wy(resolution);
  for (int i = 0; i < resolution; ++i) {
    gsl_integration_glfixed_point(a0, a1, static_cast<std::size_t>(i), &xs[i], &wx[i], tab);
    gsl_integration_glfixed_point(b0, b1, static_cast<std::size_t>(i), &ys[i], &wy[i], tab);
  }
  gsl_integration_glfixed_table_free(tab);
  Hypersurface s;
  s.d = 3;
  s.closed = false;
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j) {
      const auto g = grad_f(xs[i], ys[j]);
      const double J = std::sqrt(1.0 + g[0] * g[0] + g[1] * g[1]);
      s.nodes.push_back({xs[i], ys[j], f(xs[i], ys[j])});
      s.normals.push_back({-g[0] / J, -g[1] / J, 1.0 / J});
      s.weights.push_back(J * wx[i] * wy[j]);
      s.patch_ids.push_back(0);
    }
  return s;
}

PatchSelector PatchSelector::all() {
  return {[](const Vec3&, const Vec3&) { return true; }};
}

PatchSelector PatchSelector::cap(const Vec3& center, const Vec3& axis, double half_angle) {
  const Vec3 a = (1.0 / norm(axis)) * axis;
  const double c = std::cos(half_angle);
  return {[=](const Vec3& x, const Vec3&) {
    const Vec3 r = x - center;
    const double nr = norm(r);
    return nr > 0.0 && dot(r, a) >= c * nr;
  }};
}

std::vector<std::size_t> select_patch(const Hypersurface& s, const PatchSelector& sel) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (sel.predicate(s.nodes[i], s.normals[i])) out.push_back(i);
  if (out.empty()) throw EmptySelectionError("select_patch: selector matched no node");
  return out;
}

void write_surface_csv(const Hypersurface& s, std::ostream& out) {
  out << "x,y,z,w,nx,ny,nz,patch_id\n";
  char buf[512];
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& x = s.nodes[i];
    const auto& n = s.normals[i];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", x[0], x[1], x[2], s.weights[i],
                  n[0], n[1], n[2], s.patch_ids[i]);
    out << buf;
  }
}

Hypersurface read_surface_csv(std::istream& in, int d, bool closed) {
  Hypersurface s;
  s.d = d;
  s.closed = closed;
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,y,z,w", 0) != 0) throw DomainError("surface CSV: bad header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> f;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() != 8) throw DomainError("surface CSV: expected 8 columns");
    s.nodes.push_back({std::stod(f[0]), std::stod(f[1]), std::stod(f[2])});
    s.weights.push_back(std::stod(f[3]));
    s.normals.push_back({std::stod(f[4]), std::stod(f[5]), std::stod(f[6])});
    s.patch_ids.push_back(std::stoi(f[7]));
  }
  s.validate();
  return s;
}

void SphericalTransform::legendre(int L, double t, std::vector<double>& P) {
  P.assign(static_cast<std::size_t>((L + 1) * (L + 2) / 2), 0.0);
  const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
  P[0] = 1.0 / std::sqrt(4.0 * pi);
  for (int m = 1; m <= L; ++m) P[lindex(m, m)] = -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * P[lindex(m - 1, m - 1)];
  for (int m = 0; m < L; ++m) P[lindex(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * t * P[lindex(m, m)];
  for (int m = 0; m <= L; ++m)
    for (int l = m + 2; l <= L; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
      const double b = std::sqrt((static_cast<double>(l - 1) * (l - 1) - static_cast<double>(m) * m) /
                                 (4.0 * (l - 1) * (l - 1) - 1.0));
      P[lindex(l, m)] = a * (t * P[lindex(l - 1, m)] - b * P[lindex(l - 2, m)]);
    }
}

SphericalTransform::SphericalTransform(const LatLong& g) : grid_(g), L_(g.ntheta - 1) {
  if (g.ntheta < 2) throw DomainError("SphericalTransform: needs a lat-long sphere");
  const std::size_t per = static_cast<std::size_t>((L_ + 1) * (L_ + 2) / 2);
  ptab_.resize(per * g.ntheta);
  std::vector<double> P;
  for (int i = 0; i < g.ntheta; ++i) {
    legendre(L_, std::cos(g.theta[i]), P);
    std::copy(P.begin(), P.end(), ptab_.begin() + static_cast<std::ptrdiff_t>(per * i));
  }
}

std::vector<cplx> SphericalTransform::analyze(const std::vector<cplx>& f) const {
  const int nt = grid_.ntheta, np = grid_.nphi;
  if (f.size() != static_cast<std::size_t>(nt) * np) throw DomainError("SphericalTransform: size mismatch");
  const std::size_t per = static_cast<std::size_t>((L_ + 1) * (L_ + 2) / 2);
  std::vector<cplx> a(ncoef(), 0.0);
  std::vector<cplx> F(2 * L_ + 1);
  std::vector<cplx> e(np);
  for (int i = 0; i < nt; ++i) {
    for (int m = -L_; m <= L_; ++m) {
      cplx s = 0.0;
      for (int p = 0; p < np; ++p) s += f[grid_.node(i, p)] * std::polar(1.0, -m * grid_.phi(p));
      F[m + L_] = s * (2.0 * pi / np) * grid_.weight[i];
    }
    const double* P = &ptab_[per * i];
    for (int l = 0; l <= L_; ++l)
      for (int m = -l; m <= l; ++m) a[index(l, m)] += P[lindex(l, std::abs(m))] * F[m + L_];
  }
  return a;
}

cplx SphericalTransform::synthesize(const std::vector<cplx>& a, double theta, double phi) const {
  std::vector<double> P;
  legendre(L_, std::cos(theta), P);
  cplx v = 0.0;
  for (int m = -L_; m <= L_; ++m) {
    cplx g = 0.0;
    for (int l = std::abs(m); l <= L_; ++l) g += a[index(l, m)] * P[lindex(l, std::abs(m))];
    v += g * std::polar(1.0, m * phi);
  }
  return v;
}

std::vector<cplx> SphericalTransform::synthesize_grid(const std::vector<cplx>& a, const LatLong& t) const {
  std::vector<cplx> out(static_cast<std::size_t>(t.ntheta) * t.nphi);
  std::vector<double> P;
  std::vector<cplx> G(2 * L_ + 1);
  std::vector<cplx> base(t.nphi);
  for (int p = 0; p < t.nphi; ++p) base[p] = std::polar(1.0, t.phi(p));
  for (int i = 0; i < t.ntheta; ++i) {
    legendre(L_, std::cos(t.theta[i]), P);
    for (int m = -L_; m <= L_; ++m) {
      cplx g = 0.0;
      for (int l = std::abs(m); l <= L_; ++l) g += a[index(l, m)] * P[lindex(l, std::abs(m))];
      G[m + L_] = g;
    }
    for (int p = 0; p < t.nphi; ++p) {
      // sum_m G_m e^{i m phi} by Horner in z = e^{i phi}
      const cplx z = base[p];
      cplx acc = 0.0;
      for (int m = L_; m >= -L_; --m) acc = acc * z + G[m + L_];
      out[t.node(i, p)] = acc * std::pow(z, -L_);
    }
  }
  return out;
}

}  // namespace ssct
