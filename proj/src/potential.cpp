#include "ssct/potential.hpp"

namespace ssct {

namespace {

std::uint64_t fnv(std::uint64_t h, const void* p, std::size_t len) {
  const auto* b = static_cast<const unsigned char*>(p);
  for (std::size_t i = 0; i < len; ++i) h = (h ^ b[i]) * 1099511628211ULL;
  return h;
}

void require_real(const Field& f, const char* what) {
  for (const auto& v : f.data)
    if (v.imag() != 0.0) throw DomainError(std::string(what) + " must be real-valued");
}

void require_support(const Field& f, double radius, const char* what) {
  const double tol = 1e-9 * f.grid.h();
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] != 0.0 && norm(f.grid.point(i)) > radius + tol)
      throw SupportError(std::string(what) + " not supported in the declared ball");
}

}  // namespace

Potential Potential::zero(const BoxGrid& g) {
  Potential p;
  p.grid = g;
  return p;
}

void Potential::validate() const {
  if (support_radius > grid.L / 2 + 1e-12) throw SupportError("support radius exceeds the half-box");
  if (v0) {
    if (!(v0->grid == grid)) throw DomainError("v0 grid mismatch");
    require_real(*v0, "v0");
    require_support(*v0, support_radius, "v0");
  }
  if (shell) {
    if (!shell->gamma || shell->alpha.size() != shell->gamma->size()) throw DomainError("shell alpha size mismatch");
    for (const auto& x : shell->gamma->nodes)
      if (norm(x) > support_radius + 1e-12) throw SupportError("Gamma not inside the declared ball");
  }
  if (frac) {
    if (!(frac->s > 0.5 && frac->s < 1.0)) throw DomainError("fractional order must lie in (1/2, 1)");
    require_real(frac->g, "g");
    require_real(frac->chi, "chi");
    for (const auto& v : frac->chi.data)
      if (v.real() < 0.0 || v.real() > 1.0) throw DomainError("chi must take values in [0,1]");
    require_support(frac->chi, support_radius, "chi");
  }
}

std::uint64_t Potential::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  h = fnv(h, &grid.d, sizeof grid.d);
  h = fnv(h, &grid.L, sizeof grid.L);
  h = fnv(h, &grid.n, sizeof grid.n);
  if (v0) h = fnv(h, v0->data.data(), v0->data.size() * sizeof(cplx));
  if (shell) {
    const auto sh = shell->gamma->hash();
    h = fnv(h, &sh, sizeof sh);
    h = fnv(h, shell->alpha.data(), shell->alpha.size() * sizeof(double));
  }
  if (frac) {
    h = fnv(h, &frac->s, sizeof frac->s);
    h = fnv(h, frac->g.data.data(), frac->g.data.size() * sizeof(cplx));
    h = fnv(h, frac->chi.data.data(), frac->chi.data.size() * sizeof(cplx));
  }
  return h;
}

Field gaussian_field(const BoxGrid& g, double amplitude, const Vec3& c, double width, double rs) {
  return Field::from_function(g, [=](const Vec3& x) {
    const double r = distance(x, c);
    if (r >= rs) return cplx(0.0);
    return cplx(amplitude * std::exp(-r * r / (width * width)) * smooth_cutoff(r, 0.7 * rs, rs));
  });
}

Field cutoff_field(const BoxGrid& g, const Vec3& c, double r0, double r1) {
  return Field::from_function(g, [=](const Vec3& x) { return cplx(smooth_cutoff(distance(x, c), r0, r1)); });
}

Potential make_gaussian_potential(const BoxGrid& g, double amplitude, const Vec3& c, double width, double rs) {
  Potential p = Potential::zero(g);
  p.support_radius = norm(c) + rs;
  p.v0 = gaussian_field(g, amplitude, c, width, rs);
  p.validate();
  return p;
}

Potential make_shell_potential(const BoxGrid& g, const Vec3& c, double radius, int resolution, double alpha) {
  Potential p = Potential::zero(g);
  auto s = std::make_shared<Hypersurface>(make_sphere(c, radius, resolution, g.d));
  p.support_radius = norm(c) + radius;
  p.shell = ShellPart{s, std::vector<double>(s->size(), alpha)};
  p.validate();
  return p;
}

Potential make_fractional_potential(const BoxGrid& g, double s, Field gfield, Field chi, double rs) {
  Potential p = Potential::zero(g);
  p.support_radius = rs;
  p.frac = FracPart{s, std::move(gfield), std::move(chi)};
  p.validate();
  return p;
}

Field riesz_derivative(double s, const Field& f) {
  return apply_multiplier(f, [s](const Vec3& xi) {
    const double r = norm(xi);
    if (s == 0.0) return cplx(1.0);
    return cplx(r == 0.0 ? 0.0 : std::pow(r, s));
  });
}

Field gamma_field(const Potential& P) {
  if (!P.frac) throw MissingPartError("potential has no fractional part");
  Field d = riesz_derivative(P.frac->s, P.frac->g);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double c = P.frac->chi[i].real();
    // keep the support exact: chi = 0 gives exactly 0
    d[i] = c == 0.0 ? cplx(0.0) : cplx(c * c * d[i].real());
  }
  return d;
}

Field grid_multiplier(const Potential& P) {
  Field m(P.grid);
  if (P.v0) m += *P.v0;
  if (P.frac) m += gamma_field(P);
  return m;
}

cplx bilinear(const Potential& P, const Field& u, const Field& v, const std::vector<cplx>* tu,
              const std::vector<cplx>* tv) {
  cplx out = 0.0;
  if (P.v0) {
    cplx s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += (*P.v0)[i] * u[i] * v[i];
    out += s * u.grid.cell_volume();
  }
  if (P.shell) {
    if (!tu || !tv) throw MissingTraceError("shell pairing needs traces of both arguments");
    const auto& G = *P.shell->gamma;
    if (tu->size() != G.size() || tv->size() != G.size()) throw MissingTraceError("trace length mismatch");
    cplx s = 0.0;
    for (std::size_t j = 0; j < G.size(); ++j) s += G.weights[j] * P.shell->alpha[j] * (*tu)[j] * (*tv)[j];
    out += s;
  }
  if (P.frac) {
    Field w(u.grid);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double c = P.frac->chi[i].real();
      w[i] = c * u[i] * c * v[i];
    }
    out += integrate_product(P.frac->g, riesz_derivative(P.frac->s, w));
  }
  return out;
}

SourceBundle apply_as_source(const Potential& P, const Field& u, const std::vector<cplx>* tu) {
  SourceBundle b;
  b.grid = hadamard(grid_multiplier(P), u);
  if (P.shell) {
    if (!tu) throw MissingTraceError("shell source needs the trace on Gamma");
    if (tu->size() != P.shell->gamma->size()) throw MissingTraceError("trace length mismatch");
    b.surface = P.shell->gamma;
    b.density.resize(tu->size());
    for (std::size_t j = 0; j < tu->size(); ++j) b.density[j] = P.shell->alpha[j] * (*tu)[j];
  }
  return b;
}

cplx pair_source(const SourceBundle& b, const Field& v, const std::vector<cplx>* tv) {
  cplx out = integrate_product(b.grid, v);
  if (b.surface) {
    if (!tv || tv->size() != b.surface->size()) throw MissingTraceError("pairing needs the trace on the surface");
    for (std::size_t j = 0; j < tv->size(); ++j) out += b.surface->weights[j] * b.density[j] * (*tv)[j];
  }
  return out;
}

}  // namespace ssct
