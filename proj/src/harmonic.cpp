#include "ssct/harmonic.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <tuple>

#include "json.hpp"
#include "ssct/parallel.hpp"
#include "ssct/specfun.hpp"

namespace ssct {

namespace {

// (e^{i a R} - 1) / a, series near a = 0
cplx expm1_over(double a, double R) {
  if (std::abs(a * R) < 1e-3) {
    const cplx z = I * (a * R);
    return I * R * (1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0);
  }
  return (std::exp(I * (a * R)) - 1.0) / a;
}

// 3D: sigma (1/rho) int_0^R e^{ikr} sin(rho r) dr
cplx symbol3(double k, double R, double rho) {
  const double s = sigma;
  if (rho == 0.0) return s * (std::exp(I * (k * R)) * (R / (I * k) + 1.0 / (k * k)) - 1.0 / (k * k));
  const cplx integral = -0.5 * (expm1_over(k + rho, R) - expm1_over(k - rho, R));
  return s * integral / rho;
}

double j0_any(double z) { return z == 0.0 ? 1.0 : bessel_j0(z); }
double j1_any(double z) { return z == 0.0 ? 0.0 : bessel_j1(z); }

// 2D: sigma (i/4) 2 pi int_0^R H0(kr) J0(rho r) r dr
cplx symbol2_raw(double k, double R, double rho) {
  const cplx h0 = hankel1(0.0, k * R), h1 = hankel1(1.0, k * R);
  const cplx num = R * (rho * j1_any(rho * R) * h0 - k * j0_any(rho * R) * h1) - 2.0 * I / pi;
  return static_cast<double>(sigma) * 0.25 * I * 2.0 * pi * num / (rho * rho - k * k);
}

cplx symbol2(double k, double R, double rho) {
  if (std::abs(rho - k) < 1e-6 * k) {
    const double d = 1e-4 * k;
    return 0.5 * (symbol2_raw(k, R, k + d) + symbol2_raw(k, R, k - d));
  }
  return symbol2_raw(k, R, rho);
}

using Key = std::tuple<std::uint64_t, int, std::uint64_t, int>;
Key key_of(double lambda, const BoxGrid& g) {
  return {std::bit_cast<std::uint64_t>(lambda), g.d, std::bit_cast<std::uint64_t>(g.L), g.n};
}

std::mutex cache_mu;
std::map<Key, std::shared_ptr<const std::vector<cplx>>> symbol_cache;
std::map<Key, std::shared_ptr<const Field>> kernel_cache;

void require_half_box(const Field& f) {
  const double lim = f.grid.L / 2 + 1e-9 * f.grid.h();
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] != 0.0 && norm(f.grid.point(i)) > lim) throw SupportError("source not supported in the half-box ball");
}

double pow2(int k) { return std::ldexp(1.0, k); }

// sum over slots of w(xi) |F|^2 scaled so that an all-ones weight gives ||f||_2^2
double weighted_l2sq(const BoxGrid& g, const std::vector<cplx>& F, const std::function<double(double)>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) {
    const double r = norm(g.frequency(i));
    const double wi = w(r);
    if (wi != 0.0) s += wi * std::norm(F[i]);
  }
  return s * g.cell_volume() / static_cast<double>(g.size());
}

Field band_field(const BoxGrid& g, const std::vector<cplx>& F, const std::function<double(double)>& m) {
  std::vector<cplx> s(F.size());
  for (std::size_t i = 0; i < F.size(); ++i) s[i] = F[i] * m(norm(g.frequency(i)));
  return fft_inverse(g, std::move(s));
}

struct BandData {
  int kl, kmax;
  std::vector<cplx> F;
};

BandData band_data(const Field& f, double lambda) {
  if (f.grid.d != 3) throw DomainError("norms are defined for d = 3");
  BandData b;
  b.kl = k_lambda(lambda);
  double rmax = 0.0;
  for (int a = 0; a < 3; ++a) rmax += std::pow(pi / f.grid.L * f.grid.n / 2, 2);
  rmax = std::sqrt(rmax);
  int K = b.kl + 1;
  while (pow2(K) < rmax) ++K;
  b.kmax = K;
  b.F = fft_forward(f);
  return b;
}

// shared outer terms: sum over non-critical projectors of ||m^{e/2} P f^||^2 (e = -1 for Y, Z; +1 for X*)
double outer_terms(const BoxGrid& g, const BandData& b, double lambda, double e) {
  const int kl = b.kl;
  return weighted_l2sq(g, b.F, [&](double r) {
    const double m = std::abs(lambda - r * r);
    // each projector enters squared; psi_k overlap so the weights are summed per band
    const double low = lp_phi(r / pow2(kl - 3));
    double w = low * low;
    for (int k = kl + 2; k <= b.kmax; ++k) {
      const double p = lp_psi(k, r);
      w += p * p;
    }
    if (w == 0.0) return 0.0;
    return w * std::pow(m, e);
  });
}

}  // namespace

std::shared_ptr<const std::vector<cplx>> truncated_kernel_symbol(double lambda, const BoxGrid& g) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  const auto key = key_of(lambda, g);
  {
    std::lock_guard lock(cache_mu);
    auto it = symbol_cache.find(key);
    if (it != symbol_cache.end()) return it->second;
  }
  const double k = std::sqrt(lambda), R = g.L;
  auto v = std::make_shared<std::vector<cplx>>(g.size());
  parallel_for(g.size(), [&](std::size_t i) {
    const double rho = norm(g.frequency(i));
    (*v)[i] = g.d == 3 ? symbol3(k, R, rho) : symbol2(k, R, rho);
  });
  std::lock_guard lock(cache_mu);
  return symbol_cache.emplace(key, v).first->second;
}

std::shared_ptr<const Field> discrete_kernel(double lambda, const BoxGrid& g) {
  const auto key = key_of(lambda, g);
  {
    std::lock_guard lock(cache_mu);
    auto it = kernel_cache.find(key);
    if (it != kernel_cache.end()) return it->second;
  }
  auto sym = truncated_kernel_symbol(lambda, g);
  Field f = fft_inverse(g, *sym);
  f *= 1.0 / g.cell_volume();
  auto p = std::make_shared<const Field>(std::move(f));
  std::lock_guard lock(cache_mu);
  return kernel_cache.emplace(key, p).first->second;
}

double truncated_kernel_peak(double lambda, const BoxGrid& g) {
  const auto s = truncated_kernel_symbol(lambda, g);
  double m = 0.0;
  for (const auto& v : *s) m = std::max(m, std::abs(v));
  return m;
}

Field resolvent_apply(double lambda, const Field& src) {
  require_half_box(src);
  if (src.is_zero()) return Field(src.grid);
  return apply_multiplier(src, *truncated_kernel_symbol(lambda, src.grid));
}

std::vector<cplx> surface_potential(double lambda, int d, const Hypersurface& s, const std::vector<cplx>& density,
                                    const std::vector<Vec3>& points) {
  if (density.size() != s.size()) throw DomainError("surface_potential: density size mismatch");
  Kernel K(lambda, d);
  std::vector<cplx> out(points.size());
  parallel_for(points.size(), [&](std::size_t p) {
    cplx acc = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (density[j] == 0.0) continue;
      const double r = distance(points[p], s.nodes[j]);
      if (r < 1e-14) continue;
      acc += s.weights[j] * density[j] * K.value(r);
    }
    out[p] = acc;
  });
  return out;
}

Field free_resolvent(double lambda, const SourceBundle& src, const BoxGrid& g) {
  Field u = src.grid.size() ? resolvent_apply(lambda, src.grid) : Field(g);
  if (src.surface) {
    std::vector<Vec3> pts(g.size());
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = g.point(i);
    const auto s = surface_potential(lambda, g.d, *src.surface, src.density, pts);
    for (std::size_t i = 0; i < s.size(); ++i) u[i] += s[i];
  }
  return u;
}

int k_lambda(double lambda) {
  const double r = std::sqrt(lambda);
  int k = static_cast<int>(std::floor(std::log2(r))) - 1;
  while (!(pow2(k - 1) < r && r <= pow2(k))) ++k;
  return k;
}

double lp_phi(double r) { return smooth_cutoff(r, 1.0, 2.0); }
double lp_psi(int k, double r) { return lp_phi(r / pow2(k)) - lp_phi(r / pow2(k - 1)); }

Field LpDecomposition::reconstruct() const {
  Field f = low;
  for (const auto& [k, b] : bands) f += b;
  return f;
}

LpDecomposition lp_decompose(const Field& f, double lambda) {
  const BoxGrid& g = f.grid;
  LpDecomposition out;
  out.klambda = k_lambda(lambda);
  out.kmin = out.klambda - 2;
  double rmax = 0.0;
  for (int a = 0; a < g.d; ++a) rmax += std::pow(pi / g.L * g.n / 2, 2);
  rmax = std::sqrt(rmax);
  int K = out.klambda + 1;
  while (pow2(K) < rmax) ++K;
  out.kmax = K;
  const auto F = fft_forward(f);
  out.low = band_field(g, F, [&](double r) { return lp_phi(r / pow2(out.klambda - 3)); });
  for (int k = out.kmin; k <= out.kmax; ++k) out.bands.emplace(k, band_field(g, F, [&](double r) { return lp_psi(k, r); }));
  return out;
}

double norm_Lp(const Field& f, double p) {
  double s = 0.0;
  for (const auto& v : f.data) s += std::pow(std::abs(v), p);
  return std::pow(s * f.grid.cell_volume(), 1.0 / p);
}

namespace {
std::vector<double> shell_l2(const Field& f) {
  std::vector<double> acc;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double r = norm(f.grid.point(i));
    int j = 0;
    while (r > pow2(j)) ++j;
    if (static_cast<int>(acc.size()) <= j) acc.resize(j + 1, 0.0);
    acc[j] += std::norm(f[i]);
  }
  for (auto& a : acc) a = std::sqrt(a * f.grid.cell_volume());
  return acc;
}
}  // namespace

double norm_B(const Field& f) {
  const auto s = shell_l2(f);
  double out = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) out += std::sqrt(pow2(static_cast<int>(j))) * s[j];
  return out;
}

double norm_Bstar(const Field& f) {
  const auto s = shell_l2(f);
  double out = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) out = std::max(out, s[j] / std::sqrt(pow2(static_cast<int>(j))));
  return out;
}

namespace {
enum class Which { Y, Z, Xstar };

double lambda_norm(const Field& f, double lambda, Which which) {
  const auto b = band_data(f, lambda);
  const BoxGrid& g = f.grid;
  double sq = outer_terms(g, b, lambda, which == Which::Xstar ? 1.0 : -1.0);
  for (int k = b.kl - 2; k <= b.kl + 1; ++k) {
    const Field pk = band_field(g, b.F, [&](double r) { return lp_psi(k, r); });
    switch (which) {
      case Which::Y: sq += std::pow(lambda, -0.5) * std::pow(norm_B(pk), 2); break;
      case Which::Z: sq += std::pow(lambda, -0.25) * std::pow(norm_Lp(pk, 4.0 / 3.0), 2); break;
      case Which::Xstar:
        sq += std::sqrt(lambda) * std::pow(norm_Bstar(pk), 2) + std::pow(lambda, 0.25) * std::pow(norm_Lp(pk, 4.0), 2);
        break;
    }
  }
  return std::sqrt(sq);
}
}  // namespace

double norm_Y(const Field& f, double lambda) { return lambda_norm(f, lambda, Which::Y); }
double norm_Z(const Field& f, double lambda) { return lambda_norm(f, lambda, Which::Z); }
double norm_Xlambda_star(const Field& u, double lambda) { return lambda_norm(u, lambda, Which::Xstar); }

NormReport norm_report(const Field& f, double lambda) {
  NormReport r;
  r.B = norm_B(f);
  r.Bstar = norm_Bstar(f);
  r.Y = norm_Y(f, lambda);
  r.Z = norm_Z(f, lambda);
  r.Xstar = norm_Xlambda_star(f, lambda);
  return r;
}

std::string NormReport::to_json() const {
  nlohmann::ordered_json j;
  j["B"] = B;
  j["Bstar"] = Bstar;
  j["Y_lambda"] = Y;
  j["Z_lambda"] = Z;
  j["Xlambda_star"] = Xstar;
  if (Xzeta) j["Xzeta"] = *Xzeta;
  return j.dump(2);
}

cplx p_zeta(const CVec3& z, const Vec3& xi) { return -dot(xi, xi) + 2.0 * I * cdot(z, xi) + cdot(z, z); }

double norm_Xzeta(const Field& u, const CVec3& zeta, double s, double M) {
  if (!(M > 1.0)) throw DomainError("X_zeta norm needs M > 1");
  const Vec3 re{zeta[0].real(), zeta[1].real(), zeta[2].real()};
  const double a = M * dot(re, re);
  const auto F = fft_forward(u);
  const BoxGrid& g = u.grid;
  double acc = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) {
    if (F[i] == 0.0) continue;
    const double w = a + std::norm(p_zeta(zeta, g.frequency(i))) / M;
    acc += std::pow(w, s) * std::norm(F[i]);
  }
  return std::sqrt(acc * g.cell_volume() / static_cast<double>(g.size()));
}

RatioStats summarize(std::vector<double> r) {
  RatioStats s;
  s.ratios = r;
  for (double v : r)
    if (!std::isfinite(v)) s.finite = false;
  if (r.empty()) return s;
  std::sort(r.begin(), r.end());
  s.max = r.back();
  s.median = r.size() % 2 ? r[r.size() / 2] : 0.5 * (r[r.size() / 2 - 1] + r[r.size() / 2]);
  return s;
}

RatioStats resolvent_estimate_check(const std::vector<Field>& suite, double lambda, ResolventKind kind) {
  if (suite.empty()) throw DomainError("resolvent_estimate_check: empty suite");
  std::vector<double> ratios(suite.size());
  parallel_for(suite.size(), [&](std::size_t i) {
    Field f = suite[i];
    const double m = f.max_abs();
    if (m > 0.0) f *= 1.0 / m;  // ratios are scale invariant; avoids underflow on tiny inputs
    Field u(f.grid);
    if (kind == ResolventKind::Truncated) {
      u = resolvent_apply(lambda, f);
    } else {
      auto F = fft_forward(f);
      double peak = 0.0;
      for (const auto& v : F) peak = std::max(peak, std::abs(v));
      const double floor = 1e-10 * peak;
      for (std::size_t q = 0; q < F.size(); ++q) {
        const Vec3 xi = f.grid.frequency(q);
        const double den = lambda - dot(xi, xi);
        if (std::abs(den) < 1e-12 * lambda) {
          if (std::abs(F[q]) > floor) throw DomainError("source has mass on the critical sphere");
          F[q] = 0.0;
        } else {
          F[q] /= den;
        }
      }
      u = fft_inverse(f.grid, std::move(F));
    }
    ratios[i] = norm_Xlambda_star(u, lambda) / std::min(norm_Y(f, lambda), norm_Z(f, lambda));
  });
  return summarize(ratios);
}

BernsteinResult bernstein_check(const Field& f, double lambda, int k, double s) {
  const auto F = fft_forward(f);
  const BoxGrid& g = f.grid;
  const double a = weighted_l2sq(g, F, [&](double r) { return std::pow(lp_psi(k, r), 2); });
  const double b = weighted_l2sq(g, F, [&](double r) { return std::pow(lp_psi(k, r), 2) * std::pow(r, 2 * s); });
  (void)lambda;
  return {std::sqrt(b / a), std::pow(2.0, (k - 1) * s), std::pow(2.0, (k + 1) * s)};
}

double outgoing_phase_deviation(double lambda, const Field& bump, const Vec3& dir) {
  const Field u = resolvent_apply(lambda, bump);
  const BoxGrid& g = u.grid;
  const Vec3 e = (1.0 / norm(dir)) * dir;
  std::vector<Vec3> pts;
  const double r0 = g.L / 4, r1 = g.L / 2, dr = g.h();
  for (double r = r0; r <= r1 + 1e-12; r += dr) pts.push_back(r * e);
  const auto v = trace_at(u, pts);
  const double k = std::sqrt(lambda);
  double worst = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double dphi = std::arg(v[i] / v[i - 1]);
    worst = std::max(worst, std::abs(dphi - k * dr) / (k * dr));
  }
  return worst;
}

double duality_gap(double lambda, const Field& f, const Field& g) {
  const Field Gf = resolvent_apply(lambda, f);
  Field cg = g;
  for (auto& v : cg.data) v = std::conj(v);
  Field Gcg = resolvent_apply(lambda, cg);
  for (auto& v : Gcg.data) v = std::conj(v);
  const cplx a = inner(Gf, g), b = inner(f, Gcg);
  return std::abs(a - b) / (Gf.l2() * g.l2());
}

void write_ratio_csv(const std::string& path, const std::vector<std::vector<double>>& rows,
                     const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  char buf[64];
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", r[i]);
      out << (i ? "," : "") << buf;
    }
    out << "\n";
  }
}

}  // namespace ssct
