#include "ssct/cgo.hpp"

#include <fstream>
#include <iomanip>

#include "ssct/parallel.hpp"
#include "ssct/rng.hpp"

namespace ssct {

namespace {

constexpr double orth_tol = 1e-12;

Vec3 re_part(const CVec3& z) { return {z[0].real(), z[1].real(), z[2].real()}; }

CVec3 axpy(double a, const Vec3& x, const CVec3& y) { return {a * x[0] + y[0], a * x[1] + y[1], a * x[2] + y[2]}; }

Vec3 unit(const Vec3& v) {
  const double n = norm(v);
  return (1.0 / n) * v;
}

Vec3 shift_for(const BoxGrid& g, const Vec3& theta) {
  int a = 0;
  for (int k = 1; k < 3; ++k)
    if (std::abs(theta[k]) > std::abs(theta[a])) a = k;
  Vec3 b{0, 0, 0};
  b[a] = pi / (2.0 * g.L);
  return b;
}

std::vector<cplx> phase_field(const BoxGrid& g, const Vec3& beta) {
  std::vector<cplx> e(g.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::polar(1.0, dot(beta, g.point(i)));
  return e;
}

CgoSolution iterate(const CgoPair& pair0, int which, const BoxGrid& g, const Field& mult, const ShellPart* shell,
                    const RemainderOptions& opt) {
  if (g.d != 3) throw DomainError("solve_remainder: d = 3 only");
  if (which != 1 && which != 2) throw DomainError("solve_remainder: which must be 1 or 2");
  if (!(opt.tol > 0.0) || opt.max_iter < 1) throw DomainError("solve_remainder: bad options");
  CgoSolution sol;
  sol.pair_index = which;
  sol.shift = shift_for(g, pair0.theta);
  const Vec3 beta = sol.shift;

  std::vector<cplx> inv_q(g.size());
  CgoPair pair = pair0;
  for (int r = 0;; ++r) {
    if (r > 0) pair = make_zeta_pair(pair0.lambda, pair0.kappa, pair0.tau * std::pow(1.0 + 1e-6, r), pair0.theta, pair0.eta);
    const CVec3& z = pair.zeta(which);
    double qmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < g.size(); ++k) {
      const cplx q = remainder_symbol(z, g.frequency(k) + beta);
      qmin = std::min(qmin, std::abs(q));
      inv_q[k] = 1.0 / q;
    }
    sol.min_symbol = qmin;
    sol.retries = r;
    if (qmin >= opt.symbol_floor * std::max(1.0, pair.tau * pair.tau)) break;
    if (r >= opt.max_retries) throw SymbolZeroError("solve_remainder: remainder symbol vanishes on the lattice");
  }
  sol.pair = pair;
  sol.zeta = pair.zeta(which);

  const auto eb = phase_field(g, beta);
  std::vector<Vec3> y;
  std::vector<cplx> ebg, wa;
  if (shell) {
    const auto& G = *shell->gamma;
    y = G.nodes;
    ebg.resize(y.size());
    wa.resize(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) {
      ebg[j] = std::polar(1.0, dot(beta, y[j]));
      wa[j] = G.weights[j] * shell->alpha[j];
    }
  }

  Field wp(g);
  double upd = 0.0, wn = 0.0;
  int rising = 0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    Field src(g);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (mult[i] != 0.0) src[i] = mult[i] * (std::conj(eb[i]) + wp[i]);
    auto F = fft_forward(src);
    if (shell) {
      const auto t = trace_at(wp, y);
      std::vector<cplx> c(y.size());
      for (std::size_t j = 0; j < y.size(); ++j) c[j] = wa[j] * (1.0 + ebg[j] * t[j]);
      add_point_spectrum(g, y, c, beta, F);
    }
    for (std::size_t k = 0; k < F.size(); ++k) F[k] *= inv_q[k];
    Field next = fft_inverse(g, std::move(F));
    upd = (next - wp).l2();
    wn = next.l2();
    if (!sol.history.empty() && upd > sol.history.back())
      ++rising;
    else
      rising = 0;
    sol.history.push_back(upd);
    wp = std::move(next);
    sol.iterations = it;
    if (upd == 0.0 || upd <= opt.tol * wn) {
      sol.converged = true;
      break;
    }
    if (rising >= 3 || !std::isfinite(upd))
      throw ConvergenceError("solve_remainder: fixed-point iteration diverges (tau too small)", sol.history);
  }
  if (!sol.converged && opt.throw_on_stall)
    throw ConvergenceError("solve_remainder: no convergence within max_iter", sol.history);
  const auto n = sol.history.size();
  sol.residual = wn > 0.0 ? upd / wn : 0.0;
  sol.contraction = n >= 2 && sol.history[n - 2] > 0.0 ? sol.history[n - 1] / sol.history[n - 2] : 0.0;
  sol.w = Field(g);
  for (std::size_t i = 0; i < g.size(); ++i) sol.w[i] = eb[i] * wp[i];
  sol.w_periodic = std::move(wp);
  return sol;
}

}  // namespace

CgoPair make_zeta_pair(double lambda, const Vec3& kappa, double tau, const Vec3& theta, const Vec3& eta) {
  if (std::abs(norm(theta) - 1.0) > orth_tol || std::abs(norm(eta) - 1.0) > orth_tol)
    throw DomainError("make_zeta_pair: theta and eta must be unit vectors");
  const double ks = std::max(1.0, norm(kappa));
  if (std::abs(dot(theta, eta)) > orth_tol || std::abs(dot(theta, kappa)) > orth_tol * ks ||
      std::abs(dot(eta, kappa)) > orth_tol * ks)
    throw DomainError("make_zeta_pair: theta, eta, kappa must be mutually orthogonal");
  const double rad = tau * tau + lambda - 0.25 * dot(kappa, kappa);
  if (!(rad >= 0.0)) throw DomainError("make_zeta_pair: tau^2 + lambda - |kappa|^2/4 < 0");
  const double r = std::sqrt(rad);
  CgoPair p;
  p.lambda = lambda;
  p.tau = tau;
  p.kappa = kappa;
  p.theta = theta;
  p.eta = eta;
  for (int a = 0; a < 3; ++a) {
    p.zeta1[a] = cplx(tau * theta[a], -0.5 * kappa[a] + r * eta[a]);
    p.zeta2[a] = cplx(-tau * theta[a], -0.5 * kappa[a] - r * eta[a]);
  }
  return p;
}

PairInvariants pair_invariants(const CgoPair& p) {
  // extended precision so the check measures the stored components, not its own rounding
  auto self = [&](const CVec3& z) {
    std::complex<long double> acc = 0.0L;
    for (int a = 0; a < 3; ++a) {
      const std::complex<long double> c(z[a].real(), z[a].imag());
      acc += c * c;
    }
    return static_cast<double>(std::abs(acc + static_cast<long double>(p.lambda)));
  };
  PairInvariants v;
  v.self1 = self(p.zeta1);
  v.self2 = self(p.zeta2);
  for (int a = 0; a < 3; ++a) v.sum = std::max(v.sum, std::abs(p.zeta1[a] + p.zeta2[a] + I * p.kappa[a]));
  v.orth = std::max({std::abs(dot(p.theta, p.eta)), std::abs(dot(p.theta, p.kappa)), std::abs(dot(p.eta, p.kappa))});
  return v;
}

std::pair<Vec3, Vec3> cgo_frame(const Vec3& kappa) {
  const double kn = norm(kappa);
  if (kn == 0.0) return {{0, 0, 1}, {0, 1, 0}};
  Vec3 theta{0, 0, 0};
  int zero = -1;
  for (int a = 2; a >= 0 && zero < 0; --a)
    if (kappa[a] == 0.0) zero = a;
  if (zero >= 0) {
    theta[zero] = 1.0;
  } else {
    // smallest component gives the best-conditioned cross product
    int a = 0;
    for (int k = 1; k < 3; ++k)
      if (std::abs(kappa[k]) < std::abs(kappa[a])) a = k;
    Vec3 e{0, 0, 0};
    e[a] = 1.0;
    theta = unit(cross(kappa, e));
  }
  const Vec3 eta = unit(cross(theta, kappa));
  return {theta, eta};
}

cplx remainder_symbol(const CVec3& zeta, const Vec3& xi) { return -dot(xi, xi) + 2.0 * I * cdot(zeta, xi); }

void add_point_spectrum(const BoxGrid& g, const std::vector<Vec3>& y, const std::vector<cplx>& c, const Vec3& beta,
                        std::vector<cplx>& spec) {
  if (g.d != 3) throw DomainError("add_point_spectrum: d = 3 only");
  if (c.size() != y.size() || spec.size() != g.size()) throw DomainError("add_point_spectrum: size mismatch");
  const int n = g.n;
  const std::size_t m = y.size();
  const double scale = std::pow(g.h(), -3);
  // per-axis factors e^{-i xi_k (y + L)}, cos at the Nyquist slot
  std::vector<cplx> E(3 * m * static_cast<std::size_t>(n));
  std::vector<cplx> cc(m);
  for (std::size_t j = 0; j < m; ++j) {
    cc[j] = scale * c[j] * std::polar(1.0, -dot(beta, y[j]));
    for (int a = 0; a < 3; ++a)
      for (int k = 0; k < n; ++k) {
        const double t = g.xi(k) * (y[j][a] + g.L);
        E[(a * m + j) * n + k] = k == n / 2 ? cplx(std::cos(t)) : std::polar(1.0, -t);
      }
  }
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t k0) {
    for (std::size_t j = 0; j < m; ++j) {
      if (cc[j] == 0.0) continue;
      const cplx a = cc[j] * E[(0 * m + j) * n + k0];
      const cplx* e1 = &E[(1 * m + j) * n];
      const cplx* e2 = &E[(2 * m + j) * n];
      for (int k1 = 0; k1 < n; ++k1) {
        const cplx b = a * e1[k1];
        cplx* row = &spec[(k0 * n + static_cast<std::size_t>(k1)) * n];
        for (int k2 = 0; k2 < n; ++k2) row[k2] += b * e2[k2];
      }
    }
  });
}

CgoSolution solve_remainder(const CgoPair& pair, int which, const Potential& P, const RemainderOptions& opt) {
  P.validate();
  const Field mult = grid_multiplier(P);
  return iterate(pair, which, P.grid, mult, P.shell ? &*P.shell : nullptr, opt);
}

CgoSolution solve_remainder(const CgoPair& pair, int which, const Field& multiplier, const RemainderOptions& opt) {
  return iterate(pair, which, multiplier.grid, multiplier, nullptr, opt);
}

std::vector<cplx> CgoSolution::w_at(const std::vector<Vec3>& x) const {
  auto v = trace_at(w_periodic, x);
  for (std::size_t i = 0; i < x.size(); ++i) v[i] *= std::polar(1.0, dot(shift, x[i]));
  return v;
}

std::vector<cplx> cgo_evaluate(const CgoSolution& sol, const std::vector<Vec3>& x) {
  std::vector<cplx> e(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    e[i] = cdot(sol.zeta, x[i] - sol.center);
    if (std::abs(e[i].real()) > overflow_exponent) throw OverflowGuardError("cgo_evaluate: exponent beyond 600");
  }
  const auto w = sol.w_at(x);
  for (std::size_t i = 0; i < x.size(); ++i) e[i] = std::exp(e[i]) * (1.0 + w[i]);
  return e;
}

Field cgo_evaluate_grid(const CgoSolution& sol) {
  const BoxGrid& g = sol.w.grid;
  Field v(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const cplx e = cdot(sol.zeta, g.point(i) - sol.center);
    if (std::abs(e.real()) > overflow_exponent) throw OverflowGuardError("cgo_evaluate: exponent beyond 600");
    v[i] = std::exp(e) * (1.0 + sol.w[i]);
  }
  return v;
}

SourceBundle carleman_conjugate(const Field& u, const CVec3& zeta, double lambda, const Potential& P, double M) {
  const BoxGrid& g = u.grid;
  const Vec3 re = re_part(zeta);
  const double tau = norm(re);
  if (!(tau > 0.0)) throw DomainError("carleman_conjugate: Re zeta must be nonzero");
  const Vec3 theta = (1.0 / tau) * re;
  const cplx tz = cdot(zeta, theta), zz = cdot(zeta, zeta);
  const Field lap = spectral_laplacian(u);
  const Field d0 = spectral_derivative(u, 0), d1 = spectral_derivative(u, 1), d2 = spectral_derivative(u, 2);
  SourceBundle out;
  out.grid = Field(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double s = dot(g.point(i), theta);
    const CVec3 gp = axpy(M * s, theta, zeta);
    const cplx gg = M * M * s * s + 2.0 * M * s * tz + zz;
    out.grid[i] = lap[i] - 2.0 * (gp[0] * d0[i] + gp[1] * d1[i] + gp[2] * d2[i]) + (gg - M + lambda) * u[i];
  }
  if (!P.empty()) {
    std::vector<cplx> tr;
    if (P.shell) tr = trace_at(u, P.shell->gamma->nodes);
    const auto b = apply_as_source(P, u, P.shell ? &tr : nullptr);
    out.grid -= b.grid;
    if (b.surface) {
      out.surface = b.surface;
      out.density.resize(b.density.size());
      for (std::size_t j = 0; j < b.density.size(); ++j) out.density[j] = -b.density[j];
    }
  }
  return out;
}

CarlemanReport carleman_check(const std::vector<Field>& suite, const CVec3& zeta, double lambda, const Potential& P,
                              double M, double R0) {
  if (suite.empty()) throw EmptySelectionError("carleman_check: empty suite");
  if (!(M > 1.0) || !(R0 > 0.0)) throw DomainError("carleman_check: needs M > 1 and R0 > 0");
  CarlemanReport rep;
  rep.tau = norm(re_part(zeta));
  rep.M = M;
  rep.R0 = R0;
  rep.lhs.resize(suite.size());
  rep.rhs.resize(suite.size());
  const CVec3 mz{-zeta[0], -zeta[1], -zeta[2]};
  for (const auto& u : suite) {
    if (u.is_zero()) throw DomainError("carleman_check: zero suite member");
    for (std::size_t i = 0; i < u.size(); ++i)
      if (u[i] != 0.0 && norm(u.grid.point(i)) > R0 + 1e-12) throw SupportError("carleman_check: support outside B_R0");
  }
  std::vector<double> ratios(suite.size());
  parallel_for(suite.size(), [&](std::size_t k) {
    const Field& u = suite[k];
    const auto b = carleman_conjugate(u, zeta, lambda, P, M);
    Field rhs = b.grid;
    if (b.surface) {
      auto F = fft_forward(b.grid);
      std::vector<cplx> c(b.density.size());
      for (std::size_t j = 0; j < c.size(); ++j) c[j] = b.surface->weights[j] * b.density[j];
      add_point_spectrum(u.grid, b.surface->nodes, c, {0, 0, 0}, F);
      rhs = fft_inverse(u.grid, std::move(F));
    }
    rep.lhs[k] = norm_Xzeta(u, mz, 0.5, M);
    rep.rhs[k] = norm_Xzeta(rhs, mz, -0.5, M);
    ratios[k] = rep.lhs[k] / (R0 * rep.rhs[k]);
  });
  rep.stats = summarize(std::move(ratios));
  return rep;
}

std::vector<Field> carleman_suite(const BoxGrid& g, int count, std::uint64_t seed, double R0) {
  std::vector<Field> out;
  out.reserve(static_cast<std::size_t>(count));
  Rng rng(seed, 0x4341524cULL);
  for (int k = 0; k < count; ++k) {
    Vec3 c;
    do {
      c = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    } while (norm(c) > 1.0);
    c = (0.25 * R0) * c;
    const double width = rng.uniform(0.12, 0.25) * R0;
    const Vec3 kv{rng.normal(), rng.normal(), rng.normal()};
    const Vec3 kvec = (rng.uniform(0.0, 8.0) / (R0 * std::max(norm(kv), 1e-12))) * kv;
    const cplx amp = std::polar(rng.uniform(0.5, 2.0), rng.uniform(0.0, 2.0 * pi));
    Field f = gaussian_field(g, 1.0, c, width, 0.5 * R0);
    for (std::size_t i = 0; i < f.size(); ++i)
      if (f[i] != 0.0) f[i] *= amp * std::polar(1.0, dot(kvec, g.point(i)));
    if (f.is_zero()) throw DomainError("carleman_suite: grid too coarse for the bump");
    out.push_back(std::move(f));
  }
  return out;
}

EmbeddingReport embedding_check(const Field& u, const CVec3& zeta, double M) {
  if (!(M > 1.0)) throw DomainError("embedding_check: needs M > 1");
  const double tau = norm(re_part(zeta));
  if (!(tau > 0.0)) throw DomainError("embedding_check: Re zeta must be nonzero");
  EmbeddingReport r;
  r.l2 = u.l2();
  r.bound = std::pow(M, -0.25) / std::sqrt(tau) * norm_Xzeta(u, zeta, 0.5, M);
  r.min_ratio = std::numeric_limits<double>::infinity();
  const BoxGrid& g = u.grid;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double w = std::sqrt(M * tau * tau + std::norm(p_zeta(zeta, g.frequency(k))) / M);
    r.min_ratio = std::min(r.min_ratio, w / (std::sqrt(M) * tau));
  }
  return r;
}

std::vector<DecayRow> remainder_decay(const Potential& P, double lambda, const Vec3& kappa,
                                      const std::vector<double>& taus, const RemainderOptions& opt) {
  const auto [theta, eta] = cgo_frame(kappa);
  std::vector<DecayRow> rows(taus.size());
  parallel_for(taus.size(), [&](std::size_t k) {
    const auto pair = make_zeta_pair(lambda, kappa, taus[k], theta, eta);
    const auto s1 = solve_remainder(pair, 1, P, opt);
    const auto s2 = solve_remainder(pair, 2, P, opt);
    rows[k] = {taus[k], s1.w.l2(), s2.w.l2(), std::max(s1.iterations, s2.iterations), std::max(s1.residual, s2.residual),
               std::max(s1.contraction, s2.contraction)};
  });
  return rows;
}

void write_decay_csv(const std::string& path, const std::vector<DecayRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("write_decay_csv: cannot open " + path);
  out << "tau,w1_l2,w2_l2,iterations,residual,contraction\n" << std::setprecision(17);
  for (const auto& r : rows)
    out << r.tau << ',' << r.w1 << ',' << r.w2 << ',' << r.iterations << ',' << r.residual << ',' << r.contraction << '\n';
}

}  // namespace ssct
