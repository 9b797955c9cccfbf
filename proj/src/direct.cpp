#include "ssct/direct.hpp"

#include <mutex>

#include "json.hpp"

#include "ssct/krylov.hpp"
#include "ssct/parallel.hpp"
#include "ssct/specfun.hpp"
#include "ssct/surface_quadrature.hpp"

namespace ssct {
namespace {

std::mutex lu_mu;

int wrap(int i, int n) { return ((i % n) + n) % n; }

}  // namespace

ScatterOperator::ScatterOperator(double lambda, const Potential& P) : lambda_(lambda), P_(P) {
  if (!(lambda > 0.0)) throw DomainError("ScatterOperator: lambda must be positive");
  P_.validate();
  const BoxGrid& g = P_.grid;
  const double hd = g.cell_volume();
  const Field mult = grid_multiplier(P_);
  std::vector<cplx> m;
  for (std::size_t i = 0; i < mult.size(); ++i)
    if (mult[i] != 0.0) {
      grid_nodes_.push_back(i);
      points_.push_back(g.point(i));
      m.push_back(hd * mult[i]);
    }
  const std::size_t ng = grid_nodes_.size();
  if (P_.shell) {
    const auto& G = *P_.shell->gamma;
    for (std::size_t j = 0; j < G.size(); ++j) {
      points_.push_back(G.nodes[j]);
      m.push_back(G.weights[j] * P_.shell->alpha[j]);
    }
  }
  const std::size_t N = points_.size();
  m_ = Eigen::Map<Eigen::VectorXcd>(m.data(), static_cast<Eigen::Index>(N));
  K_.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  if (N == 0) return;

  const Kernel ker(lambda, g.d);
  if (ng > 0) {
    const auto gk = discrete_kernel(lambda, g);
    std::vector<std::array<int, 3>> idx(ng);
    for (std::size_t a = 0; a < ng; ++a) idx[a] = g.index3(grid_nodes_[a]);
    parallel_for(ng, [&](std::size_t a) {
      for (std::size_t b = 0; b < ng; ++b) {
        const int i0 = wrap(idx[a][0] - idx[b][0], g.n), i1 = wrap(idx[a][1] - idx[b][1], g.n);
        const int i2 = g.d == 3 ? wrap(idx[a][2] - idx[b][2], g.n) : 0;
        K_(a, b) = (*gk)[g.linear(i0, i1, i2)];
      }
    });
  }
  if (N > ng) {
    const auto& G = *P_.shell->gamma;
    parallel_for(ng, [&](std::size_t a) {
      for (std::size_t j = 0; j < G.size(); ++j) {
        const double r = distance(points_[a], G.nodes[j]);
        if (r < 1e-12) throw DomainError("ScatterOperator: grid node coincides with a Gamma node");
        const cplx v = ker.value(r);
        K_(a, ng + j) = v;
        K_(ng + j, a) = v;
      }
    });
    const auto S = free_layer_matrices(G, lambda, kS).S;
    const Eigen::Index ns = static_cast<Eigen::Index>(G.size());
    Eigen::MatrixXcd B(ns, ns);
    for (Eigen::Index j = 0; j < ns; ++j) B.col(j) = S.col(j) / G.weights[j];
    K_.bottomRightCorner(ns, ns) = 0.5 * (B + B.transpose());
  }
}

double ScatterOperator::clearance(const Vec3& x) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : points_) best = std::min(best, distance(x, p));
  return best;
}

Eigen::VectorXcd ScatterOperator::incident(const Vec3& y) const {
  const Kernel ker(lambda_, P_.grid.d);
  Eigen::VectorXcd b(static_cast<Eigen::Index>(size()));
  for (std::size_t a = 0; a < size(); ++a) {
    const double r = distance(points_[a], y);
    if (r < 1e-12) throw SupportError("source point coincides with an active point");
    b[static_cast<Eigen::Index>(a)] = ker.value(r);
  }
  return b;
}

Eigen::VectorXcd ScatterOperator::apply(const Eigen::VectorXcd& u) const {
  return u - K_ * m_.cwiseProduct(u);
}

ScatterOperator::Solve ScatterOperator::solve(const Eigen::VectorXcd& b, double tol, int max_iter) const {
  Solve out;
  const double bn = b.norm();
  if (bn == 0.0 || size() == 0) {
    out.u = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(size()));
    out.history.push_back(0.0);
    out.converged = true;
    out.regime = "fixed-point";
    return out;
  }
  // x_{k+1} - x_k is the residual of x_k
  Eigen::VectorXcd x = b;
  out.regime = "fixed-point";
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXcd y = b + K_ * m_.cwiseProduct(x);
    const double r = (y - x).norm() / bn;
    out.history.push_back(r);
    out.iterations = it;
    if (r <= tol) {
      out.u = std::move(x);
      out.converged = true;
      return out;
    }
    const std::size_t k = out.history.size();
    if (!std::isfinite(r) || (k >= 3 && r > 0.8 * out.history[k - 2])) break;
    x = std::move(y);
  }
  out.regime = "krylov";
  const std::size_t nfp = out.history.size();
  // restart from the best fixed-point iterate only if it beats the zero guess
  Eigen::VectorXcd x0 = out.history.size() >= 2 && out.history[nfp - 2] < 1.0 ? x : Eigen::VectorXcd();
  auto kr = gmres([this](const Eigen::VectorXcd& v) { return apply(v); }, b, std::move(x0), tol,
                  std::max(1, max_iter - out.iterations));
  out.history.insert(out.history.end(), kr.history.begin() + 1, kr.history.end());
  out.iterations += kr.iterations;
  out.u = std::move(kr.x);
  out.converged = kr.converged;
  return out;
}

Eigen::MatrixXcd ScatterOperator::solve_many(const Eigen::MatrixXcd& B) const {
  {
    std::lock_guard lock(lu_mu);
    if (!lu_) {
      Eigen::MatrixXcd A = -K_ * m_.asDiagonal();
      A.diagonal().array() += 1.0;
      lu_ = std::make_shared<Eigen::PartialPivLU<Eigen::MatrixXcd>>(A);
    }
  }
  return lu_->solve(B);
}

std::vector<cplx> ScatterOperator::scattered(const Eigen::VectorXcd& u, const std::vector<Vec3>& x) const {
  const Kernel ker(lambda_, P_.grid.d);
  const Eigen::VectorXcd q = m_.cwiseProduct(u);
  std::vector<cplx> out(x.size());
  parallel_for(x.size(), [&](std::size_t p) {
    cplx acc = 0.0;
    for (std::size_t a = 0; a < size(); ++a) {
      const double r = distance(x[p], points_[a]);
      if (r < 1e-12) throw DomainError("scattered: evaluation point on the active set");
      acc += ker.value(r) * q[static_cast<Eigen::Index>(a)];
    }
    out[p] = acc;
  });
  return out;
}

std::vector<CVec3> ScatterOperator::scattered_gradient(const Eigen::VectorXcd& u, const std::vector<Vec3>& x) const {
  const Kernel ker(lambda_, P_.grid.d);
  const Eigen::VectorXcd q = m_.cwiseProduct(u);
  std::vector<CVec3> out(x.size());
  parallel_for(x.size(), [&](std::size_t p) {
    CVec3 acc{0.0, 0.0, 0.0};
    for (std::size_t a = 0; a < size(); ++a) {
      const Vec3 d = x[p] - points_[a];
      const double r = norm(d);
      if (r < 1e-12) throw DomainError("scattered_gradient: evaluation point on the active set");
      cplx v, dv;
      ker.value_deriv(r, v, dv);
      const cplx s = dv / r * q[static_cast<Eigen::Index>(a)];
      for (int c = 0; c < 3; ++c) acc[c] += s * d[c];
    }
    out[p] = acc;
  });
  return out;
}

Field ScatterOperator::grid_source(const Eigen::VectorXcd& u) const {
  Field q(P_.grid);
  const double hd = P_.grid.cell_volume();
  for (std::size_t a = 0; a < grid_count(); ++a) q[grid_nodes_[a]] = m_[static_cast<Eigen::Index>(a)] / hd * u[static_cast<Eigen::Index>(a)];
  return q;
}

Field ScatterOperator::scattered_grid(const Eigen::VectorXcd& u) const {
  Field out = grid_count() ? resolvent_apply(lambda_, grid_source(u)) : Field(P_.grid);
  if (shell_count()) {
    const auto& G = *P_.shell->gamma;
    std::vector<cplx> dens(G.size());
    for (std::size_t j = 0; j < G.size(); ++j) dens[j] = P_.shell->alpha[j] * u[static_cast<Eigen::Index>(grid_count() + j)];
    std::vector<Vec3> pts(P_.grid.size());
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = P_.grid.point(i);
    const auto s = surface_potential(lambda_, P_.grid.d, G, dens, pts);
    for (std::size_t i = 0; i < s.size(); ++i) out[i] += s[i];
  }
  return out;
}

std::string ScatterState::metadata_json() const {
  nlohmann::ordered_json j;
  j["lambda"] = lambda;
  j["y"] = y;
  j["iterations"] = iterations;
  j["regime"] = regime;
  j["converged"] = converged;
  j["residual_history"] = residual_history;
  return j.dump(2);
}

Field incident_field(double lambda, const BoxGrid& g, const Vec3& y) {
  const Kernel ker(lambda, g.d);
  Field f(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double r = distance(g.point(i), y);
    f[i] = r < 1e-12 ? cplx(0.0) : ker.value(r);
  }
  return f;
}

BornResult born_series(double lambda, const Potential& P, const Field& src, double tol, int max_iter) {
  if (P.shell || P.frac) throw DomainError("born_series: only the grid part V0 is supported");
  BornResult out;
  Field term = resolvent_apply(lambda, src);
  out.u = term;
  double prev = term.l2();
  out.term_norms.push_back(prev);
  out.terms = 1;
  if (!P.v0 || prev == 0.0) return out;
  int growth = 0;
  for (int n = 1; n < max_iter; ++n) {
    Field next = resolvent_apply(lambda, hadamard(*P.v0, term));
    const double nn = next.l2();
    out.u += next;
    out.term_norms.push_back(nn);
    out.terms = n + 1;
    out.contraction = prev > 0.0 ? nn / prev : 0.0;
    growth = nn > prev ? growth + 1 : 0;
    if (growth >= 5 || !std::isfinite(nn))
      throw ConvergenceError("born_series diverges: lambda below the operational threshold", out.term_norms);
    if (nn < tol * out.u.l2()) return out;
    term = std::move(next);
    prev = nn;
  }
  throw ConvergenceError("born_series: iteration limit reached", out.term_norms);
}

double equation_residual(double lambda, const Field& u, const Field& mult, const Field& rhs, const Vec3& mc, double mr) {
  const Field lap = spectral_laplacian(u);
  const BoxGrid& g = u.grid;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Vec3 x = g.point(i);
    if (norm(x) > g.L / 2 || (mr > 0.0 && distance(x, mc) <= mr)) continue;
    const cplx mu = mult.size() ? mult[i] : cplx(0.0);
    num += std::norm(lap[i] + (lambda - mu) * u[i] - rhs[i]);
    den += std::norm(rhs[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num * g.cell_volume());
}

ScatterState solve_scattering(const ScatterOperator& op, const Vec3& y, double tol, bool materialize) {
  const BoxGrid& g = op.potential().grid;
  if (op.size() && op.clearance(y) < 2.0 * g.h()) throw SupportError("source point within 2h of supp V");
  ScatterState st;
  st.y = y;
  st.lambda = op.lambda();
  const Eigen::VectorXcd b = op.incident(y);
  auto s = op.solve(b, tol);
  st.iterations = s.iterations;
  st.residual_history = s.history;
  st.regime = s.regime;
  st.converged = s.converged;
  if (!s.converged) throw ConvergenceError("solve_scattering did not converge", s.history);
  st.active = std::move(s.u);
  for (std::size_t j = 0; j < op.shell_count(); ++j) {
    const auto a = static_cast<Eigen::Index>(op.grid_count() + j);
    st.shell_trace.push_back(st.active[a] - b[a]);
  }
  st.grid_field = materialize ? op.scattered_grid(st.active) : Field(g);
  return st;
}

ScatterState solve_scattering(double lambda, const Potential& P, const Vec3& y, double tol) {
  const ScatterOperator op(lambda, P);
  return solve_scattering(op, y, tol, true);
}

ScatterResiduals scatter_residuals(const ScatterOperator& op, const ScatterState& st) {
  ScatterResiduals r;
  const Eigen::VectorXcd b = op.incident(st.y);
  if (b.norm() > 0.0) r.system = (op.apply(st.active) - b).norm() / b.norm();
  const BoxGrid& g = op.potential().grid;
  if (op.grid_count()) {
    // shell contribution is Helmholtz-harmonic off Gamma; only the FFT part carries the grid source
    Field fft_part = resolvent_apply(op.lambda(), op.grid_source(st.active));
    Field u_to = incident_field(op.lambda(), g, st.y) + st.grid_field;
    const Field mult = grid_multiplier(op.potential());
    const Field rhs = hadamard(mult, u_to);
    r.grid = equation_residual(op.lambda(), fft_part, Field(g), rhs, st.y, 2.0 * g.h());
  }
  if (op.shell_count()) {
    const auto& G = *op.potential().shell->gamma;
    const auto t = trace_at(st.grid_field, G.nodes);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) {
      num = std::max(num, std::abs(t[j] - st.shell_trace[j]));
      den = std::max(den, std::abs(st.shell_trace[j]));
    }
    r.trace_mismatch = den > 0.0 ? num / den : num;
  }
  return r;
}

std::vector<double> src_diagnostic(const std::function<cplx(const Vec3&)>& u, double lambda, int d, const Vec3& c,
                                   const std::vector<double>& radii, int directions) {
  std::vector<Vec3> dirs;
  if (d == 3) {
    const double golden = pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < directions; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / directions;
      const double rr = std::sqrt(1.0 - z * z);
      dirs.push_back({rr * std::cos(golden * i), rr * std::sin(golden * i), z});
    }
  } else {
    for (int i = 0; i < directions; ++i) dirs.push_back({std::cos(2 * pi * i / directions), std::sin(2 * pi * i / directions), 0.0});
  }
  const double k = std::sqrt(lambda);
  std::vector<double> out;
  for (double r : radii) {
    const double dr = 1e-3 * r;
    const double scale = std::pow(r, 0.5 * (d - 1));
    double acc = 0.0;
    for (const auto& e : dirs) {
      auto at = [&](double t) { return u(c + t * e); };
      const cplx du = (-at(r + 2 * dr) + 8.0 * at(r + dr) - 8.0 * at(r - dr) + at(r - 2 * dr)) / (12.0 * dr);
      acc += std::abs(scale * (du - I * k * at(r)));
    }
    out.push_back(acc / static_cast<double>(dirs.size()));
  }
  return out;
}

double interior_regularity_ratio(const Field& u, const std::array<Field, 3>& grad, double R, double Rp) {
  const BoxGrid& g = u.grid;
  if (!(Rp > 0.0) || R - Rp < 4.0 * g.h()) throw DomainError("interior_regularity_ratio: Omega' needs a margin of 4h");
  if (R > g.L) throw DomainError("interior_regularity_ratio: Omega exceeds the box");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = norm(g.point(i));
    if (r <= R) den += std::norm(u[i]);
    if (r <= Rp) {
      num += std::norm(u[i]);
      for (int a = 0; a < g.d; ++a) num += std::norm(grad[a][i]);
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

double interior_regularity_ratio(const Field& u, double R, double Rp) {
  std::array<Field, 3> grad{Field(u.grid), Field(u.grid), Field(u.grid)};
  for (int a = 0; a < u.grid.d; ++a) grad[a] = spectral_derivative(u, a);
  return interior_regularity_ratio(u, grad, R, Rp);
}

}  // namespace ssct
