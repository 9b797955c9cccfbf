#include "ssct/layers.hpp"

#include <fstream>

#include "json.hpp"
#include "ssct/parallel.hpp"
#include "ssct/specfun.hpp"

namespace ssct {
namespace {

using Mat = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;

VecC to_eigen(const std::vector<cplx>& v) { return Eigen::Map<const VecC>(v.data(), static_cast<Eigen::Index>(v.size())); }
std::vector<cplx> to_std(const VecC& v) { return {v.data(), v.data() + v.size()}; }

VecC weights_of(const Hypersurface& s) {
  VecC w(static_cast<Eigen::Index>(s.size()));
  for (std::size_t j = 0; j < s.size(); ++j) w[static_cast<Eigen::Index>(j)] = s.weights[j];
  return w;
}

// Phi(a - y_j): active x boundary
Mat phi_matrix(const ScatterOperator& op, const Hypersurface& s) {
  const Kernel K(op.lambda(), s.d);
  Mat E(static_cast<Eigen::Index>(op.size()), static_cast<Eigen::Index>(s.size()));
  parallel_for(op.size(), [&](std::size_t a) {
    for (std::size_t j = 0; j < s.size(); ++j) E(a, j) = K.value(distance(op.points()[a], s.nodes[j]));
  });
  return E;
}

// d_{nu_x} Phi(x_i - a): boundary x active
Mat dnu_matrix(const ScatterOperator& op, const Hypersurface& s) {
  const Kernel K(op.lambda(), s.d);
  Mat G(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(op.size()));
  parallel_for(s.size(), [&](std::size_t i) {
    for (std::size_t a = 0; a < op.size(); ++a) {
      const Vec3 d = s.nodes[i] - op.points()[a];
      const double r = norm(d);
      cplx v, dv;
      K.value_deriv(r, v, dv);
      G(i, a) = dv * dot(d, s.normals[i]) / r;
    }
  });
  return G;
}

double grid_h(const LayerOperatorSet& ops) { return ops.surface->spacing() / 4.0; }

// nearest node and signed normal offset (negative inside)
struct Side {
  double dist;
  double signed_offset;
};
Side side_of(const Hypersurface& s, const Vec3& x) {
  if (s.sphere && s.d == 3) {
    const double r = distance(x, s.sphere->center);
    return {std::abs(r - s.sphere->radius), r - s.sphere->radius};
  }
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double d = distance(x, s.nodes[j]);
    if (d < bd) {
      bd = d;
      best = j;
    }
  }
  return {bd, dot(x - s.nodes[best], s.normals[best])};
}

// 8th-order central second difference
constexpr double fd8[5] = {-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};

Field fd8_laplacian(const Field& u, const std::function<bool(std::size_t)>& where) {
  const BoxGrid& g = u.grid;
  Field out(g);
  const double h2 = g.h() * g.h();
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!where(i)) continue;
    const auto c = g.index3(i);
    cplx acc = 0.0;
    for (int a = 0; a < g.d; ++a) {
      acc += fd8[0] * u[i];
      for (int k = 1; k <= 4; ++k) {
        auto p = c, m = c;
        p[a] = (p[a] + k) % g.n;
        m[a] = (m[a] - k + g.n) % g.n;
        acc += fd8[k] * (u[g.linear(p[0], p[1], p[2])] + u[g.linear(m[0], m[1], m[2])]);
      }
    }
    out[i] = acc / h2;
  }
  return out;
}

}  // namespace

LayerOperatorSet assemble_layers(double lambda, const Potential& P, SurfacePtr boundary) {
  if (!boundary) throw DomainError("assemble_layers: missing boundary");
  boundary->validate();
  const Hypersurface& s = *boundary;
  LayerOperatorSet ops;
  ops.surface = boundary;
  ops.lambda = lambda;
  ops.potential_id = P.hash();
  auto fr = free_layer_matrices(s, lambda);
  ops.S = std::move(fr.S);
  ops.N = std::move(fr.N);
  ops.D = std::move(fr.D);
  ops.spectral = fr.spectral;
  if (P.empty()) return ops;
  auto op = std::make_shared<ScatterOperator>(lambda, P);
  if (op->size() == 0) return ops;
  const double h = P.grid.h();
  for (const auto& x : s.nodes)
    if (op->clearance(x) < 4.0 * h) throw SupportError("assemble_layers: boundary within 4h of supp V");
  const Mat E = phi_matrix(*op, s);  // Phi(a - y_j) = Phi(x_i - a) transposed
  const Mat Gnu = dnu_matrix(*op, s);
  const VecC w = weights_of(s);
  ops.table = op->solve_many(E);
  const Mat MT = op->weights().asDiagonal() * ops.table;
  ops.S_sc = E.transpose() * MT * w.asDiagonal();
  ops.N_sc = Gnu * MT * w.asDiagonal();
  // d_{nu_y} Phi(a - y_j) = Gnu(j, a)
  const Mat Tnu = op->solve_many(Gnu.transpose());
  ops.D_sc = E.transpose() * (op->weights().asDiagonal() * Tnu) * w.asDiagonal();
  ops.S += ops.S_sc;
  ops.N += ops.N_sc;
  ops.D += ops.D_sc;
  ops.op = std::move(op);
  return ops;
}

std::vector<cplx> eval_single_layer(const LayerOperatorSet& ops, const BoundaryDensity& f, const std::vector<Vec3>& x) {
  const Hypersurface& s = *ops.surface;
  if (f.size() != s.size()) throw DomainError("eval_single_layer: density size mismatch");
  const double hmin = 2.0 * grid_h(ops);
  for (const auto& p : x)
    if (side_of(s, p).dist < hmin) throw DomainError("eval_single_layer: point closer than 2h to the boundary");
  auto out = surface_potential(ops.lambda, s.d, s, f, x);
  if (ops.op) {
    const VecC c = ops.table * weights_of(s).cwiseProduct(to_eigen(f));
    const auto sc = ops.op->scattered(c, x);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] += sc[i];
  }
  return out;
}

std::vector<cplx> eval_single_layer_on_grid(const LayerOperatorSet& ops, const BoundaryDensity& f, const BoxGrid& g,
                                            const std::vector<std::size_t>& idx) {
  if (!ops.op) {
    std::vector<Vec3> x(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) x[k] = g.point(idx[k]);
    return eval_single_layer(ops, f, x);
  }
  const Hypersurface& s = *ops.surface;
  if (f.size() != s.size()) throw DomainError("eval_single_layer_on_grid: density size mismatch");
  if (!(ops.op->potential().grid == g)) throw DomainError("eval_single_layer_on_grid: grid mismatch");
  std::vector<Vec3> x(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    x[k] = g.point(idx[k]);
    if (side_of(s, x[k]).dist < 2.0 * g.h()) throw DomainError("eval_single_layer_on_grid: node closer than 2h to the boundary");
  }
  auto out = surface_potential(ops.lambda, s.d, s, f, x);
  const Field sc = ops.op->scattered_grid(ops.table * weights_of(s).cwiseProduct(to_eigen(f)));
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] += sc[idx[k]];
  return out;
}

std::vector<CVec3> eval_single_layer_gradient(const LayerOperatorSet& ops, const BoundaryDensity& f,
                                              const std::vector<Vec3>& x) {
  const Hypersurface& s = *ops.surface;
  const Kernel K(ops.lambda, s.d);
  std::vector<CVec3> out(x.size());
  parallel_for(x.size(), [&](std::size_t p) {
    CVec3 acc{0.0, 0.0, 0.0};
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (f[j] == 0.0) continue;
      const CVec3 gk = K.gradient(x[p], s.nodes[j]);
      for (int c = 0; c < 3; ++c) acc[c] += s.weights[j] * f[j] * gk[c];
    }
    out[p] = acc;
  });
  if (ops.op) {
    const VecC c = ops.table * weights_of(s).cwiseProduct(to_eigen(f));
    const auto sc = ops.op->scattered_gradient(c, x);
    for (std::size_t i = 0; i < x.size(); ++i)
      for (int a = 0; a < 3; ++a) out[i][a] += sc[i][a];
  }
  return out;
}

JumpReport jump_check(const LayerOperatorSet& ops, const BoundaryDensity& f) {
  const Hypersurface& s = *ops.surface;
  if (f.size() != s.size()) throw DomainError("jump_check: density size mismatch");
  const std::size_t n = s.size();
  const double hs = s.spacing(), h = hs / 4.0, rp = 6.0 * hs;
  const Kernel K(ops.lambda, s.d);

  // fine copy of the surface and the density inside the partition-of-unity patch
  std::vector<Vec3> fnodes;
  std::vector<cplx> fvals;
  std::vector<double> fw;
  const bool upsample = s.sphere && s.d == 3 && s.sphere->ntheta > 0;
  if (upsample) {
    const LatLong& ll = *s.sphere;
    const SphericalTransform T(ll);
    const auto coef = T.analyze(f);
    const int U = 8;
    const LatLong fine = LatLong::make(ll.center, ll.radius, U * ll.ntheta, U * ll.nphi);
    fvals = T.synthesize_grid(coef, fine);
    for (int r = 0; r < fine.ntheta; ++r)
      for (int c = 0; c < fine.nphi; ++c) {
        const double th = fine.theta[static_cast<std::size_t>(r)], ph = fine.phi(c);
        const Vec3 e{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
        fnodes.push_back(ll.center + ll.radius * e);
        fw.push_back(ll.radius * ll.radius * fine.weight[static_cast<std::size_t>(r)] * 2.0 * pi / fine.nphi);
      }
  }
  auto chi = [&](double d) { return upsample ? smooth_cutoff(d / rp, 0.5, 1.0) : 0.0; };

  auto dnu_at = [&](const Vec3& x, const Vec3& nu, const Vec3& x0) {
    cplx acc = 0.0;
    auto add = [&](const Vec3& y, cplx q) {
      const Vec3 d = x - y;
      const double r = norm(d);
      cplx v, dv;
      K.value_deriv(r, v, dv);
      acc += q * dv * dot(d, nu) / r;
    };
    for (std::size_t j = 0; j < n; ++j) {
      const double c = 1.0 - chi(distance(s.nodes[j], x0));
      if (c > 0.0 && f[j] != 0.0) add(s.nodes[j], c * s.weights[j] * f[j]);
    }
    for (std::size_t j = 0; j < fnodes.size(); ++j) {
      const double dd = distance(fnodes[j], x0);
      if (dd >= rp) continue;
      const double c = chi(dd);
      if (c > 0.0) add(fnodes[j], c * fw[j] * fvals[j]);
    }
    return acc;
  };

  JumpReport rep;
  rep.inner.resize(n);
  rep.outer.resize(n);
  rep.jump.resize(n);
  const double offs[2] = {4.0 * h, 2.0 * h};
  // scattered part: smooth across dOmega, same offsets
  std::vector<Vec3> probe;
  for (std::size_t i = 0; i < n; ++i)
    for (int side : {1, -1})
      for (double o : offs) probe.push_back(s.nodes[i] + (side * o) * s.normals[i]);
  std::vector<cplx> sc(probe.size(), 0.0);
  if (ops.op) {
    const VecC c = ops.table * weights_of(s).cwiseProduct(to_eigen(f));
    const auto gsc = ops.op->scattered_gradient(c, probe);
    for (std::size_t p = 0; p < probe.size(); ++p) sc[p] = cdot(gsc[p], s.normals[p / 4]);
  }
  parallel_for(n, [&](std::size_t i) {
    const Vec3& x0 = s.nodes[i];
    const Vec3& nu = s.normals[i];
    cplx D[2][2];
    for (int si = 0; si < 2; ++si)
      for (int oi = 0; oi < 2; ++oi) D[si][oi] = dnu_at(probe[4 * i + 2 * si + oi], nu, x0) + sc[4 * i + 2 * si + oi];
    rep.outer[i] = 2.0 * D[0][1] - D[0][0];
    rep.inner[i] = 2.0 * D[1][1] - D[1][0];
    rep.jump[i] = static_cast<double>(sigma) * (rep.inner[i] - rep.outer[i]);
  });
  for (std::size_t i = 0; i < n; ++i) rep.max_error = std::max(rep.max_error, std::abs(rep.jump[i] - f[i]));
  return rep;
}

double neumann_condition(const LayerOperatorSet& ops) {
  Mat A = 2.0 * ops.N;
  A.diagonal().array() += static_cast<double>(sigma);
  Eigen::BDCSVD<Mat> svd(A);
  const auto& sv = svd.singularValues();
  return sv[0] / sv[sv.size() - 1];
}

namespace {
BoundaryDensity solve_density(const LayerOperatorSet& ops, const BoundaryDensity& g, double cond) {
  if (cond > near_eigenvalue_condition)
    throw NearEigenvalueError("2N + sigma I is near-singular; perturb lambda", cond);
  Mat A = 2.0 * ops.N;
  A.diagonal().array() += static_cast<double>(sigma);
  return to_std(A.partialPivLu().solve(2.0 * to_eigen(g)));
}
}  // namespace

BoundaryDensity neumann_density(const LayerOperatorSet& ops, const BoundaryDensity& g) {
  return solve_density(ops, g, neumann_condition(ops));
}

NeumannResult neumann_solve(const LayerOperatorSet& ops, const Field& f_vol, bool compute_residual) {
  const Hypersurface& s = *ops.surface;
  const BoxGrid& g = f_vol.grid;
  const double h = g.h();
  if (ops.op && !(ops.op->potential().grid == g)) throw DomainError("neumann_solve: grid mismatch");
  std::vector<std::size_t> supp;
  for (std::size_t i = 0; i < f_vol.size(); ++i)
    if (f_vol[i] != 0.0) {
      const auto sd = side_of(s, g.point(i));
      if (sd.signed_offset > -4.0 * h) throw SupportError("neumann_solve: f_vol must vanish within 4h of dOmega");
      supp.push_back(i);
    }
  NeumannResult res;
  res.condition = neumann_condition(ops);
  if (res.condition > near_eigenvalue_condition)
    throw NearEigenvalueError("2N + sigma I is near-singular; perturb lambda", res.condition);

  const Kernel K(ops.lambda, s.d);
  const double hd = g.cell_volume();
  // w = G f + u_sc[G f]
  const Field Gf = supp.empty() ? Field(g) : resolvent_apply(ops.lambda, f_vol);
  VecC uw;
  if (ops.op) {
    const auto& op = *ops.op;
    VecC b(static_cast<Eigen::Index>(op.size()));
    for (std::size_t a = 0; a < op.grid_count(); ++a) b[static_cast<Eigen::Index>(a)] = Gf[op.grid_nodes()[a]];
    if (op.shell_count()) {
      const auto t = trace_at(Gf, op.potential().shell->gamma->nodes);
      for (std::size_t j = 0; j < t.size(); ++j) b[static_cast<Eigen::Index>(op.grid_count() + j)] = t[j];
    }
    uw = op.solve_many(b);
  }
  const std::size_t n = s.size();
  res.g.assign(n, 0.0);
  std::vector<cplx> wb(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    cplx v = 0.0, dn = 0.0;
    for (std::size_t q : supp) {
      const Vec3 d = s.nodes[i] - g.point(q);
      const double r = norm(d);
      cplx kv, kd;
      K.value_deriv(r, kv, kd);
      v += hd * kv * f_vol[q];
      dn += hd * kd * dot(d, s.normals[i]) / r * f_vol[q];
    }
    wb[i] = v;
    res.g[i] = dn;
  });
  if (ops.op) {
    const auto sv = ops.op->scattered(uw, s.nodes);
    const auto sg = ops.op->scattered_gradient(uw, s.nodes);
    for (std::size_t i = 0; i < n; ++i) {
      wb[i] += sv[i];
      res.g[i] += cdot(sg[i], s.normals[i]);
    }
  }
  res.phi = solve_density(ops, res.g, res.condition);
  const VecC phi = to_eigen(res.phi);
  const VecC Sphi = ops.S * phi;
  const VecC flux = to_eigen(res.g) - (ops.N * phi + 0.5 * static_cast<double>(sigma) * phi);
  double gmax = 0.0;
  for (const auto& v : res.g) gmax = std::max(gmax, std::abs(v));
  res.flux_residual = gmax > 0.0 ? flux.cwiseAbs().maxCoeff() / gmax : flux.cwiseAbs().maxCoeff();
  res.trace.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.trace[i] = wb[i] - Sphi[static_cast<Eigen::Index>(i)];

  // u on interior grid nodes
  std::vector<std::size_t> inside;
  std::vector<Vec3> ipts;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto sd = side_of(s, g.point(i));
    if (sd.signed_offset <= -2.0 * h) {
      inside.push_back(i);
      ipts.push_back(g.point(i));
    }
  }
  Field u(g);
  {
    Field wgrid = Gf;
    if (ops.op) wgrid += ops.op->scattered_grid(uw);
    const auto vfree = surface_potential(ops.lambda, s.d, s, res.phi, ipts);
    Field vsc(g);
    if (ops.op) vsc = ops.op->scattered_grid(ops.table * weights_of(s).cwiseProduct(phi));
    for (std::size_t k = 0; k < inside.size(); ++k) u[inside[k]] = wgrid[inside[k]] - vfree[k] - vsc[inside[k]];
  }
  res.u = u;
  if (compute_residual) {
    std::vector<char> eval(g.size(), 0);
    const SurfacePtr gamma = ops.op && ops.op->shell_count() ? ops.op->potential().shell->gamma : nullptr;
    for (std::size_t k = 0; k < inside.size(); ++k) {
      const std::size_t i = inside[k];
      if (side_of(s, ipts[k]).signed_offset > -6.0 * h) continue;
      if (gamma && side_of(*gamma, ipts[k]).dist < 5.0 * h) continue;
      eval[i] = 1;
    }
    const Field lap = fd8_laplacian(u, [&](std::size_t i) { return eval[i] != 0; });
    const Field mult = ops.op ? grid_multiplier(ops.op->potential()) : Field(g);
    double num = 0, fn = 0, un = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!eval[i]) continue;
      num += std::norm(lap[i] + (ops.lambda - mult[i]) * u[i] - f_vol[i]);
      fn += std::norm(f_vol[i]);
      un += std::norm(ops.lambda * u[i]);
    }
    const double den = std::max(fn, un);
    res.interior_residual = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  }
  return res;
}

ConditionSweep neumann_condition_sweep(const Potential& P, SurfacePtr boundary, double l0, double l1, int samples,
                                       int refine_steps) {
  if (samples < 3 || !(l1 > l0)) throw DomainError("neumann_condition_sweep: need >= 3 samples on l0 < l1");
  ConditionSweep out;
  auto cond = [&](double lam) { return neumann_condition(assemble_layers(lam, P, boundary)); };
  for (int i = 0; i < samples; ++i) {
    const double lam = l0 + (l1 - l0) * i / (samples - 1);
    out.lambdas.push_back(lam);
    out.conditions.push_back(cond(lam));
  }
  const auto it = std::max_element(out.conditions.begin(), out.conditions.end());
  const std::size_t k = static_cast<std::size_t>(it - out.conditions.begin());
  double a = out.lambdas[k > 0 ? k - 1 : 0], b = out.lambdas[std::min(k + 1, out.lambdas.size() - 1)];
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = cond(c), fd = cond(d);
  out.peak_lambda = out.lambdas[k];
  out.peak_condition = *it;
  for (int step = 0; step < refine_steps; ++step) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = cond(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = cond(d);
    }
    const double best = std::max(fc, fd);
    if (best > out.peak_condition) {
      out.peak_condition = best;
      out.peak_lambda = fc > fd ? c : d;
    }
  }
  out.flagged = out.peak_condition > near_eigenvalue_condition;
  return out;
}

std::vector<Vec3> ball_nodes(const BoxGrid& g, const Vec3& c, double radius) {
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (distance(g.point(i), c) <= radius) out.push_back(g.point(i));
  return out;
}

RungeReport runge_fit(const LayerOperatorSet& ops, const std::vector<std::size_t>& sig, const std::vector<Vec3>& pts,
                      const std::vector<cplx>& target, double reg) {
  if (sig.empty()) throw EmptySelectionError("runge_fit: empty Sigma");
  if (target.size() != pts.size()) throw DomainError("runge_fit: target size mismatch");
  if (!(reg >= 0.0)) throw DomainError("runge_fit: reg must be >= 0");
  if (ops.op) {
    // the point sums below are the scattered field only away from the active set
    const double h = ops.op->potential().grid.h();
    for (const auto& x : pts)
      if (ops.op->clearance(x) < 2.0 * h) throw SupportError("runge_fit: Omega' point within 2h of supp V");
  }
  const Hypersurface& s = *ops.surface;
  const Eigen::Index P = static_cast<Eigen::Index>(pts.size()), m = static_cast<Eigen::Index>(sig.size());
  // columns: single layer of the unit density at node j, scaled by w_j^{1/2} (L2(Sigma) coordinates)
  Mat A(P, m);
  const Kernel K(ops.lambda, s.d);
  parallel_for(pts.size(), [&](std::size_t p) {
    for (Eigen::Index j = 0; j < m; ++j) A(p, j) = K.value(distance(pts[p], s.nodes[sig[j]]));
  });
  if (ops.op) {
    Mat T(ops.table.rows(), m);
    for (Eigen::Index j = 0; j < m; ++j) T.col(j) = ops.table.col(static_cast<Eigen::Index>(sig[j]));
    const Mat MT = ops.op->weights().asDiagonal() * T;
    Mat E(P, static_cast<Eigen::Index>(ops.op->size()));
    parallel_for(pts.size(), [&](std::size_t p) {
      for (std::size_t a = 0; a < ops.op->size(); ++a) E(p, a) = K.value(distance(pts[p], ops.op->points()[a]));
    });
    A += E * MT;
  }
  for (Eigen::Index j = 0; j < m; ++j) A.col(j) *= std::sqrt(s.weights[sig[j]]);
  const VecC t = to_eigen(target);
  RungeReport rep;
  rep.dof = sig.size();
  rep.reg = reg;
  rep.density.assign(s.size(), 0.0);
  const double tn = t.norm();
  if (tn == 0.0) return rep;
  Eigen::BDCSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const VecC ut = svd.matrixU().adjoint() * t;
  auto solve_for = [&](double r) {
    const double mu = r * sv[0] * sv[0];
    VecC c(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) c[i] = sv[i] > 0.0 ? sv[i] / (sv[i] * sv[i] + mu) * ut[i] : 0.0;
    return VecC(svd.matrixV() * c);
  };
  for (int e = -2; e >= -14; e -= 2) {
    const double r = std::pow(10.0, e);
    const VecC q = solve_for(r);
    rep.lcurve.push_back({r, (A * q - t).norm() / tn, q.norm()});
  }
  const VecC q = solve_for(reg);
  rep.error = (A * q - t).norm() / tn;
  for (Eigen::Index j = 0; j < m; ++j) rep.density[sig[j]] = q[j] / std::sqrt(s.weights[sig[j]]);
  return rep;
}

OrthogonalityReport orthogonality_check(const LayerOperatorSet& ops, const BoundaryDensity& f, const Field& v) {
  const Hypersurface& s = *ops.surface;
  const auto nres = neumann_solve(ops, v, false);
  const VecC Nf = ops.N * to_eigen(f);
  OrthogonalityReport rep;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const cplx p = nres.trace[i];
    rep.uncorrected += s.weights[i] * Nf[static_cast<Eigen::Index>(i)] * p;
    rep.boundary += s.weights[i] * (Nf[static_cast<Eigen::Index>(i)] + 0.5 * static_cast<double>(sigma) * f[i]) * p;
  }
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) idx.push_back(i);
  if (!idx.empty()) {
    const auto Sf = eval_single_layer_on_grid(ops, f, v.grid, idx);
    for (std::size_t k = 0; k < idx.size(); ++k) rep.volume -= v.grid.cell_volume() * Sf[k] * v[idx[k]];
  }
  const double den = std::max(std::abs(rep.boundary), std::abs(rep.volume));
  rep.discrepancy = den > 0.0 ? std::abs(rep.boundary - rep.volume) / den : 0.0;
  return rep;
}

void export_layers(const LayerOperatorSet& ops, const std::string& base) {
  std::ofstream bin(base + ".bin", std::ios::binary);
  if (!bin) throw Error("export_layers: cannot open " + base + ".bin");
  for (const Mat* M : {&ops.S, &ops.N, &ops.D})
    for (Eigen::Index i = 0; i < M->rows(); ++i)
      for (Eigen::Index j = 0; j < M->cols(); ++j) {
        const double re = (*M)(i, j).real(), im = (*M)(i, j).imag();
        bin.write(reinterpret_cast<const char*>(&re), sizeof re);
        bin.write(reinterpret_cast<const char*>(&im), sizeof im);
      }
  nlohmann::ordered_json j;
  j["rows"] = ops.S.rows();
  j["cols"] = ops.S.cols();
  j["matrices"] = {"S", "N", "D"};
  j["layout"] = "row-major complex128 (re, im), matrices concatenated";
  j["lambda"] = ops.lambda;
  j["potential_hash"] = ops.potential_id;
  j["surface_hash"] = ops.surface->hash();
  j["spectral"] = ops.spectral;
  std::ofstream(base + ".json") << j.dump(2) << "\n";
}

}  // namespace ssct
