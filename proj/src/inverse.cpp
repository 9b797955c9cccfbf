#include "ssct/inverse.hpp"

#include <fstream>
#include <iomanip>

#include "ssct/parallel.hpp"

namespace ssct {

namespace {

const std::vector<cplx>* pick(const std::vector<cplx>& v) { return v.empty() ? nullptr : &v; }

// v = S f on the shell nodes of `gamma`
std::vector<cplx> layer_on_shell(const LayerOperatorSet& ops, const BoundaryDensity& f, const ShellPart& shell) {
  if (ops.op && ops.op->potential().shell && ops.op->potential().shell->gamma == shell.gamma) {
    Eigen::VectorXcd wf(static_cast<Eigen::Index>(f.size()));
    for (std::size_t j = 0; j < f.size(); ++j) wf[static_cast<Eigen::Index>(j)] = ops.surface->weights[j] * f[j];
    const Eigen::VectorXcd all = ops.table * wf;
    const auto g0 = static_cast<Eigen::Index>(ops.op->grid_count());
    std::vector<cplx> out(shell.gamma->size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = all[g0 + static_cast<Eigen::Index>(j)];
    return out;
  }
  return eval_single_layer(ops, f, shell.gamma->nodes);
}

}  // namespace

cplx alessandrini_pair(const Potential& P1, const Potential& P2, const Field& v1, const Field& v2,
                       const PairTraces& t, double res1, double res2) {
  if (res1 > pairing_residual_limit || res2 > pairing_residual_limit)
    throw ResidualError("alessandrini_pair: interior residual above 1e-3");
  const cplx a = bilinear(P1, v1, v2, pick(t.v1_on_gamma1), pick(t.v2_on_gamma1));
  const cplx b = bilinear(P2, v1, v2, pick(t.v1_on_gamma2), pick(t.v2_on_gamma2));
  return a - b;
}

PairingReport boundary_pairing(const LayerOperatorSet& ops1, const LayerOperatorSet& ops2, const BoundaryDensity& f1,
                               const BoundaryDensity& f2) {
  const Hypersurface& s = *ops1.surface;
  if (ops1.surface->hash() != ops2.surface->hash() || ops1.lambda != ops2.lambda)
    throw DomainError("boundary_pairing: operator sets on different boundaries");
  if (f1.size() != s.size() || f2.size() != s.size()) throw DomainError("boundary_pairing: density size mismatch");
  const Potential P1 = ops1.op ? ops1.op->potential() : Potential::zero(BoxGrid{});
  const Potential P2 = ops2.op ? ops2.op->potential() : Potential::zero(BoxGrid{});
  PairingReport rep;

  // volume path on the nodes the two bilinear forms read
  if (ops1.op || ops2.op) {
    const BoxGrid g = ops1.op ? P1.grid : P2.grid;
    if (ops1.op && ops2.op && !(P1.grid == P2.grid)) throw DomainError("boundary_pairing: grid mismatch");
    std::vector<bool> need(g.size(), false);
    for (const Potential* P : {&P1, &P2}) {
      if (P->empty()) continue;
      const Field m = grid_multiplier(*P);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (m[i] != 0.0 || (P->frac && P->frac->chi[i] != 0.0)) need[i] = true;
    }
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (need[i]) idx.push_back(i);
    Field v1(g), v2(g);
    if (!idx.empty()) {
      const auto a = eval_single_layer_on_grid(ops1, f1, g, idx);
      const auto b = eval_single_layer_on_grid(ops2, f2, g, idx);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        v1[idx[k]] = a[k];
        v2[idx[k]] = b[k];
      }
    }
    PairTraces t;
    if (P1.shell) {
      t.v1_on_gamma1 = layer_on_shell(ops1, f1, *P1.shell);
      t.v2_on_gamma1 = layer_on_shell(ops2, f2, *P1.shell);
    }
    if (P2.shell) {
      t.v1_on_gamma2 = layer_on_shell(ops1, f1, *P2.shell);
      t.v2_on_gamma2 = layer_on_shell(ops2, f2, *P2.shell);
    }
    const Potential Z1 = ops1.op ? P1 : Potential::zero(g);
    const Potential Z2 = ops2.op ? P2 : Potential::zero(g);
    rep.volume_value = alessandrini_pair(Z1, Z2, v1, v2, t);
  }

  const Eigen::VectorXcd d = (ops2.S - ops1.S) * Eigen::Map<const Eigen::VectorXcd>(f2.data(), static_cast<Eigen::Index>(f2.size()));
  cplx acc = 0.0;
  double l1a = 0, l1b = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    acc += s.weights[i] * f1[i] * d[static_cast<Eigen::Index>(i)];
    l1a += s.weights[i] * std::abs(f1[i]);
    l1b += s.weights[i] * std::abs(f2[i]);
  }
  rep.boundary_value = static_cast<double>(sigma) * acc;
  rep.discrepancy = std::abs(rep.volume_value - rep.boundary_value);
  const double den = std::max({std::abs(rep.volume_value), std::abs(rep.boundary_value), 1e-8 * l1a * l1b});
  rep.relative = rep.discrepancy == 0.0 ? 0.0 : rep.discrepancy / den;
  return rep;
}

FourierModeResult fourier_mode_via_cgo(const Potential& P, double lambda, const Vec3& kappa, double tau,
                                       const RemainderOptions& opt) {
  const auto [theta, eta] = cgo_frame(kappa);
  FourierModeResult r;
  r.pair = make_zeta_pair(lambda, kappa, tau, theta, eta);
  const BoxGrid& g = P.grid;
  if (P.empty()) return r;
  const auto sol = solve_remainder(r.pair, 1, P, opt);
  r.pair = sol.pair;
  r.iterations = sol.iterations;
  r.w1_l2 = sol.w.l2();
  Field ek(g), one(g), onew(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    ek[i] = std::polar(1.0, -dot(kappa, g.point(i)));
    one[i] = 1.0;
    onew[i] = 1.0 + sol.w[i];
  }
  std::vector<cplx> te, t1, tw;
  if (P.shell) {
    const auto& y = P.shell->gamma->nodes;
    const auto wy = sol.w_at(y);
    te.resize(y.size());
    t1.assign(y.size(), 1.0);
    tw.resize(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) {
      te[j] = std::polar(1.0, -dot(kappa, y[j]));
      tw[j] = 1.0 + wy[j];
    }
  }
  r.estimate = bilinear(P, onew, ek, pick(tw), pick(te));
  r.truth = bilinear(P, one, ek, pick(t1), pick(te));
  r.abs_error = std::abs(r.estimate - r.truth);
  r.error = std::abs(r.truth) > 0.0 ? r.abs_error / std::abs(r.truth) : r.abs_error;
  return r;
}

std::vector<DecaySweepRow> decay_sweep(const Potential& P, double lambda, const Vec3& kappa,
                                       const std::vector<double>& taus, const RemainderOptions& opt) {
  std::vector<DecaySweepRow> rows(taus.size());
  parallel_for(taus.size(), [&](std::size_t k) {
    const auto m = fourier_mode_via_cgo(P, lambda, kappa, taus[k], opt);
    rows[k] = {taus[k], m.abs_error, m.w1_l2, m.error, m.estimate, m.truth, m.iterations};
  });
  return rows;
}

void write_decay_sweep_csv(const std::string& path, const std::vector<DecaySweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("write_decay_sweep_csv: cannot open " + path);
  out << "tau,abs_error,w1_l2,rel_error,estimate_re,estimate_im,truth_re,truth_im,iterations\n"
      << std::setprecision(17);
  for (const auto& r : rows)
    out << r.tau << ',' << r.abs_error << ',' << r.w1_l2 << ',' << r.rel_error << ',' << r.estimate.real() << ','
        << r.estimate.imag() << ',' << r.truth.real() << ',' << r.truth.imag() << ',' << r.iterations << '\n';
}

RecoveryResult kappa_grid_recovery(const Potential& P, double lambda, double tau, int modes,
                                   const RemainderOptions& opt) {
  if (modes < 2 || (modes & (modes - 1)) != 0) throw DomainError("kappa_grid_recovery: modes must be a power of two");
  const double L = P.grid.L;
  const BoxGrid cg = BoxGrid::make(3, L, modes);
  RecoveryResult res;
  res.rows.resize(cg.size());
  parallel_for(cg.size(), [&](std::size_t k) {
    const Vec3 kappa = cg.frequency(k);
    const auto m = fourier_mode_via_cgo(P, lambda, kappa, tau, opt);
    res.rows[k] = {kappa, m.truth, m.estimate, m.error, m.abs_error};
  });
  // V(x) ~ (2L)^{-3} sum_kappa V^(kappa) e^{i kappa.x}
  const double vol = std::pow(2.0 * L, 3);
  res.reconstruction = Field(cg);
  res.truth_reconstruction = Field(cg);
  for (std::size_t i = 0; i < cg.size(); ++i) {
    const Vec3 x = cg.point(i);
    cplx a = 0.0, b = 0.0;
    for (const auto& r : res.rows) {
      const cplx e = std::polar(1.0, dot(r.kappa, x));
      a += r.estimate * e;
      b += r.truth * e;
    }
    res.reconstruction[i] = a / vol;
    res.truth_reconstruction[i] = b / vol;
  }
  const double tn = res.truth_reconstruction.l2();
  res.reconstruction_error = tn > 0.0 ? (res.reconstruction - res.truth_reconstruction).l2() / tn : 0.0;
  return res;
}

void write_recovery_csv(const std::string& path, const std::vector<RecoveryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("write_recovery_csv: cannot open " + path);
  out << "kappa_x,kappa_y,kappa_z,truth_re,truth_im,estimate_re,estimate_im,rel_error,abs_error\n"
      << std::setprecision(17);
  for (const auto& r : rows)
    out << r.kappa[0] << ',' << r.kappa[1] << ',' << r.kappa[2] << ',' << r.truth.real() << ',' << r.truth.imag() << ','
        << r.estimate.real() << ',' << r.estimate.imag() << ',' << r.error << ',' << r.abs_error << '\n';
}

}  // namespace ssct
