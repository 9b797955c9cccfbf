#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "ssct/cgo.hpp"
#include "ssct/rng.hpp"

using namespace ssct;

namespace {

Potential default_gaussian(int n) { return make_gaussian_potential(BoxGrid::make(3, 1.0, n), 5.0, {0, 0, 0}, 0.25, 0.5); }

// 8th-order central Laplacian at interior node i
cplx fd8_laplacian(const Field& f, std::size_t i) {
  static const double c8[5] = {-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};
  const BoxGrid& g = f.grid;
  const auto c = g.index3(i);
  cplx lap = 0.0;
  for (int a = 0; a < 3; ++a) {
    lap += c8[0] * f[i];
    for (int k = 1; k <= 4; ++k) {
      auto p = c, m = c;
      p[a] += k;
      m[a] -= k;
      lap += c8[k] * (f[g.linear(p[0], p[1], p[2])] + f[g.linear(m[0], m[1], m[2])]);
    }
  }
  return lap / (g.h() * g.h());
}

}  // namespace

TEST_CASE("zeta pair: worked example and degenerate kappa") {
  const auto p = make_zeta_pair(1.0, {1, 0, 0}, 2.0, {0, 0, 1}, {0, 1, 0});
  CHECK(std::abs(p.zeta1[0] - cplx(0, -0.5)) < 1e-15);
  CHECK(std::abs(p.zeta1[1] - cplx(0, 2.1794494717)) < 1e-10);
  CHECK(std::abs(p.zeta1[2] - cplx(2, 0)) < 1e-15);
  CHECK(std::abs(cdot(p.zeta1, p.zeta1) + 1.0) < 1e-14);
  CHECK(std::abs(p.zeta1[0] + p.zeta2[0] - cplx(0, -1)) < 1e-15);
  CHECK(pair_invariants(p).max() < 1e-14);
  // harmonic cross-check: p_zeta(0) = zeta.zeta = -lambda, and the remainder symbol drops zeta.zeta
  CHECK(std::abs(p_zeta(p.zeta1, {0, 0, 0}) + 1.0) < 1e-14);
  CHECK(std::abs(p_zeta(p.zeta1, {1, 0, 0}) - cplx(-1.0)) < 1e-14);
  CHECK(std::abs(remainder_symbol(p.zeta1, {0.3, -1, 2}) - (p_zeta(p.zeta1, {0.3, -1, 2}) + 1.0)) < 1e-13);

  const auto q = make_zeta_pair(1.0, {0, 0, 0}, 3.0, {0, 0, 1}, {0, 1, 0});
  for (int a = 0; a < 3; ++a) CHECK(q.zeta2[a] == -q.zeta1[a]);

  CHECK_THROWS_AS(make_zeta_pair(1.0, {10, 0, 0}, 1.0, {0, 0, 1}, {0, 1, 0}), DomainError);
  CHECK_THROWS_AS(make_zeta_pair(1.0, {1, 0, 0}, 2.0, {0, 0, 1}, {0, 0.6, 0.8}), DomainError);
  CHECK_THROWS_AS(make_zeta_pair(1.0, {1, 0, 0}, 2.0, {0, 0, 1.1}, {0, 1, 0}), DomainError);
}

TEST_CASE("zeta pair invariants over random draws") {
  // tau <= 32: absolute; up to 64 the double representation of zeta limits zeta.zeta to ~eps |zeta|^2
  Rng rng(11);
  double worst = 0, worst_rel = 0;
  for (int k = 0; k < 1000; ++k) {
    const double lambda = rng.uniform(0.1, 20.0);
    const Vec3 kappa{rng.normal() * 5, rng.normal() * 5, rng.normal() * 5};
    const double tau = rng.uniform(std::max(0.5, 0.5 * norm(kappa)), 32.0);
    const auto [theta, eta] = cgo_frame(kappa);
    worst = std::max(worst, pair_invariants(make_zeta_pair(lambda, kappa, tau, theta, eta)).max());
    const auto p = make_zeta_pair(lambda, kappa, 2 * tau, theta, eta);
    double z2 = 0;
    for (auto c : p.zeta1) z2 += std::norm(c);
    worst_rel = std::max(worst_rel, pair_invariants(p).max() / std::max(1.0, z2));
  }
  CHECK(worst <= 1e-12);
  CHECK(worst_rel <= 1e-15);
}

TEST_CASE("cgo frame") {
  for (const Vec3& k : {Vec3{2 * pi, 0, 0}, Vec3{1, 2, 0}, Vec3{1, -2, 3}, Vec3{0, 0, 0}}) {
    const auto [t, e] = cgo_frame(k);
    CHECK(std::abs(norm(t) - 1) < 1e-15);
    CHECK(std::abs(norm(e) - 1) < 1e-15);
    CHECK(std::abs(dot(t, e)) < 1e-15);
    CHECK(std::abs(dot(t, k)) < 1e-14);
    CHECK(std::abs(dot(e, k)) < 1e-14);
  }
  const auto [t, e] = cgo_frame({2 * pi, 0, 0});
  CHECK(t == Vec3{0, 0, 1});
  CHECK(e == Vec3{0, 1, 0});
}

TEST_CASE("remainder: zero potential and a single shifted-lattice mode") {
  const auto pair = make_zeta_pair(1.0, {1, 0, 0}, 2.0, {0, 0, 1}, {0, 1, 0});
  const auto s0 = solve_remainder(pair, 1, Potential::zero(BoxGrid::make(3, 1.0, 16)));
  CHECK(s0.iterations == 1);
  CHECK(s0.w.is_zero());
  CHECK(s0.converged);

  // V = c e^{i (kappa0 + beta).x}, beta = pi/(2L) e_z; first iterate c e^{i xi.x} / q(xi), xi = kappa0 + beta
  const BoxGrid g = BoxGrid::make(3, 1.0, 16);
  const Vec3 xi{pi, 2 * pi, pi / 2};
  const cplx c(0.3, -0.2);
  const Field V = Field::from_function(g, [&](const Vec3& x) { return c * std::polar(1.0, dot(xi, x)); });
  RemainderOptions opt;
  opt.max_iter = 1;
  opt.throw_on_stall = false;
  const auto s1 = solve_remainder(pair, 1, V, opt);
  CHECK(s1.shift == Vec3{0, 0, pi / 2});
  // q = -|xi|^2 + 2i zeta.xi with zeta.xi = pi + i(2 pi r - pi/2), r = 2.1794494717...
  const double r = std::sqrt(4.75);
  const cplx q(-5.25 * pi * pi - 4 * pi * r + pi, 2 * pi);
  double err = 0;
  for (std::size_t i = 0; i < g.size(); ++i)
    err = std::max(err, std::abs(s1.w[i] - c * std::polar(1.0, dot(xi, g.point(i))) / q));
  CHECK(err <= 1e-14 * std::abs(c / q) * 10);
}

TEST_CASE("remainder: Gaussian decay over a tau ladder") {
  const auto P = default_gaussian(32);
  const Vec3 kappa{2 * pi, 0, 0};
  const auto rows = remainder_decay(P, 1.0, kappa, {8, 16, 32});
  REQUIRE(rows.size() == 3);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    CHECK(rows[k].w1 <= rows[k - 1].w1);
    CHECK(rows[k].w2 <= rows[k - 1].w2);
    CHECK(rows[k].contraction < rows[k - 1].contraction);
  }
  for (const auto& r : rows) CHECK(r.residual <= 1e-10);
  const std::string path = "/tmp/ssct_decay.csv";
  write_decay_csv(path, rows);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "tau,w1_l2,w2_l2,iterations,residual,contraction");
}

TEST_CASE("remainder: small tau diverges") {
  const auto P = make_gaussian_potential(BoxGrid::make(3, 1.0, 16), 400.0, {0, 0, 0}, 0.25, 0.5);
  const auto pair = make_zeta_pair(1.0, {0, 0, 0}, 0.5, {0, 0, 1}, {0, 1, 0});
  CHECK_THROWS_AS(solve_remainder(pair, 1, P), ConvergenceError);
}

TEST_CASE("CGO solution satisfies the equation on the interior") {
  const auto P = default_gaussian(64);
  const auto pair = make_zeta_pair(1.0, {2 * pi, 0, 0}, 4.0, {0, 0, 1}, {0, 1, 0});
  const auto sol = solve_remainder(pair, 1, P);
  const Field v = cgo_evaluate_grid(sol);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (norm(v.grid.point(i)) > 0.6) continue;
    const cplx res = fd8_laplacian(v, i) + 1.0 * v[i] - (*P.v0)[i] * v[i];
    num += std::norm(res);
    den += std::max(std::norm(v[i]), std::norm((*P.v0)[i] * v[i]));
  }
  CHECK(std::sqrt(num / den) <= 1e-3);
  // point evaluation agrees with the grid values
  const auto g = v.grid;
  const std::size_t idx = g.linear(40, 29, 35);
  CHECK(std::abs(cgo_evaluate(sol, {g.point(idx)})[0] - v[idx]) <= 1e-10 * std::abs(v[idx]));
}

TEST_CASE("cgo_evaluate: pure oscillation, product structure, overflow guard") {
  const BoxGrid g = BoxGrid::make(3, 1.0, 16);
  CgoSolution osc;
  osc.zeta = {cplx(0, 1.5), cplx(0, -0.5), cplx(0, 2)};
  osc.w = Field(g);
  osc.w_periodic = Field(g);
  for (const auto& v : cgo_evaluate(osc, {{0.1, 0.2, 0.3}, {-0.7, 0.4, 0.9}})) CHECK(std::abs(std::abs(v) - 1.0) < 1e-15);

  const auto P = default_gaussian(32);
  const Vec3 kappa{2 * pi, 0, 0};
  const auto [theta, eta] = cgo_frame(kappa);
  const auto pair = make_zeta_pair(1.0, kappa, 16.0, theta, eta);
  const auto s1 = solve_remainder(pair, 1, P), s2 = solve_remainder(pair, 2, P);
  const std::vector<Vec3> pts{{0.1, -0.2, 0.3}, {0.45, 0.1, -0.2}, {-0.3, -0.3, 0.1}};
  const auto v1 = cgo_evaluate(s1, pts), v2 = cgo_evaluate(s2, pts);
  const auto w1 = s1.w_at(pts), w2 = s2.w_at(pts);
  const double bound = (1 + s1.w.max_abs()) * (1 + s2.w.max_abs());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const cplx expect = std::polar(1.0, -dot(kappa, pts[k])) * (1.0 + w1[k]) * (1.0 + w2[k]);
    CHECK(std::abs(v1[k] * v2[k] - expect) <= 1e-12 * std::abs(expect));
    CHECK(std::abs(v1[k] * v2[k]) <= bound * (1 + 1e-12));
  }

  CgoSolution big = osc;
  big.zeta = {cplx(1000, 0), 0.0, 0.0};
  CHECK_THROWS_AS(cgo_evaluate(big, {{0.7, 0, 0}}), OverflowGuardError);
  CHECK_NOTHROW(cgo_evaluate(big, {{0.5, 0, 0}}));
}

TEST_CASE("shell-only potential: remainder decay is finite and nonincreasing") {
  const BoxGrid g = BoxGrid::make(3, 2.0, 32);
  const auto P = make_shell_potential(g, {0, 0, 0}, 1.0, 16, 1.0);
  const auto rows = remainder_decay(P, 1.0, {pi, 0, 0}, {8, 16, 32});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(std::isfinite(rows[k].w1));
    CHECK(rows[k].w1 > 0);
    if (k > 0) CHECK(rows[k].w1 <= rows[k - 1].w1 * 1.1);
  }
}

TEST_CASE("Carleman ratios: finite, seed-stable, no blow-up in tau") {
  const BoxGrid g = BoxGrid::make(3, 1.0, 32);
  const auto P = default_gaussian(32);
  const Vec3 kappa{2 * pi, 0, 0};
  const auto [theta, eta] = cgo_frame(kappa);
  const auto suite = carleman_suite(g, 100, 7, 1.0);
  const auto r32 = carleman_check(suite, make_zeta_pair(1.0, kappa, 32, theta, eta).zeta1, 1.0, P, 4.0, 1.0);
  const auto r64 = carleman_check(suite, make_zeta_pair(1.0, kappa, 64, theta, eta).zeta1, 1.0, P, 4.0, 1.0);
  CHECK(r32.stats.finite);
  CHECK(r64.stats.finite);
  CHECK(r32.stats.max > 0);
  CHECK(r64.stats.max <= 1.5 * r32.stats.max);
  const auto other = carleman_check(carleman_suite(g, 100, 8, 1.0), make_zeta_pair(1.0, kappa, 32, theta, eta).zeta1, 1.0,
                                    P, 4.0, 1.0);
  CHECK(std::abs(other.stats.max / r32.stats.max - 1.0) <= 0.3);
  // embedding bound on every suite member
  for (const auto& u : suite) CHECK(embedding_check(u, make_zeta_pair(1.0, kappa, 32, theta, eta).zeta1, 4.0).holds());
  CHECK_THROWS_AS(carleman_check({Field(g)}, CVec3{r32.tau, 0.0, 0.0}, 1.0, P, 4.0, 1.0), DomainError);
}

TEST_CASE("Carleman conjugation agrees with explicit weights") {
  // e^{phi} (Delta + lambda)(e^{-phi} u) against 8th-order differences of the weighted field; the
  // mismatch is the difference truncation error and must fall at high order under refinement
  auto mismatch = [](int n) {
    const BoxGrid g = BoxGrid::make(3, 1.0, n);
    const Field u = gaussian_field(g, 1.0, {0.05, 0, 0}, 0.15, 0.6);
    const CVec3 zeta{cplx(0, 0.5), cplx(0, 0.3), cplx(1.5, 0)};
    const double M = 2.0, lambda = 1.0;
    const auto b = carleman_conjugate(u, zeta, lambda, Potential::zero(g), M);
    Field ew(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec3 x = g.point(i);
      ew[i] = std::exp(-(0.5 * M * x[2] * x[2] + cdot(zeta, x))) * u[i];
    }
    double num = 0, den = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec3 x = g.point(i);
      if (norm(x) > 0.7) continue;
      const cplx ref = std::exp(0.5 * M * x[2] * x[2] + cdot(zeta, x)) * (fd8_laplacian(ew, i) + lambda * ew[i]);
      num += std::norm(ref - b.grid[i]);
      den += std::norm(ref);
    }
    return std::sqrt(num / den);
  };
  const double e32 = mismatch(32), e64 = mismatch(64);
  CHECK(e64 <= 1e-4);
  CHECK(std::log2(e32 / e64) >= 5.0);
}
