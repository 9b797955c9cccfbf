#include "doctest.h"
#include "ssct/layers.hpp"
#include "ssct/rng.hpp"
#include "ssct/specfun.hpp"

#include <fstream>

#include "json.hpp"

using namespace ssct;

namespace {

SurfacePtr unit_sphere(int res) { return std::make_shared<const Hypersurface>(make_sphere({0, 0, 0}, 1.0, res)); }

std::vector<cplx> random_density(Rng& rng, std::size_t n) {
  std::vector<cplx> f(n);
  for (auto& v : f) v = cplx(rng.normal(), rng.normal());
  return f;
}

cplx wpair(const Hypersurface& s, const Eigen::VectorXcd& a, const std::vector<cplx>& b) {
  cplx acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += s.weights[i] * a[static_cast<Eigen::Index>(i)] * b[i];
  return acc;
}

Eigen::VectorXcd vec(const std::vector<cplx>& v) { return Eigen::Map<const Eigen::VectorXcd>(v.data(), static_cast<Eigen::Index>(v.size())); }

double l2(const std::vector<cplx>& v) {
  double s = 0;
  for (auto x : v) s += std::norm(x);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("free layers: center oracle and symmetry") {
  const auto s = unit_sphere(24);
  const auto ops = assemble_layers(1.0, Potential::zero(BoxGrid::make(3, 2.0, 16)), s);
  CHECK(ops.S_sc.size() == 0);
  const std::vector<cplx> one(s->size(), 1.0);
  CHECK(std::abs(eval_single_layer(ops, one, {{0, 0, 0}})[0] - double(sigma) * std::exp(I)) < 1e-3);
  CHECK(eval_single_layer(ops, std::vector<cplx>(s->size(), 0.0), {{0.2, 0, 0}})[0] == 0.0);
  Rng rng(4);
  const auto f = random_density(rng, s->size()), g = random_density(rng, s->size());
  const cplx a = wpair(*s, ops.S * vec(f), g), b = wpair(*s, ops.S * vec(g), f);
  double fn = 0, gn = 0;
  for (std::size_t i = 0; i < s->size(); ++i) {
    fn += s->weights[i] * std::norm(f[i]);
    gn += s->weights[i] * std::norm(g[i]);
  }
  CHECK(std::abs(a - b) <= 1e-8 * std::sqrt(fn * gn));
  CHECK_THROWS_AS(eval_single_layer(ops, one, {{1.0, 0, 0}}), DomainError);
}

TEST_CASE("layers with a potential: symmetry and transpose pattern") {
  const auto g = BoxGrid::make(3, 2.0, 32);
  const auto P = make_gaussian_potential(g, 3.0, {0.05, 0, 0}, 0.15, 0.45);
  const auto s = unit_sphere(16);
  const auto ops = assemble_layers(2.0, P, s);
  REQUIRE(ops.op);
  const auto n = static_cast<Eigen::Index>(s->size());
  double asym = 0, pat = 0, scale = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      asym = std::max(asym, std::abs(s->weights[i] * ops.S_sc(i, j) - s->weights[j] * ops.S_sc(j, i)));
      pat = std::max(pat, std::abs(ops.D_sc(i, j) / s->weights[j] - ops.N_sc(j, i) / s->weights[i]));
      scale = std::max(scale, std::abs(ops.N_sc(j, i) / s->weights[i]));
    }
  CHECK(asym <= 1e-12);
  CHECK(pat <= 1e-9 * scale);
  CHECK(ops.S.allFinite());
  CHECK(ops.N.allFinite());
  // boundary too close to the support
  const auto P2 = make_gaussian_potential(g, 3.0, {0.0, 0, 0}, 0.3, 0.95);
  CHECK_THROWS_AS(assemble_layers(2.0, P2, s), SupportError);
}

TEST_CASE("single layer off the surface solves the equation") {
  const auto g = BoxGrid::make(3, 2.0, 64);
  const auto P = make_gaussian_potential(g, 3.0, {0, 0, 0}, 0.15, 0.6);
  const auto s = unit_sphere(16);
  const auto ops = assemble_layers(2.0, P, s);
  Rng rng(9);
  const auto f = random_density(rng, s->size());
  // interior field on the grid: free part by direct sums, scattered part on the grid
  std::vector<std::size_t> idx;
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (norm(g.point(i)) <= 0.75) {
      idx.push_back(i);
      pts.push_back(g.point(i));
    }
  const auto free = surface_potential(2.0, 3, *s, f, pts);
  Eigen::VectorXcd wf(s->size());
  for (std::size_t j = 0; j < s->size(); ++j) wf[static_cast<Eigen::Index>(j)] = s->weights[j] * f[j];
  const Field sc = ops.op->scattered_grid(ops.table * wf);
  Field u(g);
  for (std::size_t k = 0; k < idx.size(); ++k) u[idx[k]] = free[k] + sc[idx[k]];
  // spectral Laplacian of the FFT part, 8th-order differences of the smooth free part on B_0.45
  Field fu(g);
  for (std::size_t k = 0; k < idx.size(); ++k) fu[idx[k]] = free[k];
  const Field lap_sc = spectral_laplacian(sc);
  const Field mult = grid_multiplier(P);
  const double h = g.h();
  const double c8[5] = {-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};
  double num = 0, den = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (norm(g.point(i)) > 0.45) continue;
    const auto c = g.index3(i);
    cplx lap = 0.0;
    for (int a = 0; a < 3; ++a) {
      lap += c8[0] * fu[i];
      for (int k = 1; k <= 4; ++k) {
        auto p = c, m = c;
        p[a] += k;
        m[a] -= k;
        lap += c8[k] * (fu[g.linear(p[0], p[1], p[2])] + fu[g.linear(m[0], m[1], m[2])]);
      }
    }
    lap /= h * h;
    num += std::norm(lap + lap_sc[i] + (2.0 - mult[i]) * u[i]);
    den += std::norm(2.0 * u[i]);
  }
  CHECK(std::sqrt(num / den) <= 1e-3);
}

TEST_CASE("jump relation for constant and smooth densities") {
  const auto P0 = Potential::zero(BoxGrid::make(3, 2.0, 16));
  double e32 = 0, e64 = 0;
  for (int res : {32, 64}) {
    const auto s = unit_sphere(res);
    const auto ops = assemble_layers(1.0, P0, s);
    const auto rep = jump_check(ops, std::vector<cplx>(s->size(), 1.0));
    (res == 32 ? e32 : e64) = rep.max_error;
  }
  CHECK(e64 <= 5e-2);
  CHECK(std::log2(e32 / e64) >= 1.0);
  const auto s = unit_sphere(32);
  const auto ops = assemble_layers(1.0, P0, s);
  std::vector<cplx> f(s->size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = s->nodes[i][0] * s->nodes[i][2] + 0.5 * I * s->nodes[i][1];
  CHECK(jump_check(ops, f).max_error <= 5e-2);
  CHECK(jump_check(ops, std::vector<cplx>(s->size(), 0.0)).max_error == 0.0);
}

TEST_CASE("jump relation with a potential") {
  const auto g = BoxGrid::make(3, 2.0, 32);
  const auto s = unit_sphere(24);
  const auto ops = assemble_layers(1.0, make_gaussian_potential(g, 3.0, {0, 0, 0}, 0.15, 0.45), s);
  CHECK(jump_check(ops, std::vector<cplx>(s->size(), 1.0)).max_error <= 5e-2);
}

TEST_CASE("Neumann: manufactured solution and trivial data") {
  const double lambda = 2.0;
  const auto s = unit_sphere(32);
  const auto ops = assemble_layers(lambda, Potential::zero(BoxGrid::make(3, 2.0, 16)), s);
  const Vec3 z{0.3, 0.4, 1.5};
  const Kernel K(lambda, 3);
  std::vector<cplx> gdat(s->size());
  for (std::size_t i = 0; i < s->size(); ++i) gdat[i] = cdot(K.gradient(s->nodes[i], z), s->normals[i]);
  const auto phi = neumann_density(ops, gdat);
  std::vector<Vec3> shell;
  const auto inner = make_sphere({0, 0, 0}, 0.6, 16);
  const auto u = eval_single_layer(ops, phi, inner.nodes);
  std::vector<cplx> diff(u.size()), ex(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    ex[i] = K.value(inner.nodes[i], z);
    diff[i] = u[i] - ex[i];
  }
  CHECK(l2(diff) <= 1e-2 * l2(ex));

  const auto g = BoxGrid::make(3, 2.0, 16);
  const auto res = neumann_solve(ops, Field(g));
  CHECK(res.u.is_zero());
}

TEST_CASE("Neumann: volume source with a potential") {
  const auto g = BoxGrid::make(3, 2.0, 64);
  const auto P = make_gaussian_potential(g, 2.0, {0, 0, 0}, 0.15, 0.6);
  const auto s = unit_sphere(32);
  const auto ops = assemble_layers(2.0, P, s);
  const Field f = gaussian_field(g, 1.0, {0.1, -0.1, 0.0}, 0.15, 0.5);
  const auto res = neumann_solve(ops, f);
  CHECK(res.flux_residual <= 1e-2);
  CHECK(res.interior_residual <= 1e-3);
  CHECK(res.condition < near_eigenvalue_condition);
}

TEST_CASE("Neumann: conditioning spike near an interior Neumann eigenvalue") {
  // j_1'(k) = 0 at k = 2.0815759778: lambda = 4.33296...
  const auto s = unit_sphere(16);
  const auto sw = neumann_condition_sweep(Potential::zero(BoxGrid::make(3, 2.0, 16)), s, 4.0, 4.7, 8);
  CHECK(sw.flagged);
  CHECK(sw.peak_lambda == doctest::Approx(2.0815759778 * 2.0815759778).epsilon(1e-4));
  CHECK(sw.conditions.front() < 1e3);
  CHECK(sw.conditions.back() < 1e3);
  const auto ops = assemble_layers(sw.peak_lambda, Potential::zero(BoxGrid::make(3, 2.0, 16)), s);
  CHECK_THROWS_AS(neumann_density(ops, std::vector<cplx>(s->size(), 1.0)), NearEigenvalueError);
}

TEST_CASE("Runge: representable target, zero target, empty Sigma") {
  const auto s = unit_sphere(24);
  const auto ops = assemble_layers(2.0, Potential::zero(BoxGrid::make(3, 2.0, 32)), s);
  const auto sig = select_patch(*s, PatchSelector::cap({0, 0, 0}, {0, 0, 1}, 1.0));
  const auto pts = ball_nodes(BoxGrid::make(3, 2.0, 32), {0, 0, 0}, 0.5);
  Rng rng(2);
  std::vector<cplx> f0(s->size(), 0.0);
  for (auto j : sig) f0[j] = cplx(rng.normal(), rng.normal());
  const auto target = eval_single_layer(ops, f0, pts);
  CHECK(runge_fit(ops, sig, pts, target, 1e-16).error <= 1e-6);
  const auto z = runge_fit(ops, sig, pts, std::vector<cplx>(pts.size(), 0.0), 1e-6);
  CHECK(l2(z.density) == 0.0);
  CHECK_THROWS_AS(runge_fit(ops, {}, pts, target), EmptySelectionError);
}

TEST_CASE("orthogonality identity with the corrected half term") {
  const auto g = BoxGrid::make(3, 2.0, 32);
  const auto s = unit_sphere(24);
  const Field v = gaussian_field(g, 1.0, {0.05, 0, -0.05}, 0.12, 0.4);
  Rng rng(7);
  std::vector<cplx> f(s->size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 1.0 + 0.5 * s->nodes[i][0] + I * s->nodes[i][1] * s->nodes[i][2];
  for (const auto& P : {Potential::zero(g), make_gaussian_potential(g, 3.0, {0, 0, 0}, 0.15, 0.45)}) {
    const auto ops = assemble_layers(1.5, P, s);
    const auto rep = orthogonality_check(ops, f, v);
    CHECK(rep.discrepancy <= 1e-2);
    // the uncorrected form misses (sigma/2)<f, phi>
    CHECK(std::abs(rep.uncorrected - rep.volume) > 10 * std::abs(rep.boundary - rep.volume));
  }
}

TEST_CASE("Runge: fundamental solution with a pole outside Omega") {
  const double lambda = 2.0;
  const auto s = unit_sphere(40);
  const auto ops = assemble_layers(lambda, Potential::zero(BoxGrid::make(3, 2.0, 32)), s);
  const auto pts = ball_nodes(BoxGrid::make(3, 2.0, 32), {0, 0, 0}, 0.5);
  const Vec3 z{0.0, 0.5, 1.6};
  const Kernel K(lambda, 3);
  std::vector<cplx> target(pts.size());
  for (std::size_t p = 0; p < pts.size(); ++p) target[p] = K.value(pts[p], z);
  double prev = 1e300;
  for (double ang : {0.5, 0.75, 1.0}) {
    const auto sig = select_patch(*s, PatchSelector::cap({0, 0, 0}, {0, 0, 1}, ang));
    const auto rep = runge_fit(ops, sig, pts, target);
    // the error for a larger patch cannot exceed the error for a smaller one at fixed reg
    CHECK(rep.error <= prev * (1.0 + 1e-9));
    prev = rep.error;
    if (ang == 1.0) {
      CHECK(rep.dof >= 200);
      CHECK(rep.error <= 5e-2);
      CHECK(rep.lcurve.size() == 7);
    }
  }
}

TEST_CASE("layer export round trip") {
  const auto s = unit_sphere(8);
  const auto ops = assemble_layers(1.0, Potential::zero(BoxGrid::make(3, 2.0, 16)), s);
  const std::string base = "/tmp/ssct_layers_rt";
  export_layers(ops, base);
  std::ifstream in(base + ".bin", std::ios::binary);
  const auto n = static_cast<Eigen::Index>(s->size());
  std::vector<double> buf(static_cast<std::size_t>(3 * n * n * 2));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
  REQUIRE(in.gcount() == static_cast<std::streamsize>(buf.size() * sizeof(double)));
  CHECK(in.peek() == std::char_traits<char>::eof());
  const Eigen::Index i = 3, j = n - 2;
  const std::size_t offN = static_cast<std::size_t>(n * n * 2), k = static_cast<std::size_t>((i * n + j) * 2);
  CHECK(buf[k] == ops.S(i, j).real());
  CHECK(buf[offN + k + 1] == ops.N(i, j).imag());
  std::ifstream js(base + ".json");
  const auto meta = nlohmann::json::parse(js);
  CHECK(meta["rows"].get<Eigen::Index>() == n);
  CHECK(meta["lambda"].get<double>() == 1.0);
}
