#include <fstream>

#include "doctest.h"
#include "ssct/inverse.hpp"
#include "ssct/rng.hpp"

using namespace ssct;

namespace {

Potential default_gaussian(int n) { return make_gaussian_potential(BoxGrid::make(3, 1.0, n), 5.0, {0, 0, 0}, 0.25, 0.5); }

std::vector<cplx> cap_density(const Hypersurface& s, Rng& rng) {
  Vec3 axis{rng.normal(), rng.normal(), rng.normal()};
  axis = (1.0 / norm(axis)) * axis;
  const auto idx = select_patch(s, PatchSelector::cap({0, 0, 0}, axis, rng.uniform(0.6, 1.4)));
  std::vector<cplx> f(s.size(), 0.0);
  for (auto j : idx) f[j] = cplx(rng.normal(), rng.normal());
  return f;
}

}  // namespace

TEST_CASE("alessandrini pairing: cancellation, antisymmetry, residual guard") {
  const BoxGrid g = BoxGrid::make(3, 1.0, 16);
  const auto P = make_gaussian_potential(g, 2.0, {0, 0, 0}, 0.2, 0.45);
  Rng rng(3);
  Field v1(g), v2(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    v1[i] = cplx(rng.normal(), rng.normal());
    v2[i] = cplx(rng.normal(), rng.normal());
  }
  CHECK(alessandrini_pair(P, P, v1, v2) == 0.0);
  CHECK(alessandrini_pair(P, Potential::zero(g), Field(g), v2) == 0.0);
  const auto Q = make_gaussian_potential(g, -1.0, {0.1, 0, 0}, 0.15, 0.3);
  CHECK(alessandrini_pair(P, Q, v1, v2) == -alessandrini_pair(Q, P, v1, v2));
  CHECK_THROWS_AS(alessandrini_pair(P, Q, v1, v2, {}, 2e-3, 0.0), ResidualError);
}

TEST_CASE("alessandrini pairing of lattice plane waves") {
  // |k|^2 = lambda on the lattice: k = pi e_x with L = 1
  const BoxGrid g = BoxGrid::make(3, 1.0, 32);
  const auto P = default_gaussian(32);
  const Vec3 k1{pi, 0, 0}, k2{0, 0, -pi};
  const Field v1 = Field::from_function(g, [&](const Vec3& x) { return std::polar(1.0, dot(k1, x)); });
  const Field v2 = Field::from_function(g, [&](const Vec3& x) { return std::polar(1.0, dot(k2, x)); });
  cplx oracle = 0.0;
  const double h3 = std::pow(g.h(), 3);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3 x = g.point(i);
    const double r = norm(x);
    if (r >= 0.5) continue;
    const double taper = r <= 0.35 ? 1.0 : smooth_cutoff(r, 0.35, 0.5);
    oracle += h3 * 5.0 * std::exp(-r * r / 0.0625) * taper * std::polar(1.0, dot(k1 + k2, x));
  }
  const cplx val = alessandrini_pair(P, Potential::zero(g), v1, v2);
  CHECK(std::abs(val - oracle) <= 1e-6 * std::abs(oracle));
}

TEST_CASE("dual-path pairing: identical potentials and zero densities") {
  const BoxGrid g = BoxGrid::make(3, 2.0, 32);
  const auto P = make_gaussian_potential(g, 3.0, {0, 0, 0}, 0.15, 0.45);
  const auto s = std::make_shared<const Hypersurface>(make_sphere({0, 0, 0}, 1.0, 16));
  const auto ops = assemble_layers(1.0, P, s);
  Rng rng(5);
  const auto f1 = cap_density(*s, rng), f2 = cap_density(*s, rng);
  const auto same = boundary_pairing(ops, ops, f1, f2);
  CHECK(same.boundary_value == 0.0);
  CHECK(same.volume_value == 0.0);
  const auto zero = boundary_pairing(ops, ops, std::vector<cplx>(s->size(), 0.0), f2);
  CHECK(zero.boundary_value == 0.0);
  CHECK(zero.volume_value == 0.0);
  CHECK(zero.relative == 0.0);
  const auto other = assemble_layers(1.0, P, std::make_shared<const Hypersurface>(make_sphere({0, 0, 0}, 1.0, 12)));
  CHECK_THROWS_AS(boundary_pairing(ops, other, std::vector<cplx>(s->size(), 0.0), f2), DomainError);
}

TEST_CASE("dual-path pairing: Gaussian against zero over random caps") {
  const BoxGrid g = BoxGrid::make(3, 2.0, 32);
  const auto P = make_gaussian_potential(g, 3.0, {0.05, 0, 0}, 0.15, 0.45);
  const auto s = std::make_shared<const Hypersurface>(make_sphere({0, 0, 0}, 1.0, 16));
  const auto ops1 = assemble_layers(2.0, P, s);
  const auto ops2 = assemble_layers(2.0, Potential::zero(g), s);
  Rng rng(21);
  double worst = 0;
  for (int k = 0; k < 20; ++k) {
    const auto f1 = cap_density(*s, rng), f2 = cap_density(*s, rng);
    const auto r = boundary_pairing(ops1, ops2, f1, f2);
    CHECK(std::abs(r.volume_value) > 0);
    worst = std::max(worst, r.relative);
  }
  CHECK(worst <= 1e-2);
}

TEST_CASE("dual-path pairing with shell and fractional parts") {
  const BoxGrid g = BoxGrid::make(3, 2.0, 32);
  const auto s = std::make_shared<const Hypersurface>(make_sphere({0, 0, 0}, 1.0, 16));
  const auto shell = make_shell_potential(g, {0, 0, 0}, 0.4, 12, 1.5);
  const auto frac = make_fractional_potential(g, 0.75, gaussian_field(g, 1.0, {0, 0, 0}, 0.15, 0.4),
                                              gaussian_field(g, 1.0, {0, 0, 0}, 0.3, 0.45), 0.45);
  const auto ops0 = assemble_layers(1.0, Potential::zero(g), s);
  Rng rng(8);
  for (const auto* P : {&shell, &frac}) {
    const auto ops = assemble_layers(1.0, *P, s);
    const auto f1 = cap_density(*s, rng), f2 = cap_density(*s, rng);
    CHECK(boundary_pairing(ops, ops0, f1, f2).relative <= 1e-2);
    CHECK(boundary_pairing(ops0, ops, f1, f2).relative <= 1e-2);
  }
}

TEST_CASE("Fourier mode via CGO: trivial cases") {
  const BoxGrid g = BoxGrid::make(3, 1.0, 32);
  const auto z = fourier_mode_via_cgo(Potential::zero(g), 1.0, {2 * pi, 0, 0}, 16);
  CHECK(z.estimate == 0.0);
  CHECK(z.truth == 0.0);
  const auto P = default_gaussian(32);
  const auto m0 = fourier_mode_via_cgo(P, 1.0, {0, 0, 0}, 8);
  const auto m1 = fourier_mode_via_cgo(P, 1.0, {0, 0, 0}, 32);
  cplx mass = 0.0;
  for (auto v : P.v0->data) mass += v;
  mass *= g.cell_volume();
  CHECK(std::abs(m0.truth - mass) <= 1e-12 * std::abs(mass));
  CHECK(m1.error < m0.error);
}

TEST_CASE("Fourier mode via CGO: tau ladder on the default Gaussian") {
  const auto P = default_gaussian(32);
  const auto rows = decay_sweep(P, 1.0, {2 * pi, 0, 0}, {8, 16, 32, 64});
  double mass = 0;
  for (auto v : P.v0->data) mass += std::abs(v);
  mass *= P.grid.cell_volume();
  const double C = rows.front().abs_error / (rows.front().w1_l2 * mass);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k > 0) {
      CHECK(rows[k].abs_error <= 1.1 * rows[k - 1].abs_error);
      CHECK(rows[k].w1_l2 <= 1.1 * rows[k - 1].w1_l2);
      CHECK(rows[k].rel_error < rows[k - 1].rel_error);
    }
    CHECK(rows[k].abs_error <= C * rows[k].w1_l2 * mass * (1 + 1e-12));
  }
  CHECK(rows.back().rel_error <= 0.1);
  const std::string path = "/tmp/ssct_sweep.csv";
  write_decay_sweep_csv(path, rows);
  std::ifstream in(path);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  CHECK(n == 5);

  const auto zero = decay_sweep(Potential::zero(P.grid), 1.0, {2 * pi, 0, 0}, {8, 16});
  for (const auto& r : zero) {
    CHECK(r.abs_error == 0.0);
    CHECK(r.w1_l2 == 0.0);
  }
}

TEST_CASE("fractional potential: remainder is linear in g at first order") {
  const BoxGrid g = BoxGrid::make(3, 1.0, 32);
  const Field chi = gaussian_field(g, 1.0, {0, 0, 0}, 0.3, 0.45);
  auto w1 = [&](double amp) {
    const auto P = make_fractional_potential(g, 0.75, gaussian_field(g, amp, {0, 0, 0}, 0.12, 0.4), chi, 0.45);
    return fourier_mode_via_cgo(P, 1.0, {2 * pi, 0, 0}, 16).w1_l2;
  };
  const double a = w1(0.5), b = w1(1.0);
  CHECK(b / a == doctest::Approx(2.0).epsilon(0.3));
}

TEST_CASE("kappa-grid recovery demo") {
  const auto P = default_gaussian(32);
  const auto r = kappa_grid_recovery(P, 1.0, 64.0, 4);
  CHECK(r.rows.size() == 64);
  CHECK(r.reconstruction.grid.n == 4);
  CHECK(r.reconstruction_error <= 1e-2);
  const std::string path = "/tmp/ssct_recovery.csv";
  write_recovery_csv(path, r.rows);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("kappa_x,", 0) == 0);
}
