#include <sstream>

#include "doctest.h"
#include "ssct/geometry.hpp"

using namespace ssct;

TEST_CASE("box grid lattice") {
  const auto g = BoxGrid::make(3, 2.0, 16);
  CHECK(g.h() * g.n == doctest::Approx(4.0));
  CHECK(g.size() == 4096);
  CHECK(g.xi(8) == doctest::Approx(-8 * pi / 2.0));
  CHECK(g.linear(3, 4, 5) == (3 * 16 + 4) * 16 + 5);
  CHECK(g.index3(g.linear(3, 4, 5)) == std::array<int, 3>{3, 4, 5});
  CHECK_THROWS_AS(BoxGrid::make(3, 1.0, 12), DomainError);
}

TEST_CASE("sphere area and closure") {
  const auto s = make_sphere({0, 0, 0}, 1.0, 64);
  CHECK(s.area() == doctest::Approx(4 * pi).epsilon(1e-4 / (4 * pi)));
  CHECK(make_sphere({0, 0, 0}, 2.0, 64).area() == doctest::Approx(16 * pi).epsilon(4e-4 / (16 * pi)));
  Vec3 acc{0, 0, 0};
  double flux = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    acc = acc + s.weights[i] * s.normals[i];
    flux += s.weights[i] * dot(s.nodes[i], s.normals[i]);
  }
  CHECK(norm(acc) <= 1e-8 * s.area());
  CHECK(flux == doctest::Approx(4 * pi).epsilon(1e-3));
  CHECK_NOTHROW(s.validate());
  CHECK_THROWS_AS(make_sphere({0, 0, 0}, 0.0, 64), DomainError);
}

TEST_CASE("ellipsoid volume by divergence theorem") {
  const auto s = make_ellipsoid({0.1, 0, 0}, {1.0, 0.7, 0.5}, 48);
  double flux = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) flux += s.weights[i] * dot(s.nodes[i] - Vec3{0.1, 0, 0}, s.normals[i]);
  CHECK(flux / 3.0 == doctest::Approx(4.0 / 3.0 * pi * 0.35).epsilon(1e-10));
}

TEST_CASE("graph patch area") {
  // plane z = x + y: area factor sqrt(3)
  const auto s = make_graph_patch([](double x, double y) { return x + y; },
                                  [](double, double) { return std::array<double, 2>{1.0, 1.0}; }, 0, 1, 0, 2, 6);
  CHECK(s.area() == doctest::Approx(2 * std::sqrt(3.0)));
  CHECK_FALSE(s.closed);
}

TEST_CASE("patch selection") {
  const auto s = make_sphere({0, 0, 0}, 1.0, 64);
  CHECK(select_patch(s, PatchSelector::all()).size() == s.size());
  auto area = [&](const std::vector<std::size_t>& idx) {
    double a = 0;
    for (auto i : idx) a += s.weights[i];
    return a;
  };
  const auto hemi = select_patch(s, PatchSelector::cap({0, 0, 0}, {0, 0, 1}, pi / 2));
  CHECK(std::abs(area(hemi) - 2 * pi) < 1e-2);
  const auto cap = select_patch(s, PatchSelector::cap({0, 0, 0}, {0, 0, 1}, 0.3));
  CHECK(select_patch(s, PatchSelector::cap({0, 0, 0}, {0, 0, 1}, 0.3)) == cap);
  // node subsets have a ring-staircase area error of order the ring spacing
  const auto fine = make_sphere({0, 0, 0}, 1.0, 256);
  double a = 0;
  for (auto i : select_patch(fine, PatchSelector::cap({0, 0, 0}, {0, 0, 1}, 0.3))) a += fine.weights[i];
  CHECK(std::abs(a - 2 * pi * (1 - std::cos(0.3))) < 1e-2);
  CHECK_THROWS_AS(select_patch(s, PatchSelector::cap({0, 0, 0}, {0, 0, 1}, 0.01)), EmptySelectionError);
}

TEST_CASE("surface CSV round trip is bit exact") {
  const auto s = make_sphere({0.1, -0.2, 0.3}, 0.8, 16);
  std::stringstream ss;
  write_surface_csv(s, ss);
  const auto t = read_surface_csv(ss);
  REQUIRE(t.size() == s.size());
  CHECK(t.nodes == s.nodes);
  CHECK(t.weights == s.weights);
  CHECK(t.normals == s.normals);
}

TEST_CASE("spherical transform reproduces band-limited functions") {
  const auto s = make_sphere({0, 0, 0}, 1.0, 24);
  SphericalTransform T(*s.sphere);
  // f = x y + z^3 is degree 3
  std::vector<cplx> f(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& x = s.nodes[i];
    f[i] = x[0] * x[1] + x[2] * x[2] * x[2] + I * x[0];
  }
  const auto a = T.analyze(f);
  for (int l = 4; l <= T.degree(); ++l)
    for (int m = -l; m <= l; ++m) CHECK(std::abs(a[SphericalTransform::index(l, m)]) < 1e-13);
  const double th = 0.77, ph = 2.1;
  const Vec3 x{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
  CHECK(std::abs(T.synthesize(a, th, ph) - (x[0] * x[1] + x[2] * x[2] * x[2] + I * x[0])) < 1e-13);
  const auto fine = LatLong::make({0, 0, 0}, 1.0, 20, 40);
  const auto v = T.synthesize_grid(a, fine);
  const auto& ff = fine;
  const double t2 = ff.theta[3], p2 = ff.phi(7);
  CHECK(std::abs(v[ff.node(3, 7)] - T.synthesize(a, t2, p2)) < 1e-13);
}
