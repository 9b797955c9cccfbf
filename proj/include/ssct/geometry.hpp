#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ssct/common.hpp"

namespace ssct {

struct BoxGrid {
  int d = 3;
  double L = 1.0;  // half-width
  int n = 32;      // points per axis, power of two

  static BoxGrid make(int d, double L, int n);
  double h() const { return 2.0 * L / n; }
  std::size_t size() const;
  double coord(int i) const { return -L + i * h(); }
  // integer frequency of FFT slot j; xi = (pi/L) * freq
  int freq(int j) const { return j < n / 2 ? j : j - n; }
  double xi(int j) const { return pi / L * freq(j); }
  Vec3 point(std::size_t idx) const;
  std::array<int, 3> index3(std::size_t idx) const;
  std::size_t linear(int i0, int i1, int i2) const;
  Vec3 frequency(std::size_t idx) const;
  double cell_volume() const;
  bool contains(const Vec3& x) const;
  bool operator==(const BoxGrid& o) const { return d == o.d && L == o.L && n == o.n; }
};

// Lat-long product rule on a sphere: ntheta Gauss-Legendre nodes in cos(theta), nphi = 2 ntheta azimuths.
struct LatLong {
  Vec3 center{0, 0, 0};
  double radius = 1.0;
  int ntheta = 0, nphi = 0;
  std::vector<double> theta;   // increasing
  std::vector<double> weight;  // Gauss-Legendre weight of each ring (in cos theta)
  std::size_t node(int ring, int col) const { return static_cast<std::size_t>(ring) * nphi + col; }
  double phi(int col) const { return 2.0 * pi * col / nphi; }
  static LatLong make(const Vec3& center, double radius, int ntheta, int nphi);
};

struct Hypersurface {
  int d = 3;
  std::vector<Vec3> nodes;
  std::vector<double> weights;
  std::vector<Vec3> normals;
  std::vector<int> patch_ids;
  bool closed = true;
  std::optional<LatLong> sphere;  // present for lat-long spheres (d = 3) and for circles (ntheta = 0)

  std::size_t size() const { return nodes.size(); }
  double area() const;
  // typical node spacing sqrt(area/N) (d = 3) or area/N (d = 2)
  double spacing() const;
  void validate() const;
  std::uint64_t hash() const;
};

using SurfacePtr = std::shared_ptr<const Hypersurface>;

Hypersurface make_sphere(const Vec3& center, double radius, int resolution, int d = 3);
Hypersurface make_ellipsoid(const Vec3& center, const Vec3& semi_axes, int resolution);
// graph z = f(x, y) over [a0,a1] x [b0,b1], open surface, normals (-f_x, -f_y, 1)/|.|
Hypersurface make_graph_patch(const std::function<double(double, double)>& f,
                              const std::function<std::array<double, 2>(double, double)>& grad_f,
                              double a0, double a1, double b0, double b1, int resolution);

struct PatchSelector {
  std::function<bool(const Vec3& node, const Vec3& normal)> predicate;
  static PatchSelector all();
  // nodes whose direction from center is within half_angle of axis
  static PatchSelector cap(const Vec3& center, const Vec3& axis, double half_angle);
};

std::vector<std::size_t> select_patch(const Hypersurface& s, const PatchSelector& sel);

void write_surface_csv(const Hypersurface& s, std::ostream& out);
Hypersurface read_surface_csv(std::istream& in, int d = 3, bool closed = true);

// Spherical harmonics on a lat-long sphere, band limit ntheta - 1.
// Basis B_lm = Pbar_l^|m|(cos theta) e^{i m phi}, orthonormal on the unit sphere, index l*l + l + m.
class SphericalTransform {
 public:
  explicit SphericalTransform(const LatLong& grid);
  int degree() const { return L_; }
  std::size_t ncoef() const { return static_cast<std::size_t>(L_ + 1) * (L_ + 1); }
  static std::size_t index(int l, int m) { return static_cast<std::size_t>(l * l + l + m); }

  std::vector<cplx> analyze(const std::vector<cplx>& nodal) const;
  cplx synthesize(const std::vector<cplx>& coef, double theta, double phi) const;
  // values on another lat-long grid (ring-major)
  std::vector<cplx> synthesize_grid(const std::vector<cplx>& coef, const LatLong& target) const;
  const LatLong& grid() const { return grid_; }

  // normalized associated Legendre values Pbar_l^m(t) for 0 <= m <= l <= L, index l*(l+1)/2 + m
  static void legendre(int L, double t, std::vector<double>& out);
  static std::size_t lindex(int l, int m) { return static_cast<std::size_t>(l * (l + 1) / 2 + m); }

 private:
  LatLong grid_;
  int L_;
  std::vector<double> ptab_;  // per ring legendre table
};

}  // namespace ssct
