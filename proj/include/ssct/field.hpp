#pragma once

#include <functional>
#include <vector>

#include "ssct/geometry.hpp"

namespace ssct {

// Complex samples on a BoxGrid, row-major (last axis fastest).
struct Field {
  BoxGrid grid;
  std::vector<cplx> data;

  Field() = default;
  explicit Field(const BoxGrid& g) : grid(g), data(g.size(), 0.0) {}
  Field(const BoxGrid& g, std::vector<cplx> v);
  static Field from_function(const BoxGrid& g, const std::function<cplx(const Vec3&)>& f);

  std::size_t size() const { return data.size(); }
  cplx& operator[](std::size_t i) { return data[i]; }
  const cplx& operator[](std::size_t i) const { return data[i]; }

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(cplx s);
  // discrete L2 norm (h^d sum |f|^2)^(1/2)
  double l2() const;
  double max_abs() const;
  bool is_zero() const;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(cplx s, Field a);
// pointwise product
Field hadamard(const Field& a, const Field& b);

// h^d sum a b (bilinear) and h^d sum a conj(b)
cplx integrate_product(const Field& a, const Field& b);
cplx inner(const Field& a, const Field& b);

// Unnormalized DFT over the grid (frequency slot j <-> xi(j)); inverse includes 1/N.
std::vector<cplx> fft_forward(const Field& f);
Field fft_inverse(const BoxGrid& g, std::vector<cplx> spec);

// Fourier multiplier m(xi) applied on the lattice.
Field apply_multiplier(const Field& f, const std::function<cplx(const Vec3& xi)>& m);
Field apply_multiplier(const Field& f, const std::vector<cplx>& m);
std::vector<cplx> lattice_symbol(const BoxGrid& g, const std::function<cplx(const Vec3& xi)>& m);

Field spectral_laplacian(const Field& f);
// d/dx_axis; the Nyquist slot is zeroed so real fields stay real
Field spectral_derivative(const Field& f, int axis);

// Trigonometric interpolation at arbitrary points (symmetric Nyquist split).
std::vector<cplx> trace_at(const Field& f, const std::vector<Vec3>& points);

// L2 norm restricted to nodes with |x| <= radius (or inside the predicate)
double l2_in_ball(const Field& f, double radius);
double l2_where(const Field& f, const std::function<bool(const Vec3&)>& keep);

}  // namespace ssct
