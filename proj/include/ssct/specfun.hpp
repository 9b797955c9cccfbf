#pragma once

#include "ssct/common.hpp"

namespace ssct {

// Bessel functions of the first and second kind for real z > 0.
double bessel_j0(double z);
double bessel_j1(double z);
double bessel_y0(double z);
double bessel_y1(double z);

// H^(1)_nu(z) for nu in {0, 1/2, 1, 3/2} and z > 0.
cplx hankel1(double order, double z);

struct KernelEval {
  cplx value;
  CVec3 gradient;       // with respect to x, for x - y = r e_1 in fundamental_solution
  cplx radial_derivative;
  cplx regular_factor;  // value = regular_factor * r^(2-d)
};

// Phi_lambda at radius r, built from the Hankel representation.
KernelEval fundamental_solution(double lambda, int d, double r);

// Fast evaluation of Phi_lambda(x - y) used inside quadrature sums.
class Kernel {
 public:
  Kernel(double lambda, int d);
  double lambda() const { return lambda_; }
  double k() const { return k_; }
  int dim() const { return d_; }

  cplx value(double r) const;
  // value and d/dr
  void value_deriv(double r, cplx& v, cplx& dv) const;
  cplx value(const Vec3& x, const Vec3& y) const { return value(distance(x, y)); }
  // gradient with respect to x
  CVec3 gradient(const Vec3& x, const Vec3& y) const;

 private:
  double lambda_, k_;
  int d_;
};

}  // namespace ssct
