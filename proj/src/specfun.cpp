#include "ssct/specfun.hpp"

namespace ssct {
namespace {

constexpr double euler_gamma = 0.57721566490153286061;
constexpr double series_limit = 12.0;

void check_arg(double z) {
  if (!(z > 0.0)) throw DomainError("Bessel argument must be positive");
}

// (J_nu, Y_nu) for nu in {0,1} from the ascending series
void ascending(int nu, double z, double& j, double& y) {
  const double q = 0.25 * z * z;
  const double lg = std::log(0.5 * z) + euler_gamma;
  double term = nu == 0 ? 1.0 : 0.5 * z;  // (z/2)^{2k+nu} / (k! (k+nu)!)
  double hk = 0.0, hk1 = 1.0;             // H_k, H_{k+1}
  double sj = 0.0, sy = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
    sj += sgn * term;
    if (nu == 0)
      sy += -sgn * hk * term;
    else
      sy += sgn * (hk + hk1) * term;
    if (k > 2 && std::abs(term) < 1e-18 * std::abs(sj) && std::abs(term * (hk + hk1)) < 1e-18 * (std::abs(sy) + 1e-300))
      break;
    term *= q / ((k + 1.0) * (k + 1.0 + nu));
    hk += 1.0 / (k + 1.0);
    hk1 += 1.0 / (k + 2.0);
  }
  j = sj;
  if (nu == 0)
    y = (2.0 / pi) * (lg * sj + sy);
  else
    y = (2.0 / pi) * lg * sj - 2.0 / (pi * z) - sy / pi;
}

// Hankel asymptotic expansion, truncated at the smallest term
cplx asymptotic(double nu, double z) {
  const double mu = 4.0 * nu * nu;
  cplx sum = 1.0, term = 1.0;
  double last = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= I * (mu - odd * odd) / (8.0 * k * z);
    const double mag = std::abs(term);
    if (mag > last) break;
    sum += term;
    last = mag;
    if (mag < 1e-17) break;
  }
  const double phase = z - 0.5 * nu * pi - 0.25 * pi;
  return std::sqrt(2.0 / (pi * z)) * std::exp(I * phase) * sum;
}

cplx integer_order(int nu, double z) {
  if (z < series_limit) {
    double j, y;
    ascending(nu, z, j, y);
    return {j, y};
  }
  return asymptotic(nu, z);
}

}  // namespace

double bessel_j0(double z) { check_arg(z); return integer_order(0, z).real(); }
double bessel_j1(double z) { check_arg(z); return integer_order(1, z).real(); }
double bessel_y0(double z) { check_arg(z); return integer_order(0, z).imag(); }
double bessel_y1(double z) { check_arg(z); return integer_order(1, z).imag(); }

cplx hankel1(double order, double z) {
  check_arg(z);
  if (order == 0.0) return integer_order(0, z);
  if (order == 1.0) return integer_order(1, z);
  const double a = std::sqrt(2.0 / (pi * z));
  if (order == 0.5) return -I * a * std::exp(I * z);
  if (order == 1.5) return -a * std::exp(I * z) * (1.0 + I / z);
  throw DomainError("unsupported Hankel order " + std::to_string(order));
}

KernelEval fundamental_solution(double lambda, int d, double r) {
  if (!(r > 0.0)) throw DomainError("fundamental_solution: r must be positive");
  if (!(lambda > 0.0)) throw DomainError("fundamental_solution: lambda must be positive");
  if (d != 2 && d != 3) throw DomainError("fundamental_solution: d must be 2 or 3");
  const double k = std::sqrt(lambda);
  const double nu = 0.5 * d - 1.0;
  // Phi = sigma (i/4) (k/(2 pi r))^nu H_nu(k r);  d/dr [r^-nu H_nu(kr)] = -k r^-nu H_{nu+1}(kr)
  const double c = std::pow(k / (2.0 * pi), nu);
  const double rn = std::pow(r, -nu);
  const cplx pref = static_cast<double>(sigma) * 0.25 * I * c;
  KernelEval e;
  e.value = pref * rn * hankel1(nu, k * r);
  e.radial_derivative = -pref * k * rn * hankel1(nu + 1.0, k * r);
  e.gradient = {e.radial_derivative, 0.0, 0.0};
  e.regular_factor = e.value * std::pow(r, d - 2.0);
  return e;
}

Kernel::Kernel(double lambda, int d) : lambda_(lambda), k_(std::sqrt(lambda)), d_(d) {
  if (!(lambda > 0.0)) throw DomainError("Kernel: lambda must be positive");
  if (d != 2 && d != 3) throw DomainError("Kernel: d must be 2 or 3");
}

cplx Kernel::value(double r) const {
  if (d_ == 3) return static_cast<double>(sigma) * std::exp(I * (k_ * r)) / (4.0 * pi * r);
  return static_cast<double>(sigma) * 0.25 * I * hankel1(0.0, k_ * r);
}

void Kernel::value_deriv(double r, cplx& v, cplx& dv) const {
  if (d_ == 3) {
    const cplx e = static_cast<double>(sigma) * std::exp(I * (k_ * r)) / (4.0 * pi * r);
    v = e;
    dv = e * (I * k_ - 1.0 / r);
    return;
  }
  v = static_cast<double>(sigma) * 0.25 * I * hankel1(0.0, k_ * r);
  dv = -static_cast<double>(sigma) * 0.25 * I * k_ * hankel1(1.0, k_ * r);
}

CVec3 Kernel::gradient(const Vec3& x, const Vec3& y) const {
  const Vec3 d = x - y;
  const double r = norm(d);
  cplx v, dv;
  value_deriv(r, v, dv);
  const cplx s = dv / r;
  return {s * d[0], s * d[1], s * d[2]};
}

}  // namespace ssct
