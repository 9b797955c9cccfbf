#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssct {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;  // d = 2 uses the first two components, third is 0
using CVec3 = std::array<cplx, 3>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

// Phi = sigma * Phi_classical, Phi_classical solving (Delta+lambda)Phi = -delta.
// With sigma = -1 the free kernel satisfies (Delta+lambda)Phi = delta.
inline constexpr int sigma = -1;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : Error {
  using Error::Error;
};
struct SupportError : Error {
  using Error::Error;
};
struct MissingPartError : Error {
  using Error::Error;
};
struct MissingTraceError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct OverflowGuardError : Error {
  using Error::Error;
};
struct SymbolZeroError : Error {
  using Error::Error;
};
struct EmptySelectionError : Error {
  using Error::Error;
};
struct ResidualError : Error {
  using Error::Error;
};
struct ConvergenceError : Error {
  ConvergenceError(const std::string& what, std::vector<double> history)
      : Error(what), history(std::move(history)) {}
  std::vector<double> history;
};
struct NearEigenvalueError : Error {
  NearEigenvalueError(const std::string& what, double cond) : Error(what), condition(cond) {}
  double condition;
};

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

// complex bilinear dot (no conjugation)
inline cplx cdot(const CVec3& a, const CVec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline cplx cdot(const CVec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

// C-infinity step: 0 for t <= 0, 1 for t >= 1
inline double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

// 1 for r <= r0, 0 for r >= r1, smooth in between
inline double smooth_cutoff(double r, double r0, double r1) { return 1.0 - smooth_step((r - r0) / (r1 - r0)); }

}  // namespace ssct
