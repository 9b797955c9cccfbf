#pragma once

#include <optional>
#include <string>

#include "ssct/field.hpp"

namespace ssct {

struct ShellPart {
  SurfacePtr gamma;
  std::vector<double> alpha;  // per node
};

struct FracPart {
  double s = 0.75;
  Field g;    // real
  Field chi;  // real, values in [0,1]
};

// V = V0 + chi^2 D^s g + alpha dsigma_Gamma, all parts optional.
struct Potential {
  BoxGrid grid;
  double support_radius = 0.0;  // declared ball B_{R0} around the origin
  std::optional<Field> v0;
  std::optional<ShellPart> shell;
  std::optional<FracPart> frac;

  static Potential zero(const BoxGrid& g);
  bool empty() const { return !v0 && !shell && !frac; }
  // invariants: real parts, chi in [0,1], supports inside the ball, s in (1/2,1)
  void validate() const;
  std::uint64_t hash() const;
};

// Data the resolvent consumes: a grid source and a weighted surface density.
struct SourceBundle {
  Field grid;
  SurfacePtr surface;         // may be null
  std::vector<cplx> density;  // per surface node; multiplied by the node weights when integrated
};

// Smooth compactly supported primitives
Field gaussian_field(const BoxGrid& g, double amplitude, const Vec3& center, double width, double support_radius);
// 1 inside r0, smooth decay to 0 at r1
Field cutoff_field(const BoxGrid& g, const Vec3& center, double r0, double r1);

Potential make_gaussian_potential(const BoxGrid& g, double amplitude, const Vec3& center, double width,
                                  double support_radius);
Potential make_shell_potential(const BoxGrid& g, const Vec3& center, double radius, int resolution, double alpha);
Potential make_fractional_potential(const BoxGrid& g, double s, Field gfield, Field chi, double support_radius);

Field riesz_derivative(double s, const Field& f);
Field gamma_field(const Potential& P);
// V0 + gamma as one grid multiplier (zero field when both are absent)
Field grid_multiplier(const Potential& P);

// int V0 u v + sum w alpha u v + <g, D^s(chi u chi v)>
cplx bilinear(const Potential& P, const Field& u, const Field& v, const std::vector<cplx>* trace_u = nullptr,
              const std::vector<cplx>* trace_v = nullptr);

SourceBundle apply_as_source(const Potential& P, const Field& u, const std::vector<cplx>* trace_u = nullptr);
// grid inner product plus surface quadrature against v
cplx pair_source(const SourceBundle& b, const Field& v, const std::vector<cplx>* trace_v = nullptr);

}  // namespace ssct
