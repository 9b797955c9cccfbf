#pragma once

#include <string>

#include "ssct/harmonic.hpp"

namespace ssct {

// zeta_j = +-tau theta + i(-kappa/2 +- r eta), r = (tau^2 + lambda - |kappa|^2/4)^{1/2}
struct CgoPair {
  double lambda = 0, tau = 0;
  Vec3 kappa{}, theta{}, eta{};
  CVec3 zeta1{}, zeta2{};
  const CVec3& zeta(int which) const { return which == 1 ? zeta1 : zeta2; }
};

struct PairInvariants {
  double self1 = 0, self2 = 0;  // |zeta_j.zeta_j + lambda|
  double sum = 0;               // |zeta_1 + zeta_2 + i kappa|_inf
  double orth = 0;              // max of |theta.eta|, |theta.kappa|, |eta.kappa|
  double max() const { return std::max({self1, self2, sum, orth}); }
};

CgoPair make_zeta_pair(double lambda, const Vec3& kappa, double tau, const Vec3& theta, const Vec3& eta);
PairInvariants pair_invariants(const CgoPair& p);
// Orthonormal theta, eta perpendicular to kappa. theta is a coordinate axis whenever kappa has a
// zero component, which keeps the shifted lattice a distance pi/(2L) from theta.xi = 0.
std::pair<Vec3, Vec3> cgo_frame(const Vec3& kappa);

// Symbol of Delta + 2 zeta.grad: -|xi|^2 + 2i zeta.xi = p_zeta(xi) - zeta.zeta
cplx remainder_symbol(const CVec3& zeta, const Vec3& xi);

// w = e^{i beta.x} w_per with w_per periodic on the box; beta = pi/(2L) e_a, a the largest |theta_a|.
// q(xi + beta) is then bounded below by tau pi / L when theta is an axis; xi = 0 is never a lattice point.
struct CgoSolution {
  int pair_index = 1;
  CgoPair pair;            // tau may differ from the request by the symbol-zero retry
  CVec3 zeta{};
  Vec3 center{0, 0, 0};    // exponential normalization point
  Vec3 shift{};            // beta
  Field w;                 // remainder at grid nodes
  Field w_periodic;        // e^{-i beta.x} w
  int iterations = 0;
  int retries = 0;
  bool converged = false;
  double residual = 0;     // ||w - G(V(1 + w))|| / ||w|| at the last step, 0 for w = 0
  double contraction = 0;  // ratio of the last two update norms
  double min_symbol = 0;   // min |q| over the shifted lattice
  std::vector<double> history;  // update norms

  // w at arbitrary points of the box (trigonometric interpolation of w_periodic)
  std::vector<cplx> w_at(const std::vector<Vec3>& x) const;
};

struct RemainderOptions {
  double tol = 1e-10;
  int max_iter = 200;
  double symbol_floor = 1e-8;  // relative to tau^2
  int max_retries = 5;
  bool throw_on_stall = true;  // false: return the iterate reached at max_iter
};

// Fixed point w <- G(V(1 + w)), G division by the remainder symbol on the shifted lattice.
// supp V must lie in the half-box. Throws ConvergenceError, SymbolZeroError.
CgoSolution solve_remainder(const CgoPair& pair, int which, const Potential& P, const RemainderOptions& opt = {});
// Same iteration for a grid multiplier with no support restriction (the periodic problem).
CgoSolution solve_remainder(const CgoPair& pair, int which, const Field& multiplier, const RemainderOptions& opt = {});

// e^{zeta.(x - c)} (1 + w(x)); OverflowGuardError if |Re zeta.(x - c)| > 600
inline constexpr double overflow_exponent = 600.0;
std::vector<cplx> cgo_evaluate(const CgoSolution& sol, const std::vector<Vec3>& x);
Field cgo_evaluate_grid(const CgoSolution& sol);

// ---- Carleman desk check ----
// phi(x) = M (x.theta)^2 / 2 + x.zeta with theta = Re zeta / |Re zeta|.
// e^{phi}(Delta+lambda-V)(e^{-phi} u) = Delta u - 2 grad phi . grad u + (grad phi . grad phi - M + lambda - V) u,
// evaluated without exponentials.
SourceBundle carleman_conjugate(const Field& u, const CVec3& zeta, double lambda, const Potential& P, double M);

struct CarlemanReport {
  RatioStats stats;            // L / (R0 R) per suite member
  std::vector<double> lhs, rhs;  // ||u||_{X^{1/2}_{-zeta}}, ||conjugated||_{X^{-1/2}_{-zeta}}
  double tau = 0, M = 0, R0 = 0;
};
CarlemanReport carleman_check(const std::vector<Field>& suite, const CVec3& zeta, double lambda, const Potential& P,
                              double M, double R0);
// Random bump-modulated fields supported in B_{0.75 R0}; never zero.
std::vector<Field> carleman_suite(const BoxGrid& g, int count, std::uint64_t seed, double R0);

// ||u||_2 <= M^{-1/4} |Re zeta|^{-1/2} ||u||_{X^{1/2}_zeta}; min_ratio is the smallest value of
// (M|Re zeta|^2 + |p_zeta|^2/M)^{1/2} / (M^{1/2}|Re zeta|) over the lattice (>= 1 by construction).
struct EmbeddingReport {
  double l2 = 0, bound = 0, min_ratio = 0;
  bool holds() const { return l2 <= bound * (1 + 1e-12) && min_ratio >= 1.0 - 1e-15; }
};
EmbeddingReport embedding_check(const Field& u, const CVec3& zeta, double M);

// ---- remainder decay ----
struct DecayRow {
  double tau = 0, w1 = 0, w2 = 0;
  int iterations = 0;
  double residual = 0, contraction = 0;
};
std::vector<DecayRow> remainder_decay(const Potential& P, double lambda, const Vec3& kappa,
                                      const std::vector<double>& taus, const RemainderOptions& opt = {});
void write_decay_csv(const std::string& path, const std::vector<DecayRow>& rows);

// Nonuniform DFT pieces on the lattice convention of fft_forward (phase e^{-i xi.(x + L)}).
// Adds h^{-d} sum_j c_j e^{-i beta.y_j} e^{-i xi.(y_j + L)} to spec.
void add_point_spectrum(const BoxGrid& g, const std::vector<Vec3>& y, const std::vector<cplx>& c, const Vec3& beta,
                        std::vector<cplx>& spec);

}  // namespace ssct
