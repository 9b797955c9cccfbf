#pragma once

#include <memory>

#include "ssct/direct.hpp"
#include "ssct/surface_quadrature.hpp"

namespace ssct {

using BoundaryDensity = std::vector<cplx>;

// Node-to-node layer operators on dOmega built on u_to = Phi + u_sc:
//   (S f)_i = sum_j S_ij f_j approximates int f(y) u_to(x_i, y) dS(y); N uses d_{nu_x}, D uses d_{nu_y}.
// Each matrix is free part + scattered part; the scattered part is smooth and uses plain quadrature.
struct LayerOperatorSet {
  SurfacePtr surface;
  double lambda = 0;
  std::uint64_t potential_id = 0;
  Eigen::MatrixXcd S, N, D;
  Eigen::MatrixXcd S_sc, N_sc, D_sc;      // zero-size when V = 0
  bool spectral = false;                   // free part by the rotated-pole sphere rule
  std::shared_ptr<const ScatterOperator> op;  // null when V = 0
  Eigen::MatrixXcd table;                  // (I - KM)^{-1} Phi(a - y_j), active x nodes
};

// Throws SupportError when dOmega is closer than 4h to the active set.
LayerOperatorSet assemble_layers(double lambda, const Potential& P, SurfacePtr boundary);

// S f at off-surface points (>= 2h from dOmega); u_sc part through the scatter table.
std::vector<cplx> eval_single_layer(const LayerOperatorSet& ops, const BoundaryDensity& f, const std::vector<Vec3>& x);
// S f at grid nodes idx (>= 2h from dOmega); nodes on the active set go through the grid solution.
std::vector<cplx> eval_single_layer_on_grid(const LayerOperatorSet& ops, const BoundaryDensity& f, const BoxGrid& g,
                                            const std::vector<std::size_t>& idx);
std::vector<CVec3> eval_single_layer_gradient(const LayerOperatorSet& ops, const BoundaryDensity& f,
                                              const std::vector<Vec3>& x);

struct JumpReport {
  double max_error = 0;            // max_i |sigma (inner - outer) - f_i|
  std::vector<cplx> jump;          // sigma (inner - outer) per node
  std::vector<cplx> inner, outer;  // one-sided normal derivatives
};
// One-sided normal derivatives of S f by Richardson-extrapolated offsets {4h, 2h} with h = spacing/4.
JumpReport jump_check(const LayerOperatorSet& ops, const BoundaryDensity& f);

// ---- Neumann problem ----
// Condition number of 2N + sigma I (2-norm)
double neumann_condition(const LayerOperatorSet& ops);

struct NeumannResult {
  Field u;                 // on grid nodes with |x - c| <= R - 2h, zero elsewhere
  BoundaryDensity phi;     // layer density
  BoundaryDensity g;       // d_nu w on dOmega
  BoundaryDensity trace;   // u on dOmega
  double condition = 0;
  double flux_residual = 0;      // max |d_nu u_-| / max |g|
  double interior_residual = 0;  // ||(Delta+lambda-V)u - f|| / max(||f||, lambda ||u||) on B_{R-6h}
};
// Threshold for flagging a near-eigenvalue system
inline constexpr double near_eigenvalue_condition = 1e8;

// Two-step construction: w = outgoing solve of (Delta+lambda-V)w = f_vol, g = d_nu w,
// (2N + sigma I) phi = 2g, u = w - S phi. f_vol must vanish near dOmega.
NeumannResult neumann_solve(const LayerOperatorSet& ops, const Field& f_vol, bool compute_residual = true);
// Homogeneous interior problem with Neumann data g: u = S phi with (2N + sigma I) phi = 2g.
BoundaryDensity neumann_density(const LayerOperatorSet& ops, const BoundaryDensity& g);

struct ConditionSweep {
  std::vector<double> lambdas, conditions;
  double peak_lambda = 0, peak_condition = 0;
  bool flagged = false;  // peak_condition > near_eigenvalue_condition
};
// Condition numbers on a uniform lambda grid, then golden-section refinement of the largest.
ConditionSweep neumann_condition_sweep(const Potential& P, SurfacePtr boundary, double lambda0, double lambda1,
                                       int samples, int refine_steps = 40);

// ---- Runge approximation ----
struct RungeReport {
  BoundaryDensity density;  // on all nodes, zero off Sigma
  double error = 0;         // relative L2(Omega') error
  std::size_t dof = 0;
  double reg = 0;
  std::vector<std::array<double, 3>> lcurve;  // (reg, relative residual, ||f||_{L2(Sigma)})
};
// min ||S f - target||^2_{L2(Omega')} + reg * sigma_max^2 ||f||^2_{L2(Sigma)} over f supported on sigma_nodes.
// target is sampled at eval_points, which must stay 2h away from supp V (SupportError).
RungeReport runge_fit(const LayerOperatorSet& ops, const std::vector<std::size_t>& sigma_nodes,
                      const std::vector<Vec3>& eval_points, const std::vector<cplx>& target, double reg = 1e-8);
// Grid nodes of g inside the ball
std::vector<Vec3> ball_nodes(const BoxGrid& g, const Vec3& center, double radius);

// ---- orthogonality identity ----
struct OrthogonalityReport {
  cplx boundary = 0;      // <N f, phi> + (sigma/2)<f, phi>
  cplx uncorrected = 0;   // <N f, phi>
  cplx volume = 0;        // -<S f, v>_{Omega'}
  double discrepancy = 0; // |boundary - volume| / max(|boundary|, |volume|)
};
// phi: Neumann solution of (Delta+lambda-V)phi = v in Omega, d_nu phi = 0.
OrthogonalityReport orthogonality_check(const LayerOperatorSet& ops, const BoundaryDensity& f, const Field& v);

// Row-major complex doubles (S, N, D concatenated) plus a JSON sidecar
void export_layers(const LayerOperatorSet& ops, const std::string& path_without_ext);

}  // namespace ssct
