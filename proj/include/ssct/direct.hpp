#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "ssct/harmonic.hpp"

namespace ssct {

// Lippmann-Schwinger operator restricted to where V lives.
// Unknown: u_to at the active grid nodes (V0 + gamma != 0) followed by the Gamma nodes.
// u_to = u_in + K M u_to with M = diag(h^d V_a, w_j alpha_j) and K symmetric:
//   grid-grid  discrete truncated kernel (so grid sums equal the FFT resolvent exactly)
//   grid-Gamma Phi
//   Gamma-Gamma singular surface rule / w_j, symmetrised
class ScatterOperator {
 public:
  ScatterOperator(double lambda, const Potential& P);

  double lambda() const { return lambda_; }
  const Potential& potential() const { return P_; }
  std::size_t size() const { return points_.size(); }
  std::size_t grid_count() const { return grid_nodes_.size(); }
  std::size_t shell_count() const { return size() - grid_count(); }
  const std::vector<std::size_t>& grid_nodes() const { return grid_nodes_; }
  const std::vector<Vec3>& points() const { return points_; }
  const Eigen::VectorXcd& weights() const { return m_; }
  const Eigen::MatrixXcd& kernel() const { return K_; }
  // distance from x to the nearest active point
  double clearance(const Vec3& x) const;

  Eigen::VectorXcd incident(const Vec3& y) const;
  Eigen::VectorXcd apply(const Eigen::VectorXcd& u) const;  // (I - K M) u

  struct Solve {
    Eigen::VectorXcd u;
    std::vector<double> history;
    int iterations = 0;
    bool converged = false;
    std::string regime;  // "fixed-point" or "krylov"
  };
  // Fixed-point iteration while it contracts, restarted GMRES otherwise.
  Solve solve(const Eigen::VectorXcd& b, double tol, int max_iter = 500) const;
  // LU of I - K M for many right-hand sides (factorized on first use)
  Eigen::MatrixXcd solve_many(const Eigen::MatrixXcd& B) const;

  // u_sc(x) = sum_a Phi(x - a) m_a u_a at points off the active set
  std::vector<cplx> scattered(const Eigen::VectorXcd& u_to, const std::vector<Vec3>& x) const;
  std::vector<CVec3> scattered_gradient(const Eigen::VectorXcd& u_to, const std::vector<Vec3>& x) const;
  // u_sc on the whole grid: FFT resolvent of the grid part plus direct sums of the shell part
  Field scattered_grid(const Eigen::VectorXcd& u_to) const;
  // FFT part alone (grid source h^-d m u) and the corresponding source field V_grid u_to
  Field grid_source(const Eigen::VectorXcd& u_to) const;

 private:
  double lambda_;
  Potential P_;
  std::vector<std::size_t> grid_nodes_;
  std::vector<Vec3> points_;
  Eigen::VectorXcd m_;
  Eigen::MatrixXcd K_;
  mutable std::shared_ptr<Eigen::PartialPivLU<Eigen::MatrixXcd>> lu_;
};

struct ScatterState {
  Field grid_field;                // u_sc on the grid
  std::vector<cplx> shell_trace;   // u_sc at the Gamma nodes
  Eigen::VectorXcd active;         // u_to at the active points
  Vec3 y{0, 0, 0};
  double lambda = 0;
  int iterations = 0;
  std::vector<double> residual_history;
  std::string regime;
  bool converged = false;
  std::string metadata_json() const;
};

// Incident point source Phi(x - y) sampled on the grid; the node at y (if any) is set to 0.
Field incident_field(double lambda, const BoxGrid& g, const Vec3& y);

struct BornResult {
  Field u;
  int terms = 0;
  double contraction = 0;  // ratio of the last two term norms
  std::vector<double> term_norms;
};
// Neumann series sum_n (G V0)^n G src for V0-only potentials.
BornResult born_series(double lambda, const Potential& P, const Field& src, double tol, int max_iter = 200);

// ||(Delta_h + lambda - mult) u - rhs|| / ||rhs|| over the half-box ball, excluding a ball of radius
// `mask_radius` around `mask_center`.
double equation_residual(double lambda, const Field& u, const Field& mult, const Field& rhs,
                         const Vec3& mask_center = {0, 0, 0}, double mask_radius = 0.0);

// Full solve for an incident point source at y. materialize = false skips the grid field.
ScatterState solve_scattering(const ScatterOperator& op, const Vec3& y, double tol, bool materialize = true);
ScatterState solve_scattering(double lambda, const Potential& P, const Vec3& y, double tol);

struct ScatterResiduals {
  double system = 0;  // ||(I - K M)u - u_in|| / ||u_in|| at the active points
  double grid = 0;    // ||(Delta_h+lambda) u_fft - V_grid u_to|| / ||V_grid u_to|| (0 when V_grid = 0)
  double trace_mismatch = 0;  // max |trace_at(grid_field) - shell_trace| / max |shell_trace|
};
ScatterResiduals scatter_residuals(const ScatterOperator& op, const ScatterState& st);

// Sphere-averaged |r^{(d-1)/2} (d_r u - i sqrt(lambda) u)| at each radius around `center`.
std::vector<double> src_diagnostic(const std::function<cplx(const Vec3&)>& u, double lambda, int d,
                                   const Vec3& center, const std::vector<double>& radii, int directions = 64);

// ||u||_{H^1(B_r')} / ||u||_{L^2(B_r)} with spectral gradients (or supplied gradients).
double interior_regularity_ratio(const Field& u, double omega_radius, double omega_prime_radius);
double interior_regularity_ratio(const Field& u, const std::array<Field, 3>& grad, double omega_radius,
                                 double omega_prime_radius);

}  // namespace ssct
