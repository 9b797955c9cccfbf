#pragma once

#include <string>

#include "ssct/cgo.hpp"
#include "ssct/layers.hpp"

namespace ssct {

// Traces needed by the shell parts of P1 and P2 (only the ones whose potential has a shell are read).
struct PairTraces {
  std::vector<cplx> v1_on_gamma1, v2_on_gamma1, v1_on_gamma2, v2_on_gamma2;
};

// Interior residual above which alessandrini_pair refuses the inputs
inline constexpr double pairing_residual_limit = 1e-3;

// <(V1 - V2) v1, v2> = bilinear(P1, v1, v2) - bilinear(P2, v1, v2). ResidualError if a residual exceeds the limit.
cplx alessandrini_pair(const Potential& P1, const Potential& P2, const Field& v1, const Field& v2,
                       const PairTraces& traces = {}, double residual1 = 0.0, double residual2 = 0.0);

struct PairingReport {
  cplx volume_value = 0, boundary_value = 0;
  double discrepancy = 0;  // |volume - boundary|
  double relative = 0;     // discrepancy / max(|volume|, |boundary|, 1e-8 scale)
};

// v_j = S_j f_j. Volume path: alessandrini_pair on the grid and shell nodes.
// Boundary path: sigma int f1 [(S2 - S1) f2] dS with the node matrices.
PairingReport boundary_pairing(const LayerOperatorSet& ops1, const LayerOperatorSet& ops2, const BoundaryDensity& f1,
                               const BoundaryDensity& f2);

struct FourierModeResult {
  cplx estimate = 0, truth = 0;
  double error = 0;      // relative; absolute when truth = 0
  double abs_error = 0;  // |estimate - truth|
  double w1_l2 = 0;
  int iterations = 0;
  CgoPair pair;
};

// V2 = 0, so w2 = 0: estimate = <V, e^{-i kappa.x}(1 + w1)>, truth = <V, e^{-i kappa.x}>.
FourierModeResult fourier_mode_via_cgo(const Potential& P, double lambda, const Vec3& kappa, double tau,
                                       const RemainderOptions& opt = {});

struct DecaySweepRow {
  double tau = 0, abs_error = 0, w1_l2 = 0, rel_error = 0;
  cplx estimate = 0, truth = 0;
  int iterations = 0;
};
std::vector<DecaySweepRow> decay_sweep(const Potential& P, double lambda, const Vec3& kappa,
                                       const std::vector<double>& taus, const RemainderOptions& opt = {});
void write_decay_sweep_csv(const std::string& path, const std::vector<DecaySweepRow>& rows);

struct RecoveryRow {
  Vec3 kappa{};
  cplx truth = 0, estimate = 0;
  double error = 0, abs_error = 0;
};
struct RecoveryResult {
  std::vector<RecoveryRow> rows;
  Field reconstruction;        // inverse transform of the estimates on the coarse grid
  Field truth_reconstruction;  // same transform of the exact modes
  double reconstruction_error = 0;  // relative L2
};
// kappa = (pi/L) m, m in [-modes/2, modes/2)^3; reconstruction on BoxGrid(3, L, modes)
RecoveryResult kappa_grid_recovery(const Potential& P, double lambda, double tau, int modes = 8,
                                   const RemainderOptions& opt = {});
void write_recovery_csv(const std::string& path, const std::vector<RecoveryRow>& rows);

}  // namespace ssct
