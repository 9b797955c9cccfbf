#pragma once

#include <map>
#include <memory>
#include <string>

#include "ssct/potential.hpp"

namespace ssct {

// Fourier transform of Phi_lambda truncated at radius R = L, sampled on the lattice.
// Convolution with it is exact for sources and targets inside the half-box.
std::shared_ptr<const std::vector<cplx>> truncated_kernel_symbol(double lambda, const BoxGrid& g);
// Grid-to-grid kernel: u_i = h^d sum_j kernel[(i - j) mod n] q_j reproduces the FFT convolution.
std::shared_ptr<const Field> discrete_kernel(double lambda, const BoxGrid& g);

// Grid part only; src must vanish outside the half-box ball |x| <= L/2.
Field resolvent_apply(double lambda, const Field& src);
// Grid part by FFT convolution, surface part by direct kernel sums.
Field free_resolvent(double lambda, const SourceBundle& src, const BoxGrid& g);
// Point evaluation of the surface part at arbitrary points (r = 0 terms dropped).
std::vector<cplx> surface_potential(double lambda, int d, const Hypersurface& s, const std::vector<cplx>& density,
                                    const std::vector<Vec3>& points);

// Largest |symbol| of the truncated kernel; large values flag near-resonance with the truncation.
double truncated_kernel_peak(double lambda, const BoxGrid& g);

// ---- Littlewood-Paley ----
int k_lambda(double lambda);  // 2^{k-1} < sqrt(lambda) <= 2^k
double lp_phi(double r);      // 1 for r <= 1, 0 for r >= 2
double lp_psi(int k, double r);

struct LpDecomposition {
  int klambda = 0;
  int kmin = 0, kmax = 0;  // bands kmin..kmax; kmin = klambda - 2
  Field low;               // P_{<I} f
  std::map<int, Field> bands;
  bool critical(int k) const { return k >= klambda - 2 && k <= klambda + 1; }
  Field reconstruct() const;
};

LpDecomposition lp_decompose(const Field& f, double lambda);

// ---- norms (d = 3) ----
// dyadic shells D_0 = {|x| <= 1}, D_j = {2^{j-1} < |x| <= 2^j}, restricted to the box
double norm_B(const Field& f);
double norm_Bstar(const Field& f);
double norm_Lp(const Field& f, double p);

struct NormReport {
  double B = 0, Bstar = 0, Y = 0, Z = 0, Xstar = 0;
  std::optional<double> Xzeta;
  std::string to_json() const;
};

double norm_Y(const Field& f, double lambda);
double norm_Z(const Field& f, double lambda);
double norm_Xlambda_star(const Field& u, double lambda);
NormReport norm_report(const Field& f, double lambda);

// p_zeta(xi) = -|xi|^2 + 2 i zeta.xi + zeta.zeta
cplx p_zeta(const CVec3& zeta, const Vec3& xi);
double norm_Xzeta(const Field& u, const CVec3& zeta, double s, double M);

// ---- inequality checks ----
enum class ResolventKind { Truncated, LatticeSymbol };

struct RatioStats {
  std::vector<double> ratios;
  double max = 0, median = 0;
  bool finite = true;
};
RatioStats summarize(std::vector<double> ratios);

// ratio = ||G f||_{X*} / min(||f||_Y, ||f||_Z)
RatioStats resolvent_estimate_check(const std::vector<Field>& suite, double lambda,
                                    ResolventKind kind = ResolventKind::Truncated);

struct BernsteinResult {
  double ratio, lower, upper;
  bool ok() const { return ratio >= lower * (1 - 1e-12) && ratio <= upper * (1 + 1e-12); }
};
// ||D^s P_k f|| / ||P_k f|| against [2^{(k-1)s}, 2^{(k+1)s}]
BernsteinResult bernstein_check(const Field& f, double lambda, int k, double s);

// Max relative deviation of the radial phase increment of G(bump) from sqrt(lambda) dr on [L/4, L/2].
double outgoing_phase_deviation(double lambda, const Field& bump, const Vec3& direction);

// |<G f, g> - <f, conj(G conj g)>| / (||G f|| ||g||), Hermitian pairings
double duality_gap(double lambda, const Field& f, const Field& g);

void write_ratio_csv(const std::string& path, const std::vector<std::vector<double>>& rows,
                     const std::vector<std::string>& header);

}  // namespace ssct
