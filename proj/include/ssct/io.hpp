#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ssct/potential.hpp"

namespace ssct {

// ---- binary Field ----
// "SSCT", u32 version, u32 d, u32 n, f64 L (little-endian), then row-major interleaved re/im f64
inline constexpr std::uint32_t field_format_version = 1;
void write_field(const std::string& path, const Field& f);
Field read_field(const std::string& path);

// ---- experiment configuration ----
// Flat INI: [section] key = value. Vectors are comma separated.
struct ExperimentConfig {
  struct Grid {
    int d = 3;
    double L = 2.0;
    int n = 64;
  } grid;
  double lambda = 4.0;

  struct PotentialSpec {
    std::string kind = "gaussian";  // zero | gaussian | shell | fractional
    double amplitude = 2.0, width = 0.15, support = 0.6;
    Vec3 center{0, 0, 0};
    double shell_radius = 1.0, shell_alpha = 1.0;
    int shell_resolution = 24;
    // g and chi are Gaussian primitives; at h = L/32 the lattice residual needs widths >= 0.2
    double frac_s = 0.75, frac_amplitude = 1.0, frac_width = 0.2, frac_support = 0.6;
    double chi_width = 0.25, chi_support = 0.6;
  } potential;

  struct Direct {
    Vec3 y{1.2, 0.3, -0.4};
    int pairs = 10;
    double pair_rmin = 1.2, pair_rmax = 1.9;
    std::vector<double> src_radii{2, 4, 8, 16, 32};  // SRC table radii, any distance
  } direct;

  struct Surface {
    double radius = 1.0;
    int resolution = 32;
    Vec3 sigma_axis{0, 0, 1};  // Sigma caps are centred on this direction
  } surface;

  struct Neumann {
    double lambda = 2.0;
    Vec3 pole{0.3, 0.4, 1.5};
    double probe_radius = 0.6;
    double sweep_lo = 4.0, sweep_hi = 4.7;
    int sweep_samples = 8, sweep_resolution = 16;
  } neumann;

  struct Runge {
    double lambda = 2.0;
    int resolution = 40;
    Vec3 pole{0.0, 0.5, 1.6};
    double omega_prime = 0.5;
    std::vector<double> angles{0.5, 0.75, 1.0};
    double reg = 1e-8;
  } runge;

  struct Solver {
    double tol = 1e-10;
    int max_iter = 200;  // CGO remainder iterations
  } solver;

  struct Cgo {
    double L = 1.0;
    int n = 64;
    double amplitude = 5.0, width = 0.25, support = 0.5;
    double lambda = 1.0;
    Vec3 kappa{6.283185307179586, 0, 0};
    std::vector<double> taus{8, 16, 32, 64};
    std::vector<double> M{4, 8};
    double R0 = 1.0;
    int suite = 100, carleman_n = 32;
    int pair_draws = 1000;
    int recover_modes = 8, recover_n = 32;
    double recover_tau = 64;
  } cgo;

  struct Run {
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out = "out";
  } run;

  // canonical "[section]\nkey = value" text, sections and keys in fixed order
  std::string to_ini() const;
  // FNV-1a 64 of to_ini() with run.out and run.threads neutralized
  std::uint64_t hash() const;
  // ConfigError on: n not a power of two, a support radius above L/2, s outside (1/2,1),
  // a nonpositive tolerance or lambda, malformed vectors
  void validate() const;
};

// Defaults, then the file (if path is nonempty), then SSCT_<SECTION>_<KEY> environment overrides.
// Unknown sections or keys and unparsable values raise ConfigError.
ExperimentConfig load_config(const std::string& path);

// The potential described by the [potential] section on the [grid] box
Potential build_potential(const ExperimentConfig& cfg);
// Default Gaussian of the [cgo] section on its own box
Potential build_cgo_potential(const ExperimentConfig& cfg, int n);

// manifest.json: subcommand, config hash, library versions, wall-clock timings.
// Timings are the only field that differs between identical runs.
void write_manifest(const std::string& dir, const std::string& subcommand, const ExperimentConfig& cfg,
                    const std::vector<std::pair<std::string, double>>& timings_s);

// Writes text to dir/name, creating dir
void write_text(const std::string& dir, const std::string& name, const std::string& text);

}  // namespace ssct
