#include "ssct/verify.hpp"

#include <chrono>

#include "ssct/inverse.hpp"
#include "ssct/parallel.hpp"
#include "ssct/rng.hpp"
#include "ssct/specfun.hpp"

namespace ssct {

namespace {

using json = nlohmann::ordered_json;
using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

json cjson(cplx z) { return json::array({z.real(), z.imag()}); }

SurfacePtr sphere(double radius, int res) {
  return std::make_shared<const Hypersurface>(make_sphere({0, 0, 0}, radius, res));
}

std::vector<Vec3> shell_points(Rng& rng, int count, double r0, double r1) {
  std::vector<Vec3> out;
  while (static_cast<int>(out.size()) < count) {
    const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    out.push_back(rng.uniform(r0, r1) / norm(v) * v);
  }
  return out;
}

std::vector<cplx> cap_density(const Hypersurface& s, Rng& rng) {
  Vec3 axis{rng.normal(), rng.normal(), rng.normal()};
  axis = (1.0 / norm(axis)) * axis;
  const auto idx = select_patch(s, PatchSelector::cap({0, 0, 0}, axis, rng.uniform(0.6, 1.4)));
  std::vector<cplx> f(s.size(), 0.0);
  for (auto j : idx) f[j] = cplx(rng.normal(), rng.normal());
  return f;
}

double l2(const std::vector<cplx>& v) {
  double s = 0;
  for (auto x : v) s += std::norm(x);
  return std::sqrt(s);
}

class Runner {
 public:
  Runner(VerifyReport& rep, const std::function<void(const CheckResult&)>& cb) : rep_(rep), cb_(cb) {}

  void operator()(const std::string& id, const std::string& name, const std::string& tol,
                  const std::function<bool(json&)>& body) {
    CheckResult r;
    r.id = id;
    r.name = name;
    r.tolerance = tol;
    try {
      r.passed = body(r.metrics);
    } catch (const std::exception& e) {
      r.passed = false;
      r.error = e.what();
    }
    rep_.checks.push_back(r);
    if (cb_) cb_(rep_.checks.back());
  }

 private:
  VerifyReport& rep_;
  const std::function<void(const CheckResult&)>& cb_;
};

Potential fractional_on(ExperimentConfig cfg) {
  cfg.potential.kind = "fractional";
  return build_potential(cfg);
}

}  // namespace

bool VerifyReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return !checks.empty();
}

nlohmann::ordered_json VerifyReport::to_json() const {
  json j;
  j["passed"] = passed();
  json arr = json::array();
  for (const auto& c : checks) {
    json e;
    e["id"] = c.id;
    e["name"] = c.name;
    e["passed"] = c.passed;
    e["tolerance"] = c.tolerance;
    e["metrics"] = c.metrics;
    if (!c.error.empty()) e["error"] = c.error;
    arr.push_back(e);
  }
  j["checks"] = arr;
  return j;
}

VerifyReport run_verify(const ExperimentConfig& cfg, const std::function<void(const CheckResult&)>& on_check,
                        std::vector<std::pair<std::string, double>>* timings) {
  VerifyReport rep;
  Runner check(rep, on_check);
  auto stamp = [&](const std::string& name, clock_type::time_point t0) {
    if (timings) timings->emplace_back(name, seconds_since(t0));
  };
  const std::uint64_t seed = cfg.run.seed;
  const double lambda = cfg.lambda;

  // 1. closed form of the 3D kernel
  auto t0 = clock_type::now();
  check("1", "fundamental solution against the closed form", "relative <= 1e-10 at 100 radii, < 1 s",
        [&](json& m) {
          const auto start = clock_type::now();
          double worst = 0;
          for (double lam : {1.0, 4.0}) {
            for (int i = 0; i < 100; ++i) {
              const double r = 1e-2 * std::pow(50.0 / 1e-2, i / 99.0);
              const cplx exact = double(sigma) * std::exp(I * std::sqrt(lam) * r) / (4 * pi * r);
              worst = std::max(worst, std::abs(fundamental_solution(lam, 3, r).value - exact) / std::abs(exact));
            }
          }
          m["max_relative_error"] = worst;
          return worst <= 1e-10 && seconds_since(start) < 1.0;
        });
  stamp("1", t0);

  // 2. outgoing resolvent
  t0 = clock_type::now();
  check("2a", "resolvent residual on a Gaussian bump, 64^3", "||(Delta_h+lambda)Gf - f|| / ||f|| <= 1e-6, < 30 s",
        [&](json& m) {
          const auto start = clock_type::now();
          const auto g = BoxGrid::make(3, 2.0, 64);
          const Field f = Field::from_function(g, [](const Vec3& x) {
            const double r = norm(x);
            return cplx(r < 0.9 ? std::exp(-r * r / 0.0625) * smooth_cutoff(r, 0.6, 0.9) : 0.0);
          });
          const Field u = resolvent_apply(4.0, f);
          Field res = spectral_laplacian(u);
          for (std::size_t i = 0; i < res.size(); ++i) res[i] += 4.0 * u[i] - f[i];
          const double rel = l2_in_ball(res, 1.0) / l2_in_ball(f, 1.0);
          m["relative_residual"] = rel;
          return rel <= 1e-6 && seconds_since(start) < 30.0;
        });
  check("2b", "single layer of the unit sphere at its center", "|S1(0) - sigma R e^{i sqrt(lambda) R}| <= 1e-3",
        [&](json& m) {
          const auto s = make_sphere({0, 0, 0}, 1.0, 32);
          const auto v = surface_potential(4.0, 3, s, std::vector<cplx>(s.size(), 1.0), {{0, 0, 0}});
          const double err = std::abs(v[0] - double(sigma) * std::exp(2.0 * I));
          m["value"] = cjson(v[0]);
          m["abs_error"] = err;
          return err <= 1e-3;
        });
  stamp("2", t0);

  // 3 + 4. the three potential classes on the configured grid
  t0 = clock_type::now();
  {
    const auto g = BoxGrid::make(3, cfg.grid.L, cfg.grid.n);
    const auto& p = cfg.potential;
    struct Case {
      std::string id, name;
      Potential P;
    };
    const std::vector<Case> cases{
        {"a", "Gaussian V0", make_gaussian_potential(g, p.amplitude, p.center, p.width, p.support)},
        {"b", "unit-sphere delta shell", make_shell_potential(g, {0, 0, 0}, 1.0, p.shell_resolution, 1.0)},
        {"c", "fractional part", fractional_on(cfg)},
    };
    Rng rng(seed, 0x52454350);
    for (const auto& c : cases) {
      const ScatterOperator op(lambda, c.P);
      check("3" + c.id, "equation residual, " + c.name + ", n = " + std::to_string(g.n), "relative residual <= 1e-5",
            [&](json& m) {
              const auto st = solve_scattering(op, cfg.direct.y, cfg.solver.tol, c.id != "b");
              const auto r = scatter_residuals(op, st);
              m["system_residual"] = r.system;
              m["grid_residual"] = r.grid;
              m["iterations"] = st.iterations;
              m["regime"] = st.regime;
              return st.converged && r.system <= 1e-5 && r.grid <= 1e-5;
            });
      const auto pts = shell_points(rng, 2 * cfg.direct.pairs, cfg.direct.pair_rmin, cfg.direct.pair_rmax);
      check("4" + c.id, "reciprocity, " + c.name, "|u_sc(x,y) - u_sc(y,x)| <= 1e-3 max|u_sc|", [&](json& m) {
        double worst = 0, mx = 0;
        for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
          const auto sx = solve_scattering(op, pts[i], cfg.solver.tol, false);
          const auto sy = solve_scattering(op, pts[i + 1], cfg.solver.tol, false);
          const cplx a = op.scattered(sy.active, {pts[i]})[0];
          const cplx b = op.scattered(sx.active, {pts[i + 1]})[0];
          worst = std::max(worst, std::abs(a - b));
          mx = std::max({mx, std::abs(a), std::abs(b)});
        }
        m["pairs"] = pts.size() / 2;
        m["max_abs_difference"] = worst;
        m["max_abs_u_sc"] = mx;
        return mx > 0 && worst <= 1e-3 * mx;
      });
    }
  }
  check("3d", "weak potential against the first Born term", "error slope over eps in {0.02,0.04,0.08} is 2.0 +- 0.3",
        [&](json& m) {
          const auto g = BoxGrid::make(3, 2.0, 32);
          const Vec3 y{1.3, 0.2, 0.0};
          const Field uin = incident_field(lambda, g, y);
          std::vector<double> errs;
          for (double eps : {0.02, 0.04, 0.08}) {
            const auto P = make_gaussian_potential(g, eps, {0, 0, 0}, 0.25, 0.5);
            const ScatterOperator op(lambda, P);
            const auto st = solve_scattering(op, y, 1e-13);
            errs.push_back(l2_in_ball(st.grid_field - resolvent_apply(lambda, hadamard(*P.v0, uin)), 1.0));
          }
          const double slope = std::log2(errs[2] / errs[0]) / 2.0;
          m["errors"] = errs;
          m["slope"] = slope;
          return std::abs(slope - 2.0) <= 0.3;
        });
  stamp("3-4", t0);

  // 5. jump relation
  t0 = clock_type::now();
  check("5", "jump of the single layer for a constant density", "error <= 5e-2 at 64, order >= 1 from 32 to 64",
        [&](json& m) {
          const auto P0 = Potential::zero(BoxGrid::make(3, 2.0, 16));
          double e[2];
          for (int k = 0; k < 2; ++k) {
            const auto s = sphere(1.0, 32 << k);
            e[k] = jump_check(assemble_layers(1.0, P0, s), std::vector<cplx>(s->size(), 1.0)).max_error;
          }
          const double order = std::log2(e[0] / e[1]);
          m["error_32"] = e[0];
          m["error_64"] = e[1];
          m["order"] = order;
          return e[1] <= 5e-2 && order >= 1.0;
        });
  stamp("5", t0);

  // 6. Neumann pipeline
  t0 = clock_type::now();
  check("6a", "Neumann manufactured solution", "relative error <= 1e-2 on the probe sphere", [&](json& m) {
    const auto& nc = cfg.neumann;
    const auto s = sphere(cfg.surface.radius, cfg.surface.resolution);
    const auto ops = assemble_layers(nc.lambda, Potential::zero(BoxGrid::make(3, 2.0, 16)), s);
    const Kernel K(nc.lambda, 3);
    std::vector<cplx> gdat(s->size());
    for (std::size_t i = 0; i < s->size(); ++i) gdat[i] = cdot(K.gradient(s->nodes[i], nc.pole), s->normals[i]);
    const auto phi = neumann_density(ops, gdat);
    const auto probe = make_sphere({0, 0, 0}, nc.probe_radius, 16);
    const auto u = eval_single_layer(ops, phi, probe.nodes);
    std::vector<cplx> diff(u.size()), ex(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      ex[i] = K.value(probe.nodes[i], nc.pole);
      diff[i] = u[i] - ex[i];
    }
    const double rel = l2(diff) / l2(ex);
    m["relative_error"] = rel;
    m["condition"] = neumann_condition(ops);
    return rel <= 1e-2;
  });
  check("6b", "Neumann near-eigenvalue spike", "sweep peak flagged above 1e8 and the solver refuses it", [&](json& m) {
    const auto& nc = cfg.neumann;
    const auto s = sphere(cfg.surface.radius, nc.sweep_resolution);
    const auto P0 = Potential::zero(BoxGrid::make(3, 2.0, 16));
    const auto sw = neumann_condition_sweep(P0, s, nc.sweep_lo, nc.sweep_hi, nc.sweep_samples);
    m["peak_lambda"] = sw.peak_lambda;
    m["peak_condition"] = sw.peak_condition;
    m["flagged"] = sw.flagged;
    bool refused = false;
    try {
      neumann_density(assemble_layers(sw.peak_lambda, P0, s), std::vector<cplx>(s->size(), 1.0));
    } catch (const NearEigenvalueError&) {
      refused = true;
    }
    m["solver_refused"] = refused;
    return sw.flagged && refused;
  });
  stamp("6", t0);

  // 7. Runge approximation
  t0 = clock_type::now();
  check("7a", "Runge approximation of a fundamental solution from caps",
        "error <= 5e-2 with >= 200 dof, nonincreasing in dof within 5%", [&](json& m) {
          const auto& rc = cfg.runge;
          const auto s = sphere(cfg.surface.radius, rc.resolution);
          const auto ops = assemble_layers(rc.lambda, Potential::zero(BoxGrid::make(3, 2.0, 32)), s);
          const auto pts = ball_nodes(BoxGrid::make(3, 2.0, 32), {0, 0, 0}, rc.omega_prime);
          const Kernel K(rc.lambda, 3);
          std::vector<cplx> target(pts.size());
          for (std::size_t q = 0; q < pts.size(); ++q) target[q] = K.value(pts[q], rc.pole);
          const Vec3 axis = (1.0 / norm(cfg.surface.sigma_axis)) * cfg.surface.sigma_axis;
          std::vector<double> angles = rc.angles;
          std::sort(angles.begin(), angles.end());
          bool monotone = true;
          double prev = 1e300;
          json rows = json::array();
          RungeReport last;
          for (double a : angles) {
            last = runge_fit(ops, select_patch(*s, PatchSelector::cap({0, 0, 0}, axis, a)), pts, target, rc.reg);
            rows.push_back({{"angle", a}, {"dof", last.dof}, {"error", last.error}});
            if (last.error > 1.05 * prev) monotone = false;
            prev = last.error;
          }
          m["caps"] = rows;
          m["monotone"] = monotone;
          return monotone && last.dof >= 200 && last.error <= 5e-2;
        });
  check("7b", "Runge representable target", "relative error <= 1e-6", [&](json& m) {
    const auto s = sphere(1.0, 24);
    const auto ops = assemble_layers(2.0, Potential::zero(BoxGrid::make(3, 2.0, 32)), s);
    const auto sig = select_patch(*s, PatchSelector::cap({0, 0, 0}, {0, 0, 1}, 1.0));
    const auto pts = ball_nodes(BoxGrid::make(3, 2.0, 32), {0, 0, 0}, 0.5);
    Rng rng(seed, 0x52554e47);
    std::vector<cplx> f0(s->size(), 0.0);
    for (auto j : sig) f0[j] = cplx(rng.normal(), rng.normal());
    const auto rep7 = runge_fit(ops, sig, pts, eval_single_layer(ops, f0, pts), 1e-16);
    m["relative_error"] = rep7.error;
    return rep7.error <= 1e-6;
  });
  stamp("7", t0);

  // 8. dual-path pairing
  t0 = clock_type::now();
  {
    const auto g = BoxGrid::make(3, 2.0, 32);
    const auto P = make_gaussian_potential(g, 3.0, {0.05, 0, 0}, 0.15, 0.45);
    const auto s = sphere(1.0, 16);
    const auto ops1 = assemble_layers(2.0, P, s);
    const auto ops2 = assemble_layers(2.0, Potential::zero(g), s);
    Rng rng(seed, 0x44554150);
    check("8a", "dual-path pairing, Gaussian against zero, 20 random cap pairs", "relative discrepancy <= 1e-2",
          [&](json& m) {
            double worst = 0;
            bool nonzero = true;
            for (int k = 0; k < 20; ++k) {
              const auto f1 = cap_density(*s, rng), f2 = cap_density(*s, rng);
              const auto r = boundary_pairing(ops1, ops2, f1, f2);
              nonzero = nonzero && std::abs(r.volume_value) > 0;
              worst = std::max(worst, r.relative);
            }
            m["max_relative_discrepancy"] = worst;
            return nonzero && worst <= 1e-2;
          });
    check("8b", "dual-path pairing with V1 = V2", "both paths exactly zero", [&](json& m) {
      const auto f1 = cap_density(*s, rng), f2 = cap_density(*s, rng);
      const auto r = boundary_pairing(ops1, ops1, f1, f2);
      m["volume_value"] = cjson(r.volume_value);
      m["boundary_value"] = cjson(r.boundary_value);
      return r.volume_value == 0.0 && r.boundary_value == 0.0;
    });
  }
  stamp("8", t0);

  // 9. zeta pairs
  t0 = clock_type::now();
  check("9", "zeta pair invariants over random draws", "max invariant defect <= 1e-12", [&](json& m) {
    Rng rng(seed, 0x5a455441);
    double worst = 0, worst_rel = 0;
    for (int k = 0; k < cfg.cgo.pair_draws; ++k) {
      const double lam = rng.uniform(0.1, 20.0);
      const Vec3 kappa{rng.normal() * 5, rng.normal() * 5, rng.normal() * 5};
      const double tau = rng.uniform(std::max(0.5, 0.5 * norm(kappa)), 32.0);
      const auto [theta, eta] = cgo_frame(kappa);
      worst = std::max(worst, pair_invariants(make_zeta_pair(lam, kappa, tau, theta, eta)).max());
      const auto p2 = make_zeta_pair(lam, kappa, 2 * tau, theta, eta);
      double z2 = 0;
      for (auto c : p2.zeta1) z2 += std::norm(c);
      worst_rel = std::max(worst_rel, pair_invariants(p2).max() / std::max(1.0, z2));
    }
    m["draws"] = cfg.cgo.pair_draws;
    m["max_defect"] = worst;
    m["max_relative_defect_doubled_tau"] = worst_rel;
    return worst <= 1e-12;
  });
  stamp("9", t0);

  // 10. remainder decay and the Fourier mode
  t0 = clock_type::now();
  check("10", "CGO remainder decay and Fourier-mode recovery",
        "||w1|| nonincreasing within 10%, final relative error <= 0.1, < 600 s", [&](json& m) {
          const auto start = clock_type::now();
          const auto P = build_cgo_potential(cfg, cfg.cgo.n);
          RemainderOptions opt;
          opt.tol = cfg.solver.tol;
          opt.max_iter = cfg.solver.max_iter;
          const auto rows = decay_sweep(P, cfg.cgo.lambda, cfg.cgo.kappa, cfg.cgo.taus, opt);
          bool monotone = true;
          json arr = json::array();
          for (std::size_t k = 0; k < rows.size(); ++k) {
            if (k > 0 && rows[k].w1_l2 > 1.1 * rows[k - 1].w1_l2) monotone = false;
            arr.push_back({{"tau", rows[k].tau}, {"w1_l2", rows[k].w1_l2}, {"rel_error", rows[k].rel_error}});
          }
          m["n"] = cfg.cgo.n;
          m["ladder"] = arr;
          m["monotone"] = monotone;
          return monotone && rows.back().rel_error <= 0.1 && seconds_since(start) < 600.0;
        });
  stamp("10", t0);

  // 11. norm toolkit
  t0 = clock_type::now();
  check("11a", "Bernstein ratios on band-limited fields", "ratio in [2^{(k-1)s}, 2^{(k+1)s}]", [&](json& m) {
    const auto g = BoxGrid::make(3, pi, 32);
    Rng rng(seed, 0x4245524e);
    int tested = 0;
    double worst_margin = 1e300;
    bool ok = true;
    for (int trial = 0; trial < 5; ++trial) {
      Field f(g);
      for (int t = 0; t < 8; ++t) {
        const std::array<int, 3> mm{int(rng.uniform(-9, 9)), int(rng.uniform(-9, 9)), int(rng.uniform(-9, 9))};
        const cplx a(rng.normal(), rng.normal());
        f += a * Field::from_function(g, [&](const Vec3& x) { return std::exp(I * (mm[0] * x[0] + mm[1] * x[1] + mm[2] * x[2])); });
      }
      for (int k = 0; k <= 4; ++k) {
        const auto b = bernstein_check(f, 4.0, k, 0.75);
        if (!std::isfinite(b.ratio)) continue;
        ++tested;
        ok = ok && b.ok();
        worst_margin = std::min({worst_margin, b.ratio / b.lower, b.upper / b.ratio});
      }
    }
    m["bands_tested"] = tested;
    m["min_margin"] = worst_margin;
    return ok && tested > 0;
  });
  check("11b", "resolvent-estimate ratios under refinement", "finite, n = 32 vs 64 within 20%", [&](json& m) {
    Rng rng(seed, 0x52455345);
    struct Bump {
      Vec3 c;
      double w;
    };
    std::vector<Bump> bumps;
    for (int k = 0; k < 6; ++k) bumps.push_back({{rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)},
                                                  rng.uniform(0.15, 0.3)});
    std::vector<double> r[2];
    for (int k = 0; k < 2; ++k) {
      const auto g = BoxGrid::make(3, 2.0, 32 << k);
      std::vector<Field> suite;
      for (const auto& b : bumps) suite.push_back(gaussian_field(g, 1.0, b.c, b.w, 0.6));
      const auto st = resolvent_estimate_check(suite, 4.0);
      if (!st.finite) return false;
      r[k] = st.ratios;
    }
    double worst = 0;
    for (std::size_t i = 0; i < r[0].size(); ++i) worst = std::max(worst, std::abs(r[1][i] / r[0][i] - 1.0));
    m["ratios_32"] = r[0];
    m["ratios_64"] = r[1];
    m["max_relative_change"] = worst;
    return worst <= 0.2;
  });
  {
    const auto g = BoxGrid::make(3, cfg.cgo.L, cfg.cgo.carleman_n);
    const auto P = build_cgo_potential(cfg, cfg.cgo.carleman_n);
    const auto suite = carleman_suite(g, cfg.cgo.suite, seed, cfg.cgo.R0);
    const auto [theta, eta] = cgo_frame(cfg.cgo.kappa);
    const CVec3 z32 = make_zeta_pair(cfg.cgo.lambda, cfg.cgo.kappa, 32, theta, eta).zeta1;
    const CVec3 z64 = make_zeta_pair(cfg.cgo.lambda, cfg.cgo.kappa, 64, theta, eta).zeta1;
    check("11c", "Carleman ratios from tau = 32 to 64", "finite, growth <= 1.5x, at every configured M", [&](json& m) {
      bool ok = true;
      json arr = json::array();
      for (double M : cfg.cgo.M) {
        const auto a = carleman_check(suite, z32, cfg.cgo.lambda, P, M, cfg.cgo.R0);
        const auto b = carleman_check(suite, z64, cfg.cgo.lambda, P, M, cfg.cgo.R0);
        const double growth = b.stats.max / a.stats.max;
        ok = ok && a.stats.finite && b.stats.finite && a.stats.max > 0 && growth <= 1.5;
        arr.push_back({{"M", M}, {"max_32", a.stats.max}, {"max_64", b.stats.max}, {"growth", growth}});
      }
      m["suite"] = suite.size();
      m["by_M"] = arr;
      return ok;
    });
    check("11d", "L2 against X_zeta^{1/2} embedding", "holds on every suite field", [&](json& m) {
      int failures = 0;
      double min_ratio = 1e300;
      for (double M : cfg.cgo.M)
        for (const auto* z : {&z32, &z64})
          for (const auto& u : suite) {
            const auto e = embedding_check(u, *z, M);
            if (!e.holds()) ++failures;
            min_ratio = std::min(min_ratio, e.min_ratio);
          }
      m["failures"] = failures;
      m["min_multiplier_ratio"] = min_ratio;
      return failures == 0;
    });
  }
  stamp("11", t0);
  return rep;
}

}  // namespace ssct
