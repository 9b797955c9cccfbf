#include "ssct/io.hpp"

#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <Eigen/Core>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <boost/version.hpp>
#include <fftw3.h>
#include <gsl/gsl_version.h>

#include "json.hpp"

namespace ssct {

static_assert(std::endian::native == std::endian::little, "binary Field I/O assumes a little-endian host");

namespace {

constexpr char magic[4] = {'S', 'S', 'C', 'T'};

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& in, const std::string& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw Error("read_field: truncated header in " + path);
  return v;
}

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
std::string fmt(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}
std::string fmt(const Vec3& v) { return fmt(std::vector<double>(v.begin(), v.end())); }

double parse_double(const std::string& s, const std::string& key) {
  const char* b = s.c_str();
  char* e = nullptr;
  errno = 0;
  const double v = std::strtod(b, &e);
  while (e && (*e == ' ' || *e == '\t')) ++e;
  if (e == b || *e != '\0' || errno == ERANGE || !std::isfinite(v)) throw ConfigError(key + ": not a number: '" + s + "'");
  return v;
}
long long parse_int(const std::string& s, const std::string& key) {
  const double v = parse_double(s, key);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) throw ConfigError(key + ": not an integer: '" + s + "'");
  return static_cast<long long>(v);
}
std::uint64_t parse_u64(const std::string& s, const std::string& key) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError(key + ": not an unsigned integer: '" + s + "'");
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ConfigError(key + ": out of range: '" + s + "'");
  }
}
std::vector<double> parse_list(const std::string& s, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item, key));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}
Vec3 parse_vec3(const std::string& s, const std::string& key) {
  const auto v = parse_list(s, key);
  if (v.size() != 3) throw ConfigError(key + ": expected three components");
  return {v[0], v[1], v[2]};
}

struct Entry {
  std::string section, key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define SSCT_DOUBLE(sec, name, field)                                                                     \
  Entry{sec, name, [](const ExperimentConfig& c) { return fmt(c.field); },                               \
        [](ExperimentConfig& c, const std::string& v) { c.field = parse_double(v, sec "." name); }}
#define SSCT_INT(sec, name, field)                                                                        \
  Entry{sec, name, [](const ExperimentConfig& c) { return std::to_string(c.field); },                    \
        [](ExperimentConfig& c, const std::string& v) { c.field = static_cast<int>(parse_int(v, sec "." name)); }}
#define SSCT_VEC3(sec, name, field)                                                                       \
  Entry{sec, name, [](const ExperimentConfig& c) { return fmt(c.field); },                               \
        [](ExperimentConfig& c, const std::string& v) { c.field = parse_vec3(v, sec "." name); }}
#define SSCT_LIST(sec, name, field)                                                                       \
  Entry{sec, name, [](const ExperimentConfig& c) { return fmt(c.field); },                               \
        [](ExperimentConfig& c, const std::string& v) { c.field = parse_list(v, sec "." name); }}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table{
      SSCT_INT("grid", "d", grid.d),
      SSCT_DOUBLE("grid", "L", grid.L),
      SSCT_INT("grid", "n", grid.n),
      SSCT_DOUBLE("physics", "lambda", lambda),
      Entry{"potential", "kind", [](const ExperimentConfig& c) { return c.potential.kind; },
            [](ExperimentConfig& c, const std::string& v) { c.potential.kind = v; }},
      SSCT_DOUBLE("potential", "amplitude", potential.amplitude),
      SSCT_DOUBLE("potential", "width", potential.width),
      SSCT_DOUBLE("potential", "support", potential.support),
      SSCT_VEC3("potential", "center", potential.center),
      SSCT_DOUBLE("potential", "shell_radius", potential.shell_radius),
      SSCT_DOUBLE("potential", "shell_alpha", potential.shell_alpha),
      SSCT_INT("potential", "shell_resolution", potential.shell_resolution),
      SSCT_DOUBLE("potential", "frac_s", potential.frac_s),
      SSCT_DOUBLE("potential", "frac_amplitude", potential.frac_amplitude),
      SSCT_DOUBLE("potential", "frac_width", potential.frac_width),
      SSCT_DOUBLE("potential", "frac_support", potential.frac_support),
      SSCT_DOUBLE("potential", "chi_width", potential.chi_width),
      SSCT_DOUBLE("potential", "chi_support", potential.chi_support),
      SSCT_VEC3("direct", "y", direct.y),
      SSCT_INT("direct", "pairs", direct.pairs),
      SSCT_DOUBLE("direct", "pair_rmin", direct.pair_rmin),
      SSCT_DOUBLE("direct", "pair_rmax", direct.pair_rmax),
      SSCT_LIST("direct", "src_radii", direct.src_radii),
      SSCT_DOUBLE("surface", "radius", surface.radius),
      SSCT_INT("surface", "resolution", surface.resolution),
      SSCT_VEC3("surface", "sigma_axis", surface.sigma_axis),
      SSCT_DOUBLE("neumann", "lambda", neumann.lambda),
      SSCT_VEC3("neumann", "pole", neumann.pole),
      SSCT_DOUBLE("neumann", "probe_radius", neumann.probe_radius),
      SSCT_DOUBLE("neumann", "sweep_lo", neumann.sweep_lo),
      SSCT_DOUBLE("neumann", "sweep_hi", neumann.sweep_hi),
      SSCT_INT("neumann", "sweep_samples", neumann.sweep_samples),
      SSCT_INT("neumann", "sweep_resolution", neumann.sweep_resolution),
      SSCT_DOUBLE("runge", "lambda", runge.lambda),
      SSCT_INT("runge", "resolution", runge.resolution),
      SSCT_VEC3("runge", "pole", runge.pole),
      SSCT_DOUBLE("runge", "omega_prime", runge.omega_prime),
      SSCT_LIST("runge", "angles", runge.angles),
      SSCT_DOUBLE("runge", "reg", runge.reg),
      SSCT_DOUBLE("solver", "tol", solver.tol),
      SSCT_INT("solver", "max_iter", solver.max_iter),
      SSCT_DOUBLE("cgo", "L", cgo.L),
      SSCT_INT("cgo", "n", cgo.n),
      SSCT_DOUBLE("cgo", "amplitude", cgo.amplitude),
      SSCT_DOUBLE("cgo", "width", cgo.width),
      SSCT_DOUBLE("cgo", "support", cgo.support),
      SSCT_DOUBLE("cgo", "lambda", cgo.lambda),
      SSCT_VEC3("cgo", "kappa", cgo.kappa),
      SSCT_LIST("cgo", "taus", cgo.taus),
      SSCT_LIST("cgo", "M", cgo.M),
      SSCT_DOUBLE("cgo", "R0", cgo.R0),
      SSCT_INT("cgo", "suite", cgo.suite),
      SSCT_INT("cgo", "carleman_n", cgo.carleman_n),
      SSCT_INT("cgo", "pair_draws", cgo.pair_draws),
      SSCT_INT("cgo", "recover_modes", cgo.recover_modes),
      SSCT_INT("cgo", "recover_n", cgo.recover_n),
      SSCT_DOUBLE("cgo", "recover_tau", cgo.recover_tau),
      Entry{"run", "seed", [](const ExperimentConfig& c) { return std::to_string(c.run.seed); },
            [](ExperimentConfig& c, const std::string& v) { c.run.seed = parse_u64(v, "run.seed"); }},
      SSCT_INT("run", "threads", run.threads),
      Entry{"run", "out", [](const ExperimentConfig& c) { return c.run.out; },
            [](ExperimentConfig& c, const std::string& v) { c.run.out = v; }},
  };
  return table;
}

std::string upper(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return s;
}

}  // namespace

void write_field(const std::string& path, const Field& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_field: cannot open " + path);
  out.write(magic, 4);
  put<std::uint32_t>(out, field_format_version);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid.d));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid.n));
  put<double>(out, f.grid.L);
  out.write(reinterpret_cast<const char*>(f.data.data()), static_cast<std::streamsize>(f.data.size() * sizeof(cplx)));
  if (!out) throw Error("write_field: write failed for " + path);
}

Field read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_field: cannot open " + path);
  char m[4];
  if (!in.read(m, 4) || std::memcmp(m, magic, 4) != 0) throw Error("read_field: bad magic in " + path);
  const auto version = get<std::uint32_t>(in, path);
  if (version != field_format_version) throw Error("read_field: unsupported version " + std::to_string(version));
  const auto d = get<std::uint32_t>(in, path);
  const auto n = get<std::uint32_t>(in, path);
  const auto L = get<double>(in, path);
  Field f(BoxGrid::make(static_cast<int>(d), L, static_cast<int>(n)));
  if (!in.read(reinterpret_cast<char*>(f.data.data()), static_cast<std::streamsize>(f.data.size() * sizeof(cplx))))
    throw Error("read_field: truncated data in " + path);
  if (in.peek() != std::char_traits<char>::eof()) throw Error("read_field: trailing bytes in " + path);
  return f;
}

std::string ExperimentConfig::to_ini() const {
  std::string out, section;
  for (const auto& e : entries()) {
    if (e.section != section) {
      out += (section.empty() ? "[" : "\n[") + e.section + "]\n";
      section = e.section;
    }
    out += e.key + " = " + e.get(*this) + "\n";
  }
  return out;
}

std::uint64_t ExperimentConfig::hash() const {
  // output location and thread count do not change results
  ExperimentConfig c = *this;
  c.run.out = "";
  c.run.threads = 1;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : c.to_ini()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  need(grid.d == 3, "grid.d: experiments run in three dimensions");
  for (auto [name, n] : {std::pair{"grid.n", grid.n}, {"cgo.n", cgo.n}, {"cgo.carleman_n", cgo.carleman_n},
                         {"cgo.recover_n", cgo.recover_n}, {"cgo.recover_modes", cgo.recover_modes}})
    need(power_of_two(n) && n >= 4, std::string(name) + ": must be a power of two >= 4");
  need(grid.L > 0 && cgo.L > 0, "grid.L, cgo.L: must be positive");
  const double half = grid.L / 2;
  const auto& p = potential;
  need(p.kind == "zero" || p.kind == "gaussian" || p.kind == "shell" || p.kind == "fractional",
       "potential.kind: one of zero, gaussian, shell, fractional");
  need(norm(p.center) + p.support <= half, "potential.support: ball exceeds L/2");
  need(norm(p.center) + p.shell_radius <= half, "potential.shell_radius: shell exceeds L/2");
  need(norm(p.center) + std::max(p.frac_support, p.chi_support) <= half, "potential.frac_support: exceeds L/2");
  need(p.width > 0 && p.frac_width > 0 && p.support > 0 && p.shell_radius > 0, "potential: widths and radii must be positive");
  need(p.shell_resolution >= 4, "potential.shell_resolution: must be >= 4");
  need(p.chi_width > 0 && p.chi_support > 0, "potential.chi_width, chi_support: must be positive");
  need(p.frac_s > 0.5 && p.frac_s < 1.0, "potential.frac_s: must lie in (1/2, 1)");
  need(cgo.support <= cgo.L / 2 && cgo.support > 0 && cgo.width > 0, "cgo.support: must lie in (0, L/2]");
  need(solver.tol > 0 && solver.max_iter > 0 && runge.reg > 0, "solver.tol, solver.max_iter, runge.reg: must be positive");
  need(lambda > 0 && neumann.lambda > 0 && runge.lambda > 0 && cgo.lambda > 0, "lambda values must be positive");
  need(direct.pairs >= 1 && direct.pair_rmin < direct.pair_rmax && direct.pair_rmax <= grid.L,
       "direct: pairs >= 1 and pair_rmin < pair_rmax <= L");
  for (double r : direct.src_radii) need(r > 0, "direct.src_radii: must be positive");
  need(surface.radius > 0 && surface.resolution >= 4, "surface: radius and resolution");
  need(norm(surface.sigma_axis) > 0, "surface.sigma_axis: must be nonzero");
  need(neumann.sweep_lo > 0 && neumann.sweep_lo < neumann.sweep_hi && neumann.sweep_samples >= 3 &&
           neumann.sweep_resolution >= 4 && neumann.probe_radius > 0 && neumann.probe_radius < surface.radius,
       "neumann: sweep bounds, samples >= 3, probe radius inside the surface");
  need(runge.resolution >= 4 && runge.omega_prime > 0 && runge.omega_prime < surface.radius, "runge: resolution, omega_prime");
  for (double a : runge.angles) need(a > 0 && a <= pi, "runge.angles: must lie in (0, pi]");
  for (double t : cgo.taus) need(t > 0, "cgo.taus: must be positive");
  for (double m : cgo.M) need(m > 1, "cgo.M: must exceed 1");
  need(cgo.R0 > 0 && cgo.suite >= 1 && cgo.pair_draws >= 1 && cgo.recover_tau > 0, "cgo: R0, suite, pair_draws, recover_tau");
  need(run.threads >= 1, "run.threads: must be >= 1");
  need(!run.out.empty(), "run.out: must be nonempty");
}

ExperimentConfig load_config(const std::string& path) {
  ExperimentConfig cfg;
  std::map<std::string, const Entry*> index;
  for (const auto& e : entries()) index[e.section + "." + e.key] = &e;
  if (!path.empty()) {
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::read_ini(path, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    for (const auto& [section, body] : tree) {
      if (body.empty()) throw ConfigError("config: key '" + section + "' outside a section");
      for (const auto& [key, value] : body) {
        const auto it = index.find(section + "." + key);
        if (it == index.end()) throw ConfigError("config: unknown key " + section + "." + key);
        it->second->set(cfg, value.get_value<std::string>());
      }
    }
  }
  for (const auto& e : entries()) {
    const std::string name = "SSCT_" + upper(e.section) + "_" + upper(e.key);
    if (const char* v = std::getenv(name.c_str())) e.set(cfg, v);
  }
  cfg.validate();
  return cfg;
}

Potential build_potential(const ExperimentConfig& cfg) {
  const auto g = BoxGrid::make(cfg.grid.d, cfg.grid.L, cfg.grid.n);
  const auto& p = cfg.potential;
  if (p.kind == "gaussian") return make_gaussian_potential(g, p.amplitude, p.center, p.width, p.support);
  if (p.kind == "shell") return make_shell_potential(g, p.center, p.shell_radius, p.shell_resolution, p.shell_alpha);
  if (p.kind == "fractional")
    return make_fractional_potential(g, p.frac_s, gaussian_field(g, p.frac_amplitude, p.center, p.frac_width, p.frac_support),
                                     gaussian_field(g, 1.0, p.center, p.chi_width, p.chi_support),
                                     norm(p.center) + std::max(p.frac_support, p.chi_support));
  return Potential::zero(g);
}

Potential build_cgo_potential(const ExperimentConfig& cfg, int n) {
  const auto& c = cfg.cgo;
  return make_gaussian_potential(BoxGrid::make(3, c.L, n), c.amplitude, {0, 0, 0}, c.width, c.support);
}

void write_text(const std::string& dir, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(dir);
  const auto path = (std::filesystem::path(dir) / name).string();
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path);
}

void write_manifest(const std::string& dir, const std::string& subcommand, const ExperimentConfig& cfg,
                    const std::vector<std::pair<std::string, double>>& timings_s) {
  nlohmann::ordered_json j;
  char hex[20];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(cfg.hash()));
  j["subcommand"] = subcommand;
  j["config_hash"] = hex;
  j["seed"] = cfg.run.seed;
  j["threads"] = cfg.run.threads;
  auto& v = j["versions"];
  v["ssct"] = "1.0.0";
  v["field_format"] = field_format_version;
  v["compiler"] = __VERSION__;
  v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  v["fftw"] = std::string(fftw_version);
  v["gsl"] = GSL_VERSION;
  v["boost"] = BOOST_LIB_VERSION;
  nlohmann::ordered_json t = nlohmann::ordered_json::object();
  for (const auto& [name, s] : timings_s) t[name] = s;
  j["timings_s"] = t;
  write_text(dir, "manifest.json", j.dump(2) + "\n");
  write_text(dir, "config.ini", cfg.to_ini());
}

}  // namespace ssct
