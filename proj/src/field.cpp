#include "ssct/field.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "ssct/parallel.hpp"

namespace ssct {

namespace {

// FFTW planning is not thread safe; execution with new-array calls is.
class PlanCache {
 public:
  fftw_plan get(int d, int n, int dir) {
    std::lock_guard lock(mu_);
    auto key = std::make_tuple(d, n, dir);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    const std::size_t N = static_cast<std::size_t>(std::pow(n, d));
    auto* buf = fftw_alloc_complex(N);
    int dims[3] = {n, n, n};
    fftw_plan p = fftw_plan_dft(d, dims, buf, buf, dir, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    plans_.emplace(key, p);
    return p;
  }

 private:
  std::mutex mu_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache c;
  return c;
}

void run_fft(const BoxGrid& g, std::vector<cplx>& v, int dir) {
  fftw_plan p = plan_cache().get(g.d, g.n, dir);
  auto* ptr = reinterpret_cast<fftw_complex*>(v.data());
  fftw_execute_dft(p, ptr, ptr);
}

void check_same(const Field& a, const Field& b) {
  if (!(a.grid == b.grid)) throw DomainError("Field: grid mismatch");
}

}  // namespace

Field::Field(const BoxGrid& g, std::vector<cplx> v) : grid(g), data(std::move(v)) {
  if (data.size() != g.size()) throw DomainError("Field: size mismatch");
}

Field Field::from_function(const BoxGrid& g, const std::function<cplx(const Vec3&)>& f) {
  Field out(g);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(g.point(i));
  return out;
}

Field& Field::operator+=(const Field& o) {
  check_same(*this, o);
  for (std::size_t i = 0; i < size(); ++i) data[i] += o.data[i];
  return *this;
}
Field& Field::operator-=(const Field& o) {
  check_same(*this, o);
  for (std::size_t i = 0; i < size(); ++i) data[i] -= o.data[i];
  return *this;
}
Field& Field::operator*=(cplx s) {
  for (auto& v : data) v *= s;
  return *this;
}
double Field::l2() const {
  double s = 0.0;
  for (const auto& v : data) s += std::norm(v);
  return std::sqrt(s * grid.cell_volume());
}
double Field::max_abs() const {
  double m = 0.0;
  for (const auto& v : data) m = std::max(m, std::abs(v));
  return m;
}
bool Field::is_zero() const {
  for (const auto& v : data)
    if (v != 0.0) return false;
  return true;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(cplx s, Field a) { return a *= s; }
Field hadamard(const Field& a, const Field& b) {
  check_same(a, b);
  Field out(a.grid);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

cplx integrate_product(const Field& a, const Field& b) {
  check_same(a, b);
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * a.grid.cell_volume();
}
cplx inner(const Field& a, const Field& b) {
  check_same(a, b);
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
  return s * a.grid.cell_volume();
}

std::vector<cplx> fft_forward(const Field& f) {
  std::vector<cplx> v = f.data;
  run_fft(f.grid, v, FFTW_FORWARD);
  return v;
}

Field fft_inverse(const BoxGrid& g, std::vector<cplx> spec) {
  if (spec.size() != g.size()) throw DomainError("fft_inverse: size mismatch");
  run_fft(g, spec, FFTW_BACKWARD);
  const double s = 1.0 / static_cast<double>(g.size());
  for (auto& v : spec) v *= s;
  return Field(g, std::move(spec));
}

std::vector<cplx> lattice_symbol(const BoxGrid& g, const std::function<cplx(const Vec3&)>& m) {
  std::vector<cplx> out(g.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m(g.frequency(i));
  return out;
}

Field apply_multiplier(const Field& f, const std::vector<cplx>& m) {
  auto s = fft_forward(f);
  if (m.size() != s.size()) throw DomainError("apply_multiplier: size mismatch");
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= m[i];
  return fft_inverse(f.grid, std::move(s));
}

Field apply_multiplier(const Field& f, const std::function<cplx(const Vec3&)>& m) {
  return apply_multiplier(f, lattice_symbol(f.grid, m));
}

Field spectral_laplacian(const Field& f) {
  return apply_multiplier(f, [](const Vec3& xi) { return cplx(-dot(xi, xi)); });
}

Field spectral_derivative(const Field& f, int axis) {
  const BoxGrid& g = f.grid;
  auto s = fft_forward(f);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto j = g.index3(i);
    s[i] *= (j[axis] == g.n / 2) ? cplx(0.0) : I * g.xi(j[axis]);
  }
  return fft_inverse(g, std::move(s));
}

std::vector<cplx> trace_at(const Field& f, const std::vector<Vec3>& points) {
  const BoxGrid& g = f.grid;
  const int n = g.n;
  auto c = fft_forward(f);
  const double invN = 1.0 / static_cast<double>(g.size());
  for (auto& v : c) v *= invN;
  for (const auto& p : points)
    if (!g.contains(p)) throw DomainError("trace_at: point outside the box");
  std::vector<cplx> out(points.size());
  // per-axis basis e_j(x) = exp(i xi_j (x + L)); Nyquist slot uses cos
  auto basis = [&](double x, std::vector<cplx>& e) {
    e.resize(n);
    const double t = x + g.L;
    for (int j = 0; j < n; ++j) {
      if (j == n / 2)
        e[j] = std::cos(g.xi(j) * t);
      else
        e[j] = std::polar(1.0, g.xi(j) * t);
    }
  };
  parallel_for(points.size(), [&](std::size_t q) {
    std::vector<cplx> e0, e1, e2;
    basis(points[q][0], e0);
    basis(points[q][1], e1);
    cplx acc = 0.0;
    if (g.d == 2) {
      for (int a = 0; a < n; ++a) {
        cplx row = 0.0;
        for (int b = 0; b < n; ++b) row += c[static_cast<std::size_t>(a) * n + b] * e1[b];
        acc += row * e0[a];
      }
    } else {
      basis(points[q][2], e2);
      for (int a = 0; a < n; ++a) {
        cplx plane = 0.0;
        for (int b = 0; b < n; ++b) {
          const cplx* r = &c[(static_cast<std::size_t>(a) * n + b) * n];
          cplx row = 0.0;
          for (int cc = 0; cc < n; ++cc) row += r[cc] * e2[cc];
          plane += row * e1[b];
        }
        acc += plane * e0[a];
      }
    }
    out[q] = acc;
  });
  return out;
}

double l2_where(const Field& f, const std::function<bool(const Vec3&)>& keep) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (keep(f.grid.point(i))) s += std::norm(f[i]);
  return std::sqrt(s * f.grid.cell_volume());
}

double l2_in_ball(const Field& f, double radius) {
  return l2_where(f, [radius](const Vec3& x) { return norm(x) <= radius; });
}

}  // namespace ssct
