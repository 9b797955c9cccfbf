#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace ssct {

struct KrylovResult {
  Eigen::VectorXcd x;
  std::vector<double> history;  // relative residual after each inner step
  int iterations = 0;
  bool converged = false;
};

// Restarted GMRES(m) for A x = b. history[0] is the residual of the initial guess.
inline KrylovResult gmres(const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& A,
                          const Eigen::VectorXcd& b, Eigen::VectorXcd x0, double tol, int max_iter,
                          int restart = 60) {
  using Vec = Eigen::VectorXcd;
  using C = std::complex<double>;
  KrylovResult out;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    out.x = Vec::Zero(b.size());
    out.history.push_back(0.0);
    out.converged = true;
    return out;
  }
  Vec x = x0.size() == b.size() ? std::move(x0) : Vec::Zero(b.size());
  Vec r = b - A(x);
  double rel = r.norm() / bnorm;
  out.history.push_back(rel);
  while (out.iterations < max_iter && rel > tol) {
    const int m = restart;
    std::vector<Vec> V;
    V.reserve(m + 1);
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
    std::vector<C> cs(m), sn(m);
    Eigen::VectorXcd g = Eigen::VectorXcd::Zero(m + 1);
    const double beta = r.norm();
    V.push_back(r / beta);
    g[0] = beta;
    int j = 0;
    for (; j < m && out.iterations < max_iter; ++j) {
      Vec w = A(V[j]);
      for (int i = 0; i <= j; ++i) {
        H(i, j) = V[i].dot(w);
        w -= H(i, j) * V[i];
      }
      // one reorthogonalization pass keeps the basis orthogonal in floating point
      for (int i = 0; i <= j; ++i) {
        const C c = V[i].dot(w);
        H(i, j) += c;
        w -= c * V[i];
      }
      const double hn = w.norm();
      H(j + 1, j) = hn;
      for (int i = 0; i < j; ++i) {
        const C t = std::conj(cs[i]) * H(i, j) + std::conj(sn[i]) * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      const double a = std::abs(H(j, j));
      const double den = std::hypot(a, hn);
      if (den == 0.0) {
        cs[j] = 1.0;
        sn[j] = 0.0;
      } else {
        cs[j] = H(j, j) / den;
        sn[j] = hn / den;
      }
      H(j, j) = den;
      H(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = std::conj(cs[j]) * g[j];
      ++out.iterations;
      rel = std::abs(g[j + 1]) / bnorm;
      out.history.push_back(rel);
      if (rel <= tol || hn == 0.0) {
        ++j;
        break;
      }
      V.push_back(w / hn);
    }
    Eigen::VectorXcd y = H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    for (int i = 0; i < j; ++i) x += y[i] * V[i];
    r = b - A(x);
    rel = r.norm() / bnorm;
    out.history.back() = rel;
  }
  out.x = std::move(x);
  out.converged = rel <= tol;
  return out;
}

}  // namespace ssct
