#pragma once
#include <cmath>
#include <cstdint>
#include <vector>

#include "netform/errors.hpp"

namespace netform {

// Dense symmetric eigendecomposition by cyclic Jacobi rotations. Treatment
// dimensions are tiny (intercept + a handful of network statistics), so a
// dependency-free O(d^3)-per-sweep solver is both fast and bit-deterministic.
// For the PSD Gram matrices used throughout, the eigenvalues are the singular
// values, which makes this the rank-revealing factorization behind every
// C / C_j solve.
class SymEigen {
 public:
  SymEigen() = default;

  // a: row-major symmetric d x d.
  static SymEigen compute(const double* a, int d) {
    SymEigen f;
    f.d_ = d;
    f.vals_.assign(static_cast<std::size_t>(d), 0.0);
    f.vecs_.assign(static_cast<std::size_t>(d) * d, 0.0);
    std::vector<double> m(a, a + static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i) f.vecs_[static_cast<std::size_t>(i) * d + i] = 1.0;

    auto at = [&](int i, int j) -> double& { return m[static_cast<std::size_t>(i) * d + j]; };
    for (int sweep = 0; sweep < 64; ++sweep) {
      double off = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) off += at(i, j) * at(i, j);
      if (off < 1e-300) break;
      double norm = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) norm += at(i, j) * at(i, j);
      if (off <= 1e-30 * norm) break;

      for (int p = 0; p < d - 1; ++p) {
        for (int q = p + 1; q < d; ++q) {
          double apq = at(p, q);
          if (apq == 0.0) continue;
          double app = at(p, p), aqq = at(q, q);
          double tau = (aqq - app) / (2.0 * apq);
          double t = (tau >= 0 ? 1.0 : -1.0) /
                     (std::abs(tau) + std::sqrt(1.0 + tau * tau));
          double c = 1.0 / std::sqrt(1.0 + t * t);
          double s = t * c;
          for (int k = 0; k < d; ++k) {
            double akp = at(k, p), akq = at(k, q);
            at(k, p) = c * akp - s * akq;
            at(k, q) = s * akp + c * akq;
          }
          for (int k = 0; k < d; ++k) {
            double apk = at(p, k), aqk = at(q, k);
            at(p, k) = c * apk - s * aqk;
            at(q, k) = s * apk + c * aqk;
          }
          for (int k = 0; k < d; ++k) {
            std::size_t kp = static_cast<std::size_t>(k) * d + p;
            std::size_t kq = static_cast<std::size_t>(k) * d + q;
            double vkp = f.vecs_[kp], vkq = f.vecs_[kq];
            f.vecs_[kp] = c * vkp - s * vkq;
            f.vecs_[kq] = s * vkp + c * vkq;
          }
        }
      }
    }
    for (int i = 0; i < d; ++i) f.vals_[static_cast<std::size_t>(i)] = at(i, i);
    return f;
  }

  int dim() const { return d_; }
  const std::vector<double>& eigenvalues() const { return vals_; }

  double max_abs_eigenvalue() const {
    double v = 0.0;
    for (double w : vals_) v = std::max(v, std::abs(w));
    return v;
  }

  double min_abs_eigenvalue() const {
    double v = std::numeric_limits<double>::infinity();
    for (double w : vals_) v = std::min(v, std::abs(w));
    return v;
  }

  // Relative rank test: smallest singular value against rel_tol * largest.
  bool full_rank(double rel_tol) const {
    double hi = max_abs_eigenvalue();
    if (hi == 0.0) return false;
    return min_abs_eigenvalue() >= rel_tol * hi;
  }

  // Solve A x = b through the factorization (never forms an inverse matrix).
  void solve(const double* b, double* x) const {
    for (int i = 0; i < d_; ++i) x[i] = 0.0;
    for (int k = 0; k < d_; ++k) {
      double w = vals_[static_cast<std::size_t>(k)];
      if (w == 0.0) throw NumericalError("SymEigen::solve: singular system");
      double proj = 0.0;
      for (int i = 0; i < d_; ++i)
        proj += vecs_[static_cast<std::size_t>(i) * d_ + k] * b[i];
      proj /= w;
      for (int i = 0; i < d_; ++i)
        x[i] += vecs_[static_cast<std::size_t>(i) * d_ + k] * proj;
    }
  }

  std::vector<double> solve(const std::vector<double>& b) const {
    std::vector<double> x(static_cast<std::size_t>(d_), 0.0);
    solve(b.data(), x.data());
    return x;
  }

 private:
  int d_ = 0;
  std::vector<double> vals_;   // eigenvalues
  std::vector<double> vecs_;   // row-major, column k = eigenvector k
};

// Rank-1 accumulation helper: g += w * v v' (row-major symmetric storage).
inline void add_outer(std::vector<double>& g, const double* v, int d, double w = 1.0) {
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g[static_cast<std::size_t>(i) * d + j] += w * v[i] * v[j];
}

}  // namespace netform
