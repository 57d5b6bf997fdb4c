#pragma once

#include <algorithm>
#include <cmath>

#include "acl/common.hpp"

namespace acl {

// Conjugate exponent: 1/p + 1/p* = 1, with the conventions 1* = inf, inf* = 1.
inline double conjugate_exponent(double p) {
  require(p >= 1.0, "conjugate_exponent: p must be >= 1");
  if (p == 1.0) return kInf;
  if (std::isinf(p)) return 1.0;
  return p / (p - 1.0);
}

inline double inv_exponent(double p) { return std::isinf(p) ? 0.0 : 1.0 / p; }

// Dimension factor n^{max{1/p - 1/q, 1/q - 1/p}} relating induced matrix norms.
inline double dimension_factor(double p, double q, std::size_t n) {
  require(p >= 1.0 && q >= 1.0 && n >= 1, "dimension_factor: need p,q >= 1, n >= 1");
  const double e = std::abs(inv_exponent(p) - inv_exponent(q));
  return std::pow(static_cast<double>(n), e);
}

// lp norm of a vector expression for any p in [1, inf].
template <typename Derived>
double lp_norm(const Eigen::MatrixBase<Derived>& x, double p) {
  require(p >= 1.0, "lp_norm: p must be >= 1");
  if (std::isinf(p)) return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
  if (p == 1.0) return x.cwiseAbs().sum();
  if (p == 2.0) return x.norm();
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(std::abs(x(i)), p);
  return std::pow(s, 1.0 / p);
}

// Unit-ball maximizer of u^T g over ||u||_r <= 1 (Holder equality direction).
// Returns 0 where the choice is immaterial: sign(0) = 0, and ties in the
// r = 1 case break to the first maximal coordinate.
inline Vector holder_dual_unit(const Vector& g, double r) {
  require(r >= 1.0, "holder_dual_unit: r must be >= 1");
  Vector u = Vector::Zero(g.size());
  if (std::isinf(r)) {
    for (Eigen::Index i = 0; i < g.size(); ++i)
      u[i] = (g[i] > 0.0) ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
    return u;
  }
  if (r == 2.0) {
    const double n2 = g.norm();
    if (n2 > 0.0) u = g / n2;
    return u;
  }
  if (r == 1.0) {
    Eigen::Index best = -1;
    double best_abs = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double a = std::abs(g[i]);
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (best >= 0) u[best] = (g[best] > 0.0) ? 1.0 : -1.0;
    return u;
  }
  throw std::invalid_argument("holder_dual_unit: only r in {1, 2, inf} supported");
}

template <typename Derived>
double frobenius_norm(const Eigen::MatrixBase<Derived>& a) {
  return a.norm();
}

// ||A||_{a,b}: lb norm of the vector of la norms of the rows.
template <typename Derived>
double group_norm(const Eigen::MatrixBase<Derived>& a, double row_p, double outer_p) {
  Vector rows(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) rows[i] = lp_norm(a.row(i).transpose(), row_p);
  return lp_norm(rows, outer_p);
}

// ||A||_{1,inf}: max over rows of the row l1 norm.
template <typename Derived>
double one_inf_norm(const Eigen::MatrixBase<Derived>& a) {
  return group_norm(a, 1.0, kInf);
}

// Largest singular value by power iteration on A^T A (or A A^T, whichever is
// smaller), run to `rel_tol` relative change in the Rayleigh quotient.
double spectral_norm_power_iteration(const Matrix& a, double rel_tol = 1e-10,
                                     int max_iter = 100000);

// Induced p -> p operator norm; exact for p in {1, inf}, power iteration for 2.
double induced_norm(const Matrix& a, double p);

}  // namespace acl
