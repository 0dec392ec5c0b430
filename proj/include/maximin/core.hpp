#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace maximin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline bool all_finite(const Vector& v) { return v.allFinite(); }
inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Entrywise sign with sign(0) = +1, so the result is always in {-1,+1}^n.
inline Vector sign_vector(const Vector& w) {
  Vector s(w.size());
  for (Index i = 0; i < w.size(); ++i) s[i] = w[i] >= 0.0 ? 1.0 : -1.0;
  return s;
}

inline bool is_sign_vector(const Vector& w) {
  for (Index i = 0; i < w.size(); ++i)
    if (w[i] != 1.0 && w[i] != -1.0) return false;
  return w.size() > 0;
}

/// Fraction of sign disagreements, ||a - b||_1 / (2 n). 0 = identical, 1 = all flipped.
inline double hamming_error(const Vector& a, const Vector& b) {
  if (a.size() != b.size() || a.size() == 0)
    throw std::invalid_argument("hamming_error: size mismatch");
  return (a - b).lpNorm<1>() / (2.0 * static_cast<double>(a.size()));
}

/// ||u - u_hat||_2 / ||u||_2.
inline double nrmse(const Vector& u, const Vector& u_hat) {
  if (u.size() != u_hat.size()) throw std::invalid_argument("nrmse: size mismatch");
  const double denom = u.norm();
  if (denom == 0.0) throw std::invalid_argument("nrmse: reference vector is zero");
  return (u - u_hat).norm() / denom;
}

inline double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

/// Index attaining max |v_i| (first on ties); -1 for empty input.
inline int argmax_abs(const Vector& v) {
  int best = -1;
  double best_val = -1.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    if (a > best_val) {
      best_val = a;
      best = static_cast<int>(i);
    }
  }
  return best;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace maximin
