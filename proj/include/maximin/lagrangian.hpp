#pragma once

#include "maximin/core.hpp"
#include "maximin/loss.hpp"

namespace maximin {

/// State of the saddle-point iteration: primal weights w and one dual
/// multiplier z_i per constraint w_i^2 = 1.
struct DualPair {
  Vector w;
  Vector z;
};

namespace detail {
inline void check_pair(const LossModel& model, const DualPair& p) {
  require(p.w.size() == model.dim(), "DualPair: dim(w) != n");
  require(p.z.size() == model.dim(), "DualPair: dim(z) != n");
  require(all_finite(p.w) && all_finite(p.z), "DualPair: non-finite entries");
}
}  // namespace detail

/// L(w, z) = f(w) + w^T diag(z) w - z^T 1.
inline double lagrangian_value(const LossModel& model, const DualPair& p) {
  detail::check_pair(model, p);
  return model.value(p.w) + p.w.cwiseProduct(p.z).dot(p.w) - p.z.sum();
}

/// grad_w L = grad f(w) + 2 diag(z) w.
inline Vector grad_w(const LossModel& model, const DualPair& p) {
  detail::check_pair(model, p);
  return model.gradient(p.w) + 2.0 * p.z.cwiseProduct(p.w);
}

/// grad_z L, entries w_i^2 - 1.
inline Vector grad_z(const LossModel& model, const DualPair& p) {
  detail::check_pair(model, p);
  return p.w.cwiseProduct(p.w).array() - 1.0;
}

/// The dual point paired with a binary w_star: z* = -1/2 diag(w_star) grad f(w_star),
/// the unique z making (w_star, z*) stationary in w under this Lagrangian's
/// +2 diag(z) w convention.
inline Vector analytic_dual(const LossModel& model, const Vector& w_star) {
  require(is_sign_vector(w_star), "analytic_dual: w_star must be a sign vector");
  require(w_star.size() == model.dim(), "analytic_dual: dim(w_star) != n");
  return -0.5 * w_star.cwiseProduct(model.gradient(w_star));
}

/// grad^2_w L = grad^2 f(w) + 2 diag(z).
inline Matrix hess_w(const LossModel& model, const DualPair& p) {
  detail::check_pair(model, p);
  Matrix h = model.hessian(p.w);
  h.diagonal() += 2.0 * p.z;
  return h;
}

/// grad^2_{wz} L = 2 diag(w).
inline Matrix cross_hess(const LossModel& model, const DualPair& p) {
  detail::check_pair(model, p);
  return Matrix((2.0 * p.w).asDiagonal());
}

}  // namespace maximin
