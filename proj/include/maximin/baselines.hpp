#pragma once

#include "maximin/core.hpp"
#include "maximin/loss.hpp"
#include "maximin/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>

namespace maximin {

struct BaselineResult {
  std::string method;
  Vector w_binary;
  std::optional<Vector> w_relaxed;
  int iters = 0;
  /// Loss value at the returned point; for sdr, the relaxed semidefinite
  /// objective tr(QY) (a lower bound on the binary optimum).
  double objective = 0.0;
  bool converged = true;
};

struct DescentOptions {
  int max_iters = 20000;
  double grad_tol = 1e-8;
  double step_tol = 1e-8;
};

namespace detail {

/// Backtracking gradient descent on f. Non-smooth kinds (l1) stop on step
/// size collapse rather than the gradient test.
inline std::pair<Vector, int> descend(const LossModel& model, Vector w, const DescentOptions& opts,
                                      bool& converged) {
  double fw = model.value(w);
  double step = 1.0;
  converged = false;
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    const Vector g = model.gradient(w);
    if (inf_norm(g) <= opts.grad_tol) {
      converged = true;
      break;
    }
    step = std::min(step * 2.0, 1e4);
    bool moved = false;
    while (step > 1e-16) {
      const Vector w_try = w - step * g;
      const double f_try = model.value(w_try);
      if (f_try <= fw - 1e-4 * step * g.squaredNorm()) {
        const bool tiny = (w_try - w).lpNorm<Eigen::Infinity>() <= opts.step_tol;
        w = w_try;
        fw = f_try;
        moved = true;
        converged = tiny;
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      converged = true;  // no descent direction to numerical precision
      break;
    }
    if (converged) break;
  }
  return {w, it};
}

}  // namespace detail

/// Unconstrained fit followed by entrywise sign. Squared loss uses the normal
/// equations with a 1e-10 ridge (rank-deficient systems resolve to the
/// near-minimum-norm solution); other losses use first-order descent.
inline BaselineResult lr_round(const LossModel& model, const DescentOptions& opts = {}) {
  BaselineResult out;
  out.method = "lr";
  if (model.kind() == LossKind::squared) {
    Matrix A = model.gram();
    A.diagonal().array() += 1e-10;
    const Vector w = Eigen::LDLT<Matrix>(A).solve(model.X().transpose() * model.y());
    out.w_relaxed = w;
    out.w_binary = sign_vector(w);
    out.iters = 0;
    out.objective = model.value(out.w_binary);
    return out;
  }
  bool converged = false;
  auto [w, iters] = detail::descend(model, Vector::Zero(model.dim()), opts, converged);
  out.w_relaxed = w;
  out.w_binary = sign_vector(w);
  out.iters = iters;
  out.converged = converged;
  out.objective = model.value(out.w_binary);
  return out;
}

/// Box relaxation w_i in [-1, 1]: projected first-order descent with
/// entrywise clipping, stopped when the iterate change drops below step_tol.
inline BaselineResult lpr(const LossModel& model, const DescentOptions& opts = {}) {
  BaselineResult out;
  out.method = "lpr";
  const Index n = model.dim();
  Vector w = Vector::Zero(n);
  double fw = model.value(w);
  double step = 1.0;
  bool converged = false;
  int it = 0;
  auto clip = [](Vector v) {
    return v.cwiseMax(-1.0).cwiseMin(1.0);
  };
  for (; it < opts.max_iters; ++it) {
    const Vector g = model.gradient(w);
    step = std::min(step * 2.0, 1e4);
    bool moved = false;
    while (step > 1e-16) {
      const Vector w_try = clip(w - step * g);
      const Vector diff = w_try - w;
      const double dn = diff.lpNorm<Eigen::Infinity>();
      if (dn == 0.0) break;  // fixed point of the projected step: KKT holds
      const double f_try = model.value(w_try);
      if (f_try <= fw - (1e-4 / step) * diff.squaredNorm()) {
        w = w_try;
        fw = f_try;
        moved = true;
        converged = dn <= opts.step_tol;
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      converged = true;  // projected step made no progress: stationary
      break;
    }
    if (converged) break;
  }
  out.w_relaxed = w;
  out.w_binary = sign_vector(w);
  out.iters = it;
  out.converged = converged;
  out.objective = model.value(out.w_binary);
  return out;
}

struct SteOptions {
  int steps = 1500;
  double step_size = 0.1;
  std::uint64_t seed = 0;
  std::optional<Vector> w0;
  double latent_clip = 1.5;  // keeps saturated coordinates re-activatable
};

/// Straight-through estimator: forward pass at sign(w), backward pass masks
/// the gradient to coordinates with |w_i| <= 1.
inline BaselineResult ste(const LossModel& model, const SteOptions& opts) {
  require(opts.steps >= 1, "ste: steps must be >= 1");
  require(opts.step_size > 0.0, "ste: step_size must be > 0");
  const Index n = model.dim();
  Vector w;
  if (opts.w0.has_value()) {
    require(opts.w0->size() == n, "ste: dim(w0) != n");
    w = *opts.w0;
  } else {
    Rng rng(opts.seed);
    w = rng.uniform_vector(n, -1.0, 1.0);
  }
  for (int t = 0; t < opts.steps; ++t) {
    const Vector g = model.gradient(sign_vector(w));
    for (Index i = 0; i < n; ++i)
      if (std::abs(w[i]) <= 1.0) w[i] -= opts.step_size * g[i];
    w = w.cwiseMax(-opts.latent_clip).cwiseMin(opts.latent_clip);
  }
  BaselineResult out;
  out.method = "ste";
  out.w_relaxed = w;
  out.w_binary = sign_vector(w);
  out.iters = opts.steps;
  out.objective = model.value(out.w_binary);
  return out;
}

struct SdrOptions {
  int rank = 0;  // 0 = ceil(sqrt(2(n+1)))
  int restarts = 3;
  int max_iters = 5000;
  double grad_tol = 1e-10;
  std::uint64_t seed = 0;
};

/// Semidefinite relaxation of the homogenized binary least-squares problem,
/// min tr(QY) s.t. Y >= 0, diag(Y) = 1, solved through the low-rank
/// factorization Y = V V^T with unit-norm rows and projected gradient
/// descent; binarization rounds the top eigenvector, de-homogenized by the
/// sign of its last coordinate.
inline BaselineResult sdr(const LossModel& model, const SdrOptions& opts = {}) {
  require(model.kind() == LossKind::squared, "sdr: only the squared loss is supported");
  const Index n = model.dim();
  require(n <= 200, "sdr: n > 200 exceeds the desk-scale budget");

  // Q = [[X^T X, -X^T y], [-y^T X, y^T y]] so that [w;t]^T Q [w;t] = ||Xw - t y||^2.
  Matrix Q(n + 1, n + 1);
  Q.topLeftCorner(n, n) = model.gram();
  const Vector b = model.X().transpose() * model.y();
  Q.topRightCorner(n, 1) = -b;
  Q.bottomLeftCorner(1, n) = -b.transpose();
  Q(n, n) = model.y().squaredNorm();

  const int r = opts.rank > 0
                    ? opts.rank
                    : static_cast<int>(std::ceil(std::sqrt(2.0 * static_cast<double>(n + 1))));
  const double qscale = std::max(1.0, Q.cwiseAbs().maxCoeff() * (n + 1));

  auto normalize_rows = [](Matrix& V) {
    for (Index i = 0; i < V.rows(); ++i) V.row(i) /= V.row(i).norm();
  };

  Matrix best_V;
  double best_obj = std::numeric_limits<double>::infinity();
  int total_iters = 0;
  for (int restart = 0; restart < std::max(1, opts.restarts); ++restart) {
    Rng rng(mix_seed(opts.seed, static_cast<std::uint64_t>(restart)));
    Matrix V = rng.normal_matrix(n + 1, r);
    normalize_rows(V);
    double obj = (V.transpose() * Q * V).trace();
    double step = 1.0 / qscale;
    for (int it = 0; it < opts.max_iters; ++it) {
      ++total_iters;
      const Matrix G = 2.0 * Q * V;
      // Riemannian gradient on the product of unit spheres: per-row tangent component.
      Matrix RG = G;
      for (Index i = 0; i <= n; ++i) RG.row(i) -= G.row(i).dot(V.row(i)) * V.row(i);
      if (RG.cwiseAbs().maxCoeff() <= opts.grad_tol * qscale) break;
      step = std::min(step * 2.0, 1e3 / qscale);
      bool moved = false;
      while (step > 1e-18) {
        Matrix V_try = V - step * RG;
        normalize_rows(V_try);
        const double obj_try = (V_try.transpose() * Q * V_try).trace();
        if (obj_try < obj) {
          V = std::move(V_try);
          obj = obj_try;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    if (obj < best_obj) {
      best_obj = obj;
      best_V = V;
    }
  }

  Eigen::SelfAdjointEigenSolver<Matrix> es(best_V * best_V.transpose());
  const Vector u = es.eigenvectors().col(n);  // top eigenvector
  const double flip = u[n] >= 0.0 ? 1.0 : -1.0;
  const double top_eig = std::max(es.eigenvalues()(n), 0.0);

  BaselineResult out;
  out.method = "sdr";
  out.w_relaxed = flip * std::sqrt(top_eig) * u.head(n);
  out.w_binary = sign_vector(flip * u.head(n));
  out.iters = total_iters;
  out.objective = best_obj;
  return out;
}

}  // namespace maximin
