#pragma once

#include "maximin/core.hpp"
#include "maximin/lagrangian.hpp"
#include "maximin/loss.hpp"
#include "maximin/random.hpp"
#include "maximin/solver.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace maximin {

/// Instance provenance: the binary vector and noise behind y = X w* + e.
struct GroundTruth {
  Vector w_star;
  Vector e;
  double sigma = 0.0;  // noise scale used to generate e (outlier magnitude for sparse noise)
  std::optional<std::vector<bool>> outlier_mask;
};

struct ConditionDetail {
  int tightest_index = -1;            // coordinate attaining the lhs infinity norm
  std::vector<int> eq16_violations;   // robust check only: indices with delta < |e_i| < delta + 2||x_i||
  double lhs_delta_scaled = std::numeric_limits<double>::quiet_NaN();  // robust check only
};

/// Outcome of a theorem-condition check: holds iff lhs < rhs strictly
/// (and, for the robust check, every per-index residual screen passes).
struct ConditionReport {
  bool holds = false;
  double lhs = 0.0;   // the infinity-norm side
  double rhs = 0.0;   // the smallest-eigenvalue side
  double margin = 0.0;  // rhs - lhs
  ConditionDetail detail;
};

namespace detail {

/// Smallest eigenvalue by symmetric eigendecomposition; values below 1e-10
/// are reported as 0 so rank-deficient Gram matrices fail the strict check.
inline double smallest_eigenvalue_floored(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  const double lam = es.eigenvalues()(0);
  return lam < 1e-10 ? 0.0 : lam;
}

}  // namespace detail

/// ||grad f(w*)||_inf < lambda_min(grad^2 f(w*)): the general condition under
/// which (w*, analytic dual) is the unique local maximin point.
inline ConditionReport check_general(const LossModel& model, const Vector& w_star) {
  require(is_sign_vector(w_star), "check_general: w_star must be a sign vector");
  require(w_star.size() == model.dim(), "check_general: dim(w_star) != n");
  ConditionReport r;
  const Vector g = model.gradient(w_star);
  r.lhs = inf_norm(g);
  r.detail.tightest_index = argmax_abs(g);
  r.rhs = detail::smallest_eigenvalue_floored(model.hessian(w_star));
  r.margin = r.rhs - r.lhs;
  r.holds = r.lhs < r.rhs;
  return r;
}

/// Linear-regression specialization: ||X^T e||_inf < lambda_min(X^T X).
/// Verdict-equivalent to check_general on the squared loss (both sides carry
/// the same factor 2).
inline ConditionReport check_linear(const Matrix& X, const GroundTruth& gt) {
  require(gt.e.size() == X.rows(), "check_linear: dim(e) != m");
  ConditionReport r;
  const Vector xte = X.transpose() * gt.e;
  r.lhs = inf_norm(xte);
  r.detail.tightest_index = argmax_abs(xte);
  r.rhs = detail::smallest_eigenvalue_floored(X.transpose() * X);
  r.margin = r.rhs - r.lhs;
  r.holds = r.lhs < r.rhs;
  return r;
}

/// Robust-regression condition: ||X^T c||_inf < lambda_min(sum_i d_i x_i x_i^T)
/// with c_i = e_i, d_i = 1 on |e_i| <= delta and c_i = sign(e_i), d_i = 0
/// beyond (the text's c verbatim; the delta-scaled variant delta*sign(e_i) is
/// reported in detail since the two differ for delta != 1), plus the
/// per-index screen: |e_i| <= delta or |e_i| >= delta + 2||x_i||.
inline ConditionReport check_huber(const Matrix& X, const GroundTruth& gt, double delta) {
  require(delta > 0.0, "check_huber: delta must be > 0");
  require(gt.e.size() == X.rows(), "check_huber: dim(e) != m");
  const Index m = X.rows(), n = X.cols();
  ConditionReport r;

  Vector c(m), c_scaled(m);
  Matrix quad = Matrix::Zero(n, n);
  for (Index i = 0; i < m; ++i) {
    const double ei = gt.e[i];
    if (std::abs(ei) <= delta) {
      c[i] = ei;
      c_scaled[i] = ei;
      quad += X.row(i).transpose() * X.row(i);
    } else {
      c[i] = ei > 0.0 ? 1.0 : -1.0;
      c_scaled[i] = delta * c[i];
    }
    const double row_norm = X.row(i).norm();
    if (std::abs(ei) > delta && std::abs(ei) < delta + 2.0 * row_norm)
      r.detail.eq16_violations.push_back(static_cast<int>(i));
  }

  const Vector xtc = X.transpose() * c;
  r.lhs = inf_norm(xtc);
  r.detail.tightest_index = argmax_abs(xtc);
  r.detail.lhs_delta_scaled = inf_norm(X.transpose() * c_scaled);
  r.rhs = detail::smallest_eigenvalue_floored(quad);
  r.margin = r.rhs - r.lhs;
  r.holds = (r.lhs < r.rhs) && r.detail.eq16_violations.empty();
  return r;
}

struct SubquadraticReport {
  int trials = 0;
  int violations = 0;         // pairs with q >= 0 (strict negativity violated)
  int strong_violations = 0;  // pairs with f(w1) - f(w2) < q - strong_tol
  double worst_margin = -std::numeric_limits<double>::infinity();        // max q
  double worst_strong_residual = std::numeric_limits<double>::infinity();  // min f1-f2-q
};

class SamplerExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Samples pairs with f(w1) < f(w2) (resampling ties) and evaluates
///   q = (w1-w2)^T grad f(w2) + 1/2 (w1-w2)^T grad^2 f(w2) (w1-w2).
/// Sub-quadratic means q < 0 on every pair; the strong variant additionally
/// requires f(w1) - f(w2) >= q. strong_tol absorbs roundoff in the equality
/// case (exact for quadratics).
template <typename PairSampler>
SubquadraticReport subquadratic_probe(const LossModel& model, PairSampler&& sampler, int trials,
                                      double strong_tol = 0.0) {
  require(trials >= 1, "subquadratic_probe: trials must be >= 1");
  SubquadraticReport rep;
  rep.trials = trials;
  long attempts = 0;
  const long max_attempts = 100L * trials;
  for (int t = 0; t < trials; ++t) {
    Vector w1, w2;
    double f1 = 0.0, f2 = 0.0;
    while (true) {
      if (++attempts > max_attempts)
        throw SamplerExhausted("subquadratic_probe: cannot sample pairs with f(w1) < f(w2)");
      auto [a, b] = sampler();
      f1 = model.value(a);
      f2 = model.value(b);
      if (f1 == f2) continue;
      if (f1 < f2) {
        w1 = std::move(a);
        w2 = std::move(b);
      } else {
        w1 = std::move(b);
        w2 = std::move(a);
        std::swap(f1, f2);
      }
      break;
    }
    const Vector d = w1 - w2;
    const double q = d.dot(model.gradient(w2)) + 0.5 * d.dot(model.hessian(w2) * d);
    if (q >= 0.0) ++rep.violations;
    const double strong_residual = (f1 - f2) - q;
    if (strong_residual < -strong_tol) ++rep.strong_violations;
    rep.worst_margin = std::max(rep.worst_margin, q);
    rep.worst_strong_residual = std::min(rep.worst_strong_residual, strong_residual);
  }
  return rep;
}

struct MaximinCheck {
  bool ok = false;
  double grad_w_inf = 0.0;
  double grad_z_inf = 0.0;
  double hess_w_min_eig = 0.0;
  double min_abs_w = 0.0;
};

/// Second-order sufficient conditions for a local maximin point: stationarity
/// in both players, positive-definite primal Hessian, invertible cross
/// Hessian (no zero weight entries).
inline MaximinCheck verify_local_maximin(const LossModel& model, const DualPair& p, double tol) {
  require(tol > 0.0, "verify_local_maximin: tol must be > 0");
  MaximinCheck c;
  c.grad_w_inf = inf_norm(grad_w(model, p));
  c.grad_z_inf = inf_norm(grad_z(model, p));
  Eigen::SelfAdjointEigenSolver<Matrix> es(hess_w(model, p), Eigen::EigenvaluesOnly);
  c.hess_w_min_eig = es.eigenvalues()(0);
  c.min_abs_w = p.w.cwiseAbs().minCoeff();
  c.ok = c.grad_w_inf <= tol && c.grad_z_inf <= tol && c.hess_w_min_eig > tol && c.min_abs_w > tol;
  return c;
}

struct DualityGap {
  double primal = 0.0;      // f(w_hat)
  double dual = 0.0;        // d(z_hat); -inf when the inner problem is unbounded
  double gap = 0.0;         // primal - dual; +inf when dual is -inf
  bool dual_bounded = true;
};

inline DualityGap duality_gap(const LossModel& model, const Vector& w_hat, const Vector& z_hat,
                              const InnerMinOptions& opts = {}) {
  require(is_sign_vector(w_hat), "duality_gap: w_hat must be a sign vector");
  DualityGap g;
  g.primal = model.value(w_hat);
  const InnerMinResult inner = inner_min(model, z_hat, opts);
  g.dual_bounded = inner.bounded;
  g.dual = inner.value;
  g.gap = inner.bounded ? g.primal - inner.value : std::numeric_limits<double>::infinity();
  return g;
}

struct BruteForceResult {
  Vector w_opt;
  double p_star = 0.0;
};

/// Exact minimizer over {-1,+1}^n by exhaustive enumeration in lexicographic
/// order (+1 before -1), ties kept at the earliest vector. Predictions are
/// updated incrementally across the enumeration; the winner is re-evaluated
/// from scratch.
inline BruteForceResult brute_force_min(const LossModel& model) {
  const Index n = model.dim();
  require(n <= 22, "brute_force_min: n > 22 exceeds the enumeration budget");
  Vector w = Vector::Ones(n);
  Vector t = model.X() * w;

  Vector best_w = w;
  double best = model.value_from_predictions(t);

  const std::uint64_t total = 1ULL << n;
  std::uint64_t code = 0;  // bit (n-1-i) set  <=>  w_i = -1
  for (std::uint64_t g = 1; g < total; ++g) {
    std::uint64_t changed = code ^ g;
    code = g;
    while (changed != 0) {
      const int bit = std::countr_zero(changed);
      changed &= changed - 1;
      const Index i = n - 1 - bit;
      const double old = w[i];
      w[i] = (code >> bit) & 1 ? -1.0 : 1.0;
      t += (w[i] - old) * model.X().col(i);
    }
    const double v = model.value_from_predictions(t);
    if (v < best) {
      best = v;
      best_w = w;
    }
  }
  return {best_w, model.value(best_w)};
}

enum class TheoremRegime {
  gaussian_noise,   // standard-Gaussian X, e ~ N(0, sigma^2 I); linear condition
  sparse_outliers,  // standard-Gaussian X, floor(p m) entries of e at +-magnitude; robust condition
};

struct RegimeSpec {
  TheoremRegime regime = TheoremRegime::gaussian_noise;
  int m = 0;
  int n = 0;
  double sigma = 0.1;              // gaussian_noise only
  double outlier_frac = 0.25;      // sparse_outliers only
  double outlier_magnitude = 1e3;  // sparse_outliers only
  double huber_delta = 1.0;        // sparse_outliers only
  std::uint64_t seed = 0;
};

struct RateReport {
  int trials = 0;
  int passes = 0;
  double frequency = 0.0;
  double bound = 0.0;  // the closed-form probability bound at (m, n); may be negative at small m
};

/// Monte-Carlo pass rate of the matching condition checker, reported next to
/// the closed-form bound: 1 - 13 n sqrt(2/pi) e^{-m/8} for the Gaussian-noise
/// regime and 1 - 5 n sqrt(m/pi) e^{-m/16} for the sparse-outlier regime.
inline RateReport empirical_condition_rate(const RegimeSpec& spec, int trials) {
  require(spec.m >= 1 && spec.n >= 1, "empirical_condition_rate: m, n must be >= 1");
  require(trials >= 1, "empirical_condition_rate: trials must be >= 1");
  const double m = spec.m, n = spec.n;
  RateReport rep;
  rep.trials = trials;
  rep.bound = spec.regime == TheoremRegime::gaussian_noise
                  ? 1.0 - 13.0 * n * std::sqrt(2.0 / std::numbers::pi) * std::exp(-m / 8.0)
                  : 1.0 - 5.0 * n * std::sqrt(m / std::numbers::pi) * std::exp(-m / 16.0);

  for (int t = 0; t < trials; ++t) {
    Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(t)));
    const Matrix X = rng.normal_matrix(spec.m, spec.n);
    GroundTruth gt;
    gt.w_star = rng.sign_vector(spec.n);
    if (spec.regime == TheoremRegime::gaussian_noise) {
      gt.e = rng.normal_vector(spec.m, spec.sigma);
      gt.sigma = spec.sigma;
      if (check_linear(X, gt).holds) ++rep.passes;
    } else {
      gt.e = Vector::Zero(spec.m);
      gt.sigma = spec.outlier_magnitude;
      gt.outlier_mask = std::vector<bool>(static_cast<std::size_t>(spec.m), false);
      const auto perm = rng.permutation(spec.m);
      const int k = static_cast<int>(spec.outlier_frac * spec.m + 1e-9);
      for (int j = 0; j < k; ++j) {
        gt.e[perm[static_cast<std::size_t>(j)]] = spec.outlier_magnitude * rng.sign();
        (*gt.outlier_mask)[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])] = true;
      }
      if (check_huber(X, gt, spec.huber_delta).holds) ++rep.passes;
    }
  }
  rep.frequency = static_cast<double>(rep.passes) / trials;
  return rep;
}

}  // namespace maximin
