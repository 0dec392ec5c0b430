#pragma once

#include "maximin/core.hpp"
#include "maximin/lagrangian.hpp"
#include "maximin/loss.hpp"
#include "maximin/random.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace maximin {

enum class Method { gda, gda_alternating, ogda, extragradient };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::gda: return "gda";
    case Method::gda_alternating: return "gda-alternating";
    case Method::ogda: return "ogda";
    case Method::extragradient: return "extragradient";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "gda") return Method::gda;
  if (s == "gda-alternating") return Method::gda_alternating;
  if (s == "ogda") return Method::ogda;
  if (s == "extragradient") return Method::extragradient;
  throw std::invalid_argument("unknown solver method: " + s);
}

struct SolveConfig {
  Method method = Method::gda_alternating;
  double eta = 0.05;           // primal step size
  double gamma0 = 1.0;         // initial dual/primal step ratio; dual step = eta * gamma
  double gamma_growth = 1.02;  // multiplicative gamma update per epoch (n iterations); 1 = fixed ratio
  bool adaptive = false;       // adaptive-moment preconditioning on both players
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int max_iters = 20000;
  double binarize_tol = 1e-3;
  double grad_tol = 1e-6;
  std::uint64_t seed = 0;
  int trace_every = 0;  // 0 = no trace
  double divergence_cap = 1e6;

  void validate() const {
    require(eta > 0.0 && std::isfinite(eta), "SolveConfig: eta must be positive");
    require(gamma0 > 0.0 && std::isfinite(gamma0), "SolveConfig: gamma0 must be positive");
    require(gamma_growth > 0.0 && std::isfinite(gamma_growth),
            "SolveConfig: gamma_growth must be positive");
    require(std::isfinite(eta * gamma0), "SolveConfig: eta*gamma0 not finite");
    require(max_iters >= 1, "SolveConfig: max_iters must be >= 1");
    require(binarize_tol > 0.0, "SolveConfig: binarize_tol must be positive");
    require(grad_tol > 0.0, "SolveConfig: grad_tol must be positive");
    require(trace_every >= 0, "SolveConfig: trace_every must be >= 0");
    require(divergence_cap > 0.0, "SolveConfig: divergence_cap must be positive");
  }
};

struct TraceEntry {
  int iter;
  Vector w;
  Vector z;
  double lagrangian;
};

struct SolveResult {
  Vector w_final;
  Vector w_binary;  // entrywise sign of w_final, sign(0) = +1
  Vector z_final;
  bool converged = false;
  int iters = 0;
  double final_constraint_violation = std::numeric_limits<double>::quiet_NaN();
  double final_grad_w_norm = std::numeric_limits<double>::quiet_NaN();
  double final_gamma = std::numeric_limits<double>::quiet_NaN();
  std::optional<std::vector<TraceEntry>> trace;
};

/// Thrown when an iterate leaves the finite range; carries the last finite state.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(std::string msg, SolveResult last_result)
      : std::runtime_error(std::move(msg)), last(std::move(last_result)) {}
  SolveResult last;
};

namespace detail {

/// First/second-moment normalization state for one player.
struct AdamState {
  Vector m, v;
  long t = 0;
  void init(Index n) {
    m = Vector::Zero(n);
    v = Vector::Zero(n);
    t = 0;
  }
  Vector transform(const Vector& g, const SolveConfig& c) {
    ++t;
    m = c.adam_beta1 * m + (1.0 - c.adam_beta1) * g;
    v = c.adam_beta2 * v + (1.0 - c.adam_beta2) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(c.adam_beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(c.adam_beta2, static_cast<double>(t));
    return (m / bc1).cwiseQuotient(((v / bc2).cwiseSqrt().array() + c.adam_eps).matrix());
  }
};

}  // namespace detail

/// Saddle-point iteration on L(w, z). Descends in w, ascends in z with step
/// ratio gamma; gamma is multiplied by gamma_growth once every n iterations.
/// Deterministic given (model, config, w0/seed).
inline SolveResult solve(const LossModel& model, const SolveConfig& config,
                         std::optional<Vector> w0 = std::nullopt) {
  config.validate();
  const Index n = model.dim();

  Vector w;
  if (w0.has_value()) {
    require(w0->size() == n, "solve: dim(w0) != n");
    require(all_finite(*w0), "solve: non-finite w0");
    w = *w0;
  } else {
    Rng rng(config.seed);
    w = rng.uniform_vector(n, -1.0, 1.0);
  }
  Vector z = Vector::Zero(n);

  double gamma = config.gamma0;
  detail::AdamState adam_w, adam_z;
  if (config.adaptive) {
    adam_w.init(n);
    adam_z.init(n);
  }

  Vector prev_gw, prev_gz;  // ogda memory
  bool have_prev = false;

  auto constraint_violation = [](const Vector& wv) {
    return (wv.cwiseProduct(wv).array() - 1.0).abs().maxCoeff();
  };

  std::vector<TraceEntry> trace;
  auto record = [&](int iter) {
    if (config.trace_every > 0)
      trace.push_back({iter, w, z, lagrangian_value(model, {w, z})});
  };

  auto make_result = [&](bool conv, int iters) {
    SolveResult r;
    r.w_final = w;
    r.w_binary = sign_vector(w);
    r.z_final = z;
    r.converged = conv;
    r.iters = iters;
    r.final_constraint_violation = constraint_violation(w);
    r.final_grad_w_norm = inf_norm(grad_w(model, {w, z}));
    r.final_gamma = gamma;
    if (config.trace_every > 0) r.trace = trace;
    return r;
  };

  record(0);

  bool converged = false;
  int iter = 0;
  while (iter < config.max_iters) {
    ++iter;
    const Vector w_prev = w;
    const Vector z_prev = z;

    Vector eff_gw, eff_gz;  // directions fed to the (optionally preconditioned) steps
    switch (config.method) {
      case Method::gda: {
        eff_gw = grad_w(model, {w, z});
        eff_gz = grad_z(model, {w, z});
        break;
      }
      case Method::gda_alternating: {
        // ascend z first, then descend w with the fresh gradient
        eff_gz = grad_z(model, {w, z});
        Vector z_next = z + config.eta * gamma *
                                (config.adaptive ? adam_z.transform(eff_gz, config) : eff_gz);
        eff_gw = model.gradient(w) + 2.0 * z_next.cwiseProduct(w);
        w -= config.eta * (config.adaptive ? adam_w.transform(eff_gw, config) : eff_gw);
        z = std::move(z_next);
        break;
      }
      case Method::ogda: {
        const Vector gw = grad_w(model, {w, z});
        const Vector gz = grad_z(model, {w, z});
        if (!have_prev) {
          prev_gw = gw;
          prev_gz = gz;
          have_prev = true;
        }
        eff_gw = 2.0 * gw - prev_gw;
        eff_gz = 2.0 * gz - prev_gz;
        prev_gw = gw;
        prev_gz = gz;
        break;
      }
      case Method::extragradient: {
        // half-step lookahead, full step from the lookahead gradients
        const Vector gw = grad_w(model, {w, z});
        const Vector gz = grad_z(model, {w, z});
        const Vector w_mid = w - 0.5 * config.eta * gw;
        const Vector z_mid = z + 0.5 * config.eta * gamma * gz;
        if (!all_finite(w_mid) || !all_finite(z_mid))
          throw DivergedError("solve: diverged at iteration " + std::to_string(iter),
                              make_result(false, iter));
        eff_gw = grad_w(model, {w_mid, z_mid});
        eff_gz = grad_z(model, {w_mid, z_mid});
        break;
      }
    }

    if (config.method != Method::gda_alternating) {
      w -= config.eta * (config.adaptive ? adam_w.transform(eff_gw, config) : eff_gw);
      z += config.eta * gamma * (config.adaptive ? adam_z.transform(eff_gz, config) : eff_gz);
    }

    if (!all_finite(w) || !all_finite(z) || inf_norm(w) > config.divergence_cap) {
      w = w_prev;
      z = z_prev;
      throw DivergedError("solve: diverged at iteration " + std::to_string(iter),
                          make_result(false, iter));
    }

    if (iter % n == 0) gamma *= config.gamma_growth;
    if (config.trace_every > 0 && iter % config.trace_every == 0) record(iter);

    if (constraint_violation(w) <= config.binarize_tol &&
        inf_norm(grad_w(model, {w, z})) <= config.grad_tol) {
      converged = true;
      if (config.trace_every > 0 && iter % config.trace_every != 0) record(iter);
      return make_result(true, iter);
    }
  }

  if (config.trace_every > 0 && config.max_iters % config.trace_every != 0)
    record(config.max_iters);
  return make_result(converged, config.max_iters);
}

struct InnerMinOptions {
  double grad_tol = 1e-10;
  int max_iters = 500;
  double divergence_cap = 1e6;
  std::optional<Vector> w0;  // Newton start for non-quadratic losses (default: 0)
};

/// Outcome of evaluating the dual function d(z) = min_w L(w, z).
struct InnerMinResult {
  bool bounded = true;
  Vector w;      // minimizer when bounded
  double value;  // d(z); -inf when unbounded
  int iters = 0;
};

/// Evaluates d(z). Squared loss: closed form via (X^T X + diag(z)) w = X^T y,
/// declared unbounded when X^T X + diag(z) is not positive definite. Other
/// losses: damped Newton, with unboundedness flagged once the iterate norm
/// exceeds the cap.
inline InnerMinResult inner_min(const LossModel& model, const Vector& z,
                                const InnerMinOptions& opts = {}) {
  require(z.size() == model.dim(), "inner_min: dim(z) != n");
  require(all_finite(z), "inner_min: non-finite z");
  const Index n = model.dim();
  InnerMinResult out;

  if (model.kind() == LossKind::squared) {
    Matrix A = model.gram();
    A.diagonal() += z;
    Eigen::SelfAdjointEigenSolver<Matrix> es(A);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (es.eigenvalues()(0) <= 1e-12 * scale) {
      out.bounded = false;
      out.value = -std::numeric_limits<double>::infinity();
      return out;
    }
    const Vector b = model.X().transpose() * model.y();
    out.w = es.eigenvectors() *
            (es.eigenvalues().cwiseInverse().asDiagonal() * (es.eigenvectors().transpose() * b));
    out.value = lagrangian_value(model, {out.w, z});
    return out;
  }

  Vector w = opts.w0.value_or(Vector::Zero(n));
  require(w.size() == n, "inner_min: dim(w0) != n");
  double fw = lagrangian_value(model, {w, z});
  for (int it = 1; it <= opts.max_iters; ++it) {
    out.iters = it;
    const Vector g = grad_w(model, {w, z});
    if (inf_norm(g) <= opts.grad_tol) break;

    Matrix H = hess_w(model, {w, z});
    const double hscale = std::max(1.0, H.cwiseAbs().maxCoeff());
    Vector d;
    double shift = 0.0;
    while (true) {
      Matrix Hs = H;
      Hs.diagonal().array() += shift;
      Eigen::LLT<Matrix> llt(Hs);
      if (llt.info() == Eigen::Success) {
        d = -llt.solve(g);
        break;
      }
      shift = shift == 0.0 ? 1e-8 * hscale : shift * 10.0;
      if (shift > 1e8 * hscale) {
        d = -g;  // steepest descent fallback
        break;
      }
    }

    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vector w_try = w + step * d;
      const double f_try = lagrangian_value(model, {w_try, z});
      if (f_try < fw - 1e-4 * step * std::abs(g.dot(d))) {
        w = w_try;
        fw = f_try;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;  // no descent along d: stationary to numerical precision

    if (inf_norm(w) > opts.divergence_cap) {
      out.bounded = false;
      out.value = -std::numeric_limits<double>::infinity();
      return out;
    }
  }
  out.w = w;
  out.value = fw;
  return out;
}

}  // namespace maximin
