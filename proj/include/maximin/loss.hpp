#pragma once

#include "maximin/core.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace maximin {

enum class LossKind { squared, huber, l1, cross_entropy };

inline std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::squared: return "squared";
    case LossKind::huber: return "huber";
    case LossKind::l1: return "l1";
    case LossKind::cross_entropy: return "cross-entropy";
  }
  return "?";
}

namespace detail {

inline double sigmoid(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

/// log(1 + e^t), overflow-safe.
inline double softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

inline double sgn0(double z) { return z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0); }

}  // namespace detail

/// A convex regression objective f(w) over a fixed dataset (X, y).
///
///   squared        f(w) = ||Xw - y||_2^2              (no 1/2 factor)
///   huber(delta)   f(w) = sum_i l(x_i^T w - y_i),  l(z) = z^2/2 on |z| <= delta,
///                  |z| delta - delta^2/2 beyond
///   l1             f(w) = sum_i |x_i^T w - y_i|       (the rescaled delta->0 Huber limit)
///   cross-entropy  f(w) = sum_i softplus(x_i^T w) - y_i x_i^T w,  y in {0,1}^m
///
/// Immutable after construction; all evaluators are pure.
class LossModel {
 public:
  static LossModel squared(Matrix X, Vector y) {
    return LossModel(LossKind::squared, std::move(X), std::move(y), 0.0);
  }
  static LossModel huber(Matrix X, Vector y, double delta) {
    require(delta > 0.0, "LossModel: huber delta must be > 0");
    return LossModel(LossKind::huber, std::move(X), std::move(y), delta);
  }
  static LossModel l1(Matrix X, Vector y) {
    return LossModel(LossKind::l1, std::move(X), std::move(y), 0.0);
  }
  static LossModel cross_entropy(Matrix X, Vector y) {
    for (Index i = 0; i < y.size(); ++i)
      require(y[i] == 0.0 || y[i] == 1.0, "LossModel: cross-entropy labels must be 0 or 1");
    return LossModel(LossKind::cross_entropy, std::move(X), std::move(y), 0.0);
  }
  static LossModel make(LossKind kind, Matrix X, Vector y, double delta = 1.0) {
    switch (kind) {
      case LossKind::squared: return squared(std::move(X), std::move(y));
      case LossKind::huber: return huber(std::move(X), std::move(y), delta);
      case LossKind::l1: return l1(std::move(X), std::move(y));
      case LossKind::cross_entropy: return cross_entropy(std::move(X), std::move(y));
    }
    throw std::invalid_argument("LossModel: unknown kind");
  }

  LossKind kind() const { return kind_; }
  Index samples() const { return X_.rows(); }
  Index dim() const { return X_.cols(); }
  const Matrix& X() const { return X_; }
  const Vector& y() const { return y_; }
  double delta() const { return delta_; }
  /// X^T X, cached (squared-loss gradient/Hessian path).
  const Matrix& gram() const { return gram_; }

  double value(const Vector& w) const {
    check_point(w);
    return value_from_predictions(X_ * w);
  }

  /// f evaluated from the prediction vector t = X w (w never materialized).
  /// Used by the exhaustive minimizer to share incremental prediction updates.
  double value_from_predictions(const Vector& t) const {
    require(t.size() == X_.rows(), "LossModel: prediction size mismatch");
    switch (kind_) {
      case LossKind::squared:
        return (t - y_).squaredNorm();
      case LossKind::huber: {
        double s = 0.0;
        for (Index i = 0; i < t.size(); ++i) {
          const double z = std::abs(t[i] - y_[i]);
          s += z <= delta_ ? 0.5 * z * z : z * delta_ - 0.5 * delta_ * delta_;
        }
        return s;
      }
      case LossKind::l1:
        return (t - y_).lpNorm<1>();
      case LossKind::cross_entropy: {
        double s = 0.0;
        for (Index i = 0; i < t.size(); ++i) s += detail::softplus(t[i]) - y_[i] * t[i];
        return s;
      }
    }
    throw std::logic_error("LossModel: unknown kind");
  }

  Vector gradient(const Vector& w) const {
    check_point(w);
    switch (kind_) {
      case LossKind::squared:
        return 2.0 * (gram_ * w - xty_);
      case LossKind::huber: {
        Vector r = X_ * w - y_;
        for (Index i = 0; i < r.size(); ++i)
          r[i] = std::abs(r[i]) <= delta_ ? r[i] : delta_ * detail::sgn0(r[i]);
        return X_.transpose() * r;
      }
      case LossKind::l1: {
        Vector r = X_ * w - y_;
        for (Index i = 0; i < r.size(); ++i) r[i] = detail::sgn0(r[i]);
        return X_.transpose() * r;
      }
      case LossKind::cross_entropy: {
        Vector t = X_ * w;
        for (Index i = 0; i < t.size(); ++i) t[i] = detail::sigmoid(t[i]) - y_[i];
        return X_.transpose() * t;
      }
    }
    throw std::logic_error("LossModel: unknown kind");
  }

  Matrix hessian(const Vector& w) const {
    check_point(w);
    switch (kind_) {
      case LossKind::squared:
        return 2.0 * gram_;
      case LossKind::huber: {
        // d_i = 1 on the open quadratic zone |r_i| < delta; the kink carries
        // the linear-zone curvature 0.
        const Vector r = X_ * w - y_;
        Matrix h = Matrix::Zero(dim(), dim());
        for (Index i = 0; i < r.size(); ++i)
          if (std::abs(r[i]) < delta_) h += X_.row(i).transpose() * X_.row(i);
        return h;
      }
      case LossKind::l1:
        return Matrix::Zero(dim(), dim());
      case LossKind::cross_entropy: {
        Vector t = X_ * w;
        for (Index i = 0; i < t.size(); ++i) {
          const double s = detail::sigmoid(t[i]);
          t[i] = s * (1.0 - s);
        }
        return X_.transpose() * t.asDiagonal() * X_;
      }
    }
    throw std::logic_error("LossModel: unknown kind");
  }

 private:
  LossModel(LossKind kind, Matrix X, Vector y, double delta)
      : kind_(kind), delta_(delta), X_(std::move(X)), y_(std::move(y)) {
    require(X_.rows() >= 1 && X_.cols() >= 1, "LossModel: X must be at least 1x1");
    require(y_.size() == X_.rows(), "LossModel: y length must match rows of X");
    require(all_finite(X_) && all_finite(y_), "LossModel: non-finite data");
    gram_ = X_.transpose() * X_;
    xty_ = X_.transpose() * y_;
  }

  void check_point(const Vector& w) const {
    require(w.size() == X_.cols(), "LossModel: dim(w) != n");
    require(all_finite(w), "LossModel: non-finite w");
  }

  LossKind kind_;
  double delta_;
  Matrix X_;
  Vector y_;
  Matrix gram_;
  Vector xty_;
};

}  // namespace maximin
