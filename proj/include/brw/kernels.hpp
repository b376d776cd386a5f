#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>

namespace brw {

struct ConvexEval {
  double value = 0.0;
  Eigen::VectorXd gradient;
  std::optional<Eigen::MatrixXd> hessian;
};

/// log sum exp(a_j), shifted by the maximum.
template <class Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.size() == 0) return -std::numeric_limits<Scalar>::infinity();
  const Scalar m = a.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((a.derived().array() - m).exp().sum());
}

/// Value LSE(a), softmax mean of the columns of X and (optionally) their
/// softmax covariance. X is k x m, a has length m.
template <class DerivedX, class DerivedA>
ConvexEval softmax_moments(const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedA>& a, int order) {
  ConvexEval out;
  out.value = log_sum_exp(a);
  if (order < 1) return out;
  const Eigen::VectorXd pi = (a.array() - out.value).exp().matrix();
  out.gradient = X * pi;
  if (order >= 2) {
    const Eigen::MatrixXd centered = X.colwise() - out.gradient;
    Eigen::MatrixXd h = centered * pi.asDiagonal() * centered.transpose();
    out.hessian = 0.5 * (h + h.transpose());
  }
  return out;
}

struct MinimizeOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-12;
  double divergence_cap = 1e3;
};

enum class MinimizeStatus { converged, diverged, stalled };

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  MinimizeStatus status = MinimizeStatus::stalled;
  int iterations = 0;
};

/// Damped Newton with Armijo backtracking for a smooth convex objective.
/// f(x, 2) must fill value, gradient and Hessian. Stops with `diverged`
/// once |x| exceeds the cap (the infimum is then a recession limit).
inline MinimizeResult minimize_convex(const std::function<ConvexEval(const Eigen::VectorXd&, int)>& f,
                                      Eigen::VectorXd x, const MinimizeOptions& opt = {}) {
  MinimizeResult res;
  ConvexEval cur = f(x, 2);
  const Eigen::Index n = x.size();
  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it;
    if (cur.gradient.size() == 0 || cur.gradient.norm() <= opt.gradient_tolerance) {
      res.status = MinimizeStatus::converged;
      break;
    }
    if (x.norm() > opt.divergence_cap) {
      res.status = MinimizeStatus::diverged;
      break;
    }
    const Eigen::MatrixXd& H = *cur.hessian;
    Eigen::VectorXd step;
    double shift = 0.0;
    for (int tries = 0; tries < 60; ++tries) {
      Eigen::MatrixXd Hs = H;
      Hs.diagonal().array() += shift;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(Hs);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        step = ldlt.solve(-cur.gradient);
        if (step.allFinite() && step.dot(cur.gradient) < 0.0) break;
      }
      shift = shift == 0.0 ? 1e-12 * std::max(1.0, H.norm()) + 1e-300 : shift * 10.0;
      step.resize(0);
    }
    if (step.size() != n) step = -cur.gradient;

    const double slope = step.dot(cur.gradient);
    double s = 1.0;
    ConvexEval next;
    bool accepted = false;
    for (int k = 0; k < 80; ++k) {
      const Eigen::VectorXd trial = x + s * step;
      next = f(trial, 2);
      const bool flat = std::abs(next.value - cur.value) <= 1e-13 * std::max(1.0, std::abs(cur.value)) &&
                        next.gradient.norm() < cur.gradient.norm();
      if (std::isfinite(next.value) && (next.value <= cur.value + 1e-4 * s * slope || flat)) {
        accepted = true;
        x = trial;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) {
      // No representable decrease: accept the point if the gradient is at round-off level.
      res.status = cur.gradient.norm() <= 1e-9 ? MinimizeStatus::converged : MinimizeStatus::stalled;
      break;
    }
    cur = std::move(next);
    res.iterations = it + 1;
    if (it + 1 == opt.max_iterations) res.status = MinimizeStatus::stalled;
  }
  if (res.status != MinimizeStatus::diverged && cur.gradient.size() > 0 && cur.gradient.norm() <= opt.gradient_tolerance)
    res.status = MinimizeStatus::converged;
  if (cur.gradient.size() == 0) res.status = MinimizeStatus::converged;
  res.x = x;
  res.value = cur.value;
  res.gradient = cur.gradient;
  return res;
}

}  // namespace brw
