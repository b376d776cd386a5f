#include "brw/pressure.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace brw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd log_weights(const Intensity& in) { return in.weight.array().log().matrix(); }

void check_dim(const BranchLaw& law, const Eigen::VectorXd& v, const char* what) {
  if (v.size() != law.dim()) {
    std::ostringstream os;
    os << what << " has dimension " << v.size() << ", law has dimension " << law.dim();
    throw std::invalid_argument(os.str());
  }
}

Eigen::MatrixXd orthonormal_directions(const RationalFrame& frame) {
  const int d = frame.ambient_dim();
  if (frame.dim() == 0) return Eigen::MatrixXd(d, 0);
  Eigen::MatrixXd dirs(d, frame.dim());
  for (int j = 0; j < frame.dim(); ++j) dirs.col(j) = to_eigen(frame.directions[static_cast<std::size_t>(j)]);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(dirs);
  return qr.householderQ() * Eigen::MatrixXd::Identity(d, frame.dim());
}

// Distinct columns of X (exactly compared) and the column -> point map.
struct PointTable {
  std::vector<RationalVector> points;
  std::vector<int> of_column;
  bool exact = true;
};

PointTable distinct_points(const Eigen::MatrixXd& X, const std::vector<RationalVector>& exact_points) {
  PointTable t;
  t.exact = !exact_points.empty() || X.cols() == 0;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    RationalVector p = t.exact ? exact_points[static_cast<std::size_t>(j)] : exact_vector(X.col(j));
    int found = -1;
    for (std::size_t i = 0; i < t.points.size(); ++i)
      if (t.points[i] == p) {
        found = static_cast<int>(i);
        break;
      }
    if (found < 0) {
      found = static_cast<int>(t.points.size());
      t.points.push_back(std::move(p));
    }
    t.of_column.push_back(found);
  }
  return t;
}

MinimizeResult minimize_lse(const Eigen::MatrixXd& Y, const Eigen::VectorXd& a, double cap) {
  auto f = [&](const Eigen::VectorXd& u, int order) {
    return softmax_moments(Y, (a + Y.transpose() * u).eval(), order);
  };
  MinimizeOptions opt;
  opt.divergence_cap = cap;
  return minimize_convex(f, Eigen::VectorXd::Zero(Y.rows()), opt);
}

LegendreResult legendre_numeric(const Eigen::MatrixXd& X, const Eigen::VectorXd& a, const Eigen::VectorXd& target) {
  // Proxy for dimensions without exact hull location: divergence beyond the cap
  // with vanishing gradient residual means a boundary (recession) infimum.
  const Eigen::MatrixXd Y = X.colwise() - target;
  const MinimizeResult r = minimize_lse(Y, a, kDivergenceCap);
  LegendreResult out;
  out.residual = r.gradient.norm();
  out.q_norm = r.x.norm();
  if (r.status == MinimizeStatus::converged) {
    out.location = HullLocation::relative_interior;
    out.value = r.value;
    out.argmin = r.x;
  } else if (r.status == MinimizeStatus::diverged && out.residual <= 1e-6) {
    out.location = HullLocation::boundary;
    out.value = r.value;
  } else if (r.status == MinimizeStatus::diverged) {
    out.location = HullLocation::outside;
    out.value = -kInf;
  } else {
    std::ostringstream os;
    os << "Legendre solver did not converge (residual " << out.residual << ")";
    throw std::runtime_error(os.str());
  }
  return out;
}

}  // namespace

ConvexEval p_tilde(const BranchLaw& law, const Eigen::VectorXd& q, int order) {
  check_dim(law, q, "q");
  const Intensity& in = law.intensity();
  return softmax_moments(in.x, (log_weights(in) + in.x.transpose() * q).eval(), order);
}

LegendreResult legendre_lse(const Eigen::MatrixXd& X, const Eigen::VectorXd& log_weight,
                            const std::vector<RationalVector>& exact_points, const Eigen::VectorXd& target) {
  const Eigen::Index k = X.rows();
  LegendreResult out;
  if (k == 0) {
    out.value = log_sum_exp(log_weight);
    out.argmin = Eigen::VectorXd(0);
    out.location = HullLocation::relative_interior;
    return out;
  }
  if (k > 3) return legendre_numeric(X, log_weight, target);

  const PointTable table = distinct_points(X, exact_points);
  const ExactHull hull(table.points);
  const LocatedPoint loc = hull.locate_approx(target, kGeometryTolerance);
  out.location = loc.where;
  if (loc.where == HullLocation::outside) {
    out.value = -kInf;
    out.q_norm = kInf;
    return out;
  }

  // Restrict to the minimal face G containing the target, in orthonormal
  // coordinates of dir(G) centred at the target.
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    if (std::find(loc.face_points.begin(), loc.face_points.end(), table.of_column[static_cast<std::size_t>(j)]) !=
        loc.face_points.end())
      cols.push_back(j);
  std::vector<RationalVector> face_pts;
  for (int i : loc.face_points) face_pts.push_back(table.points[static_cast<std::size_t>(i)]);
  const Eigen::MatrixXd B = orthonormal_directions(affine_frame(face_pts));
  Eigen::MatrixXd Y(B.cols(), static_cast<Eigen::Index>(cols.size()));
  Eigen::VectorXd a(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    Y.col(static_cast<Eigen::Index>(c)) = B.transpose() * (X.col(cols[c]) - target);
    a(static_cast<Eigen::Index>(c)) = log_weight(cols[c]);
  }
  if (B.cols() == 0) {
    out.value = log_sum_exp(a);
    if (loc.where == HullLocation::relative_interior) out.argmin = Eigen::VectorXd::Zero(k);
    out.q_norm = loc.where == HullLocation::boundary ? kInf : 0.0;
    return out;
  }
  const MinimizeResult r = minimize_lse(Y, a, 1e8);
  if (r.status != MinimizeStatus::converged) {
    std::ostringstream os;
    os << "Legendre Newton solve failed (residual " << r.gradient.norm() << ", |q| " << r.x.norm() << ")";
    throw std::runtime_error(os.str());
  }
  out.value = r.value;
  const Eigen::VectorXd q = B * r.x;
  if (loc.where == HullLocation::relative_interior) {
    out.argmin = q;
    out.q_norm = q.norm();
    out.residual = (softmax_moments(X, (log_weight + X.transpose() * q).eval(), 1).gradient - target).norm();
  } else {
    out.q_norm = kInf;
    out.residual = r.gradient.norm();
  }
  return out;
}

LegendreResult p_tilde_star(const BranchLaw& law, const Eigen::VectorXd& alpha) {
  check_dim(law, alpha, "alpha");
  const Intensity& in = law.intensity();
  return legendre_lse(in.x, log_weights(in), in.x_exact, alpha);
}

std::string to_string(IXClass c) {
  switch (c) {
    case IXClass::interior: return "interior";
    case IXClass::boundary_crit: return "boundary_crit";
    case IXClass::boundary_noncrit: return "boundary_noncrit";
    case IXClass::outside: return "outside";
  }
  return "outside";
}

Membership membership_IX(const BranchLaw& law, const Eigen::VectorXd& alpha) {
  const LegendreResult r = p_tilde_star(law, alpha);
  Membership m;
  m.value = r.value;
  m.residual = r.residual;
  m.q_norm = r.q_norm;
  if (r.location == HullLocation::outside || r.value < -kCriticalTolerance) {
    m.cls = IXClass::outside;
  } else if (r.location == HullLocation::boundary) {
    m.cls = IXClass::boundary_noncrit;
  } else if (r.value > kCriticalTolerance) {
    m.cls = IXClass::interior;
  } else {
    m.cls = IXClass::boundary_crit;
  }
  return m;
}

namespace {

// log E Sigma_alpha(q, t) as a function of t, for fixed shifted log weights a.
double log_sigma(const Eigen::VectorXd& a, const Eigen::VectorXd& phi, double t) {
  return log_sum_exp((a - t * phi).eval());
}

}  // namespace

ImplicitPressurePoint implicit_pressure(const BranchLaw& law, const Eigen::VectorXd& q, const Eigen::VectorXd& alpha,
                                        bool with_hessian) {
  check_dim(law, q, "q");
  check_dim(law, alpha, "alpha");
  const Intensity& in = law.intensity();
  const Eigen::MatrixXd centered = in.x.colwise() - alpha;
  const Eigen::VectorXd a = log_weights(in) + centered.transpose() * q;
  const Eigen::VectorXd& phi = in.phi;

  const double t0 = log_sum_exp(a) / phi.minCoeff();
  double width = 1.0;
  double lo = t0 - width, hi = t0 + width;
  while (log_sigma(a, phi, lo) <= 0.0) {
    width *= 2.0;
    lo = t0 - width;
  }
  while (log_sigma(a, phi, hi) >= 0.0) {
    width *= 2.0;
    hi = t0 + width;
  }
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (log_sigma(a, phi, mid) > 0.0) lo = mid;
    else hi = mid;
  }
  double t = 0.5 * (lo + hi);
  for (int i = 0; i < 5; ++i) {
    const Eigen::VectorXd s = a - t * phi;
    const double F = log_sum_exp(s);
    const double lam = ((s.array() - F).exp() * phi.array()).sum();
    const double next = t + F / lam;
    if (!std::isfinite(next)) break;
    t = next;
  }

  const Eigen::VectorXd s = a - t * phi;
  Eigen::VectorXd pi = (s.array() - log_sum_exp(s)).exp().matrix();
  const Eigen::VectorXd psi = centered.transpose() * q - t * phi;

  ImplicitPressurePoint p;
  p.q = q;
  p.alpha = alpha;
  p.t = t;
  p.h = -pi.dot(psi);
  p.lambda = pi.dot(phi);
  p.beta = in.x * pi;
  p.gradient = (p.beta - alpha) / p.lambda;
  if (with_hessian) {
    const Eigen::MatrixXd z = centered - p.gradient * phi.transpose();
    Eigen::MatrixXd H = z * pi.asDiagonal() * z.transpose() / p.lambda;
    p.hessian = 0.5 * (H + H.transpose());
  }
  return p;
}

ImplicitPressurePoint q_alpha(const BranchLaw& law, const Eigen::VectorXd& alpha) {
  check_dim(law, alpha, "alpha");
  const Membership m = membership_IX(law, alpha);
  if (!in_tilde_IX(m.cls)) throw std::domain_error("no interior stationary point: alpha is " + to_string(m.cls));
  auto f = [&](const Eigen::VectorXd& q, int order) {
    const ImplicitPressurePoint p = implicit_pressure(law, q, alpha, order >= 2);
    ConvexEval e;
    e.value = p.t;
    e.gradient = p.gradient;
    e.hessian = p.hessian;
    return e;
  };
  MinimizeOptions opt;
  opt.divergence_cap = 1e8;
  const MinimizeResult r = minimize_convex(f, Eigen::VectorXd::Zero(law.dim()), opt);
  if (r.gradient.norm() > kAttainmentTolerance) {
    std::ostringstream os;
    os << "q_alpha did not reach stationarity (residual " << r.gradient.norm() << ")";
    throw std::runtime_error(os.str());
  }
  return implicit_pressure(law, r.x, alpha, true);
}

ConvexEval lambda_psi(const BranchLaw& law, const ImplicitPressurePoint& point, const Eigen::VectorXd& lam,
                      int order) {
  check_dim(law, lam, "lambda");
  const Intensity& in = law.intensity();
  const Eigen::VectorXd psi = (in.x.colwise() - point.alpha).transpose() * point.q - point.t * in.phi;
  return softmax_moments(in.x, (log_weights(in) + psi + in.x.transpose() * lam).eval(), order);
}

ConvexEval lambda_psi(const BranchLaw& law, const Eigen::VectorXd& q, const Eigen::VectorXd& alpha,
                      const Eigen::VectorXd& lam, int order) {
  return lambda_psi(law, implicit_pressure(law, q, alpha), lam, order);
}

LegendreResult lambda_psi_star(const BranchLaw& law, const Eigen::VectorXd& q, const Eigen::VectorXd& alpha,
                               const Eigen::VectorXd& target) {
  check_dim(law, target, "target");
  const ImplicitPressurePoint p = implicit_pressure(law, q, alpha);
  const Intensity& in = law.intensity();
  const Eigen::VectorXd psi = (in.x.colwise() - alpha).transpose() * q - p.t * in.phi;
  return legendre_lse(in.x, (log_weights(in) + psi).eval(), in.x_exact, target);
}

double ix_support(const BranchLaw& law, const Eigen::VectorXd& direction) {
  const Eigen::VectorXd e = direction.normalized();
  auto g = [&](double u) {
    const double s = std::exp(u);
    return p_tilde(law, (s * e).eval(), 0).value / s;
  };
  const auto r = boost::math::tools::brent_find_minima(g, -20.0, 20.0, 40);
  return r.second;
}

double ix_diameter(const BranchLaw& law) {
  const int d = law.dim();
  if (d == 1) {
    Eigen::VectorXd e(1);
    e << 1.0;
    return ix_support(law, e) + ix_support(law, (-e).eval());
  }
  double best = 0.0;
  auto width = [&](const Eigen::VectorXd& e) { return ix_support(law, e) + ix_support(law, (-e).eval()); };
  if (d == 2) {
    for (int i = 0; i < 90; ++i) {
      const double th = std::numbers::pi * i / 90.0;
      Eigen::VectorXd e(2);
      e << std::cos(th), std::sin(th);
      best = std::max(best, width(e));
    }
    return best;
  }
  // Fibonacci directions on the upper half sphere in the first three coordinates.
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
    const double z = 1.0 - (i + 0.5) / 200.0;
    const double r = std::sqrt(1.0 - z * z);
    const double th = i * std::numbers::pi * (3.0 - std::sqrt(5.0));
    e(0) = r * std::cos(th);
    e(1) = r * std::sin(th);
    e(2) = z;
    best = std::max(best, width(e));
  }
  for (int j = 3; j < d; ++j) best = std::max(best, width(Eigen::VectorXd::Unit(d, j)));
  return best;
}

}  // namespace brw
