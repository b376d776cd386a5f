#pragma once

#include "brw/geometry.hpp"
#include "brw/kernels.hpp"
#include "brw/law.hpp"

#include <optional>
#include <string>

namespace brw {

inline constexpr double kDivergenceCap = 1e3;
inline constexpr double kCriticalTolerance = 1e-10;
inline constexpr double kAttainmentTolerance = 1e-8;

/// log E sum_i exp(<q, X_i>) with exact gradient and Hessian.
ConvexEval p_tilde(const BranchLaw& law, const Eigen::VectorXd& q, int order = 1);

/// Concave-convention Legendre value inf_q f(q) - <q, alpha>.
struct LegendreResult {
  double value = 0.0;  // -inf outside the closed hull
  std::optional<Eigen::VectorXd> argmin;
  HullLocation location = HullLocation::outside;
  double residual = 0.0;  // |grad f(q) - alpha| at the solver terminus
  double q_norm = 0.0;
};

/// Legendre transform of q -> LSE(log_weight + X^T q). X is k x m.
/// `exact_points` (possibly empty) gives exact columns of X for hull location.
LegendreResult legendre_lse(const Eigen::MatrixXd& X, const Eigen::VectorXd& log_weight,
                            const std::vector<RationalVector>& exact_points, const Eigen::VectorXd& target);

LegendreResult p_tilde_star(const BranchLaw& law, const Eigen::VectorXd& alpha);

enum class IXClass { interior, boundary_crit, boundary_noncrit, outside };
std::string to_string(IXClass c);

struct Membership {
  IXClass cls = IXClass::outside;
  double value = 0.0;
  double residual = 0.0;
  double q_norm = 0.0;
};

Membership membership_IX(const BranchLaw& law, const Eigen::VectorXd& alpha);

inline bool in_tilde_IX(IXClass c) { return c == IXClass::interior || c == IXClass::boundary_crit; }
inline bool in_IX(IXClass c) { return c != IXClass::outside; }

struct ImplicitPressurePoint {
  Eigen::VectorXd q;
  Eigen::VectorXd alpha;
  double t = 0.0;
  Eigen::VectorXd gradient;
  std::optional<Eigen::MatrixXd> hessian;
  double h = 0.0;       // entropy -E sum psi e^psi
  double lambda = 0.0;  // Lyapunov exponent E sum phi e^psi
  Eigen::VectorXd beta; // E sum X e^psi
};

/// The unique t with E sum exp(<q, X_i - alpha> - t phi_i) = 1.
ImplicitPressurePoint implicit_pressure(const BranchLaw& law, const Eigen::VectorXd& q, const Eigen::VectorXd& alpha,
                                        bool with_hessian = false);

/// Minimiser of q -> implicit_pressure(q, alpha).t; requires alpha in the
/// interior or critical boundary of I_X.
ImplicitPressurePoint q_alpha(const BranchLaw& law, const Eigen::VectorXd& alpha);

/// Lambda_psi(lam) = log E sum exp(<lam, X_i> + psi_i(q, alpha)).
ConvexEval lambda_psi(const BranchLaw& law, const Eigen::VectorXd& q, const Eigen::VectorXd& alpha,
                      const Eigen::VectorXd& lam, int order = 1);
ConvexEval lambda_psi(const BranchLaw& law, const ImplicitPressurePoint& point, const Eigen::VectorXd& lam,
                      int order = 1);

/// inf_lam Lambda_psi(lam) - <lam, target>; argmin empty for recession limits.
LegendreResult lambda_psi_star(const BranchLaw& law, const Eigen::VectorXd& q, const Eigen::VectorXd& alpha,
                               const Eigen::VectorXd& target);

/// sup { <e, alpha> : alpha in I_X } = inf_{s>0} P(s e)/s.
double ix_support(const BranchLaw& law, const Eigen::VectorXd& direction);

/// Diameter of I_X (exact width in d = 1, maximum sampled width otherwise).
double ix_diameter(const BranchLaw& law);

}  // namespace brw
