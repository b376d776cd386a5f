#pragma once

#include "brw/pressure.hpp"

#include <vector>

namespace brw {

enum class Metric { unit, phi };

struct SpectrumRow {
  Eigen::VectorXd alpha;
  bool in_IX = false;
  IXClass cls = IXClass::outside;
  double dim_unit_metric = 0.0;  // P*(alpha), -inf outside I_X
  double dim_phi_metric = 0.0;   // level-set dimension in the chosen metric
  std::optional<Eigen::VectorXd> q_alpha;
  double t = 0.0;
};

/// Pointwise spectrum: q_alpha inside the interior/critical set, the
/// face-restricted value on the rest of I_X, -inf outside.
std::vector<SpectrumRow> spectrum_table(const BranchLaw& law, const std::vector<Eigen::VectorXd>& grid, Metric metric);

SpectrumRow spectrum_point(const BranchLaw& law, const Eigen::VectorXd& alpha, Metric metric);

/// Minimum of the pointwise spectrum over a polyline densified to 1e-3 spacing.
double ek_set_spectrum(const BranchLaw& law, const std::vector<Eigen::VectorXd>& polyline, Metric metric);

}  // namespace brw
