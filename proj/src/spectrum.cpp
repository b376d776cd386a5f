#include "brw/spectrum.hpp"

#include "brw/faces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace brw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double boundary_value(const BranchLaw& law, const Eigen::VectorXd& alpha) {
  for (const auto& face : classify_faces(law)) {
    if (face.level != 1) continue;
    if (!face.subspace.contains(alpha)) continue;
    return face_restricted_spectrum(law, face, alpha);
  }
  return -kInf;
}

}  // namespace

SpectrumRow spectrum_point(const BranchLaw& law, const Eigen::VectorXd& alpha, Metric metric) {
  const BranchLaw metric_law = metric == Metric::unit ? with_unit_metric(law) : law;
  SpectrumRow row;
  row.alpha = alpha;
  const Membership m = membership_IX(law, alpha);
  row.cls = m.cls;
  row.in_IX = in_IX(m.cls);
  row.dim_unit_metric = row.in_IX ? std::max(0.0, m.value) : -kInf;
  if (in_tilde_IX(m.cls)) {
    const ImplicitPressurePoint p = q_alpha(metric_law, alpha);
    row.q_alpha = p.q;
    row.t = p.t;
    row.dim_phi_metric = std::max(0.0, p.t);
  } else if (row.in_IX) {
    row.dim_phi_metric = std::max(0.0, boundary_value(metric_law, alpha));
    row.t = row.dim_phi_metric;
  } else {
    row.dim_phi_metric = -kInf;
    row.t = -kInf;
  }
  return row;
}

std::vector<SpectrumRow> spectrum_table(const BranchLaw& law, const std::vector<Eigen::VectorXd>& grid, Metric metric) {
  std::vector<SpectrumRow> rows;
  rows.reserve(grid.size());
  for (const auto& a : grid) rows.push_back(spectrum_point(law, a, metric));
  return rows;
}

double ek_set_spectrum(const BranchLaw& law, const std::vector<Eigen::VectorXd>& polyline, Metric metric) {
  if (polyline.empty()) throw std::invalid_argument("empty target set");
  for (const auto& v : polyline)
    if (!in_IX(membership_IX(law, v).cls)) throw std::domain_error("target vertex lies outside I_X");
  double best = spectrum_point(law, polyline.front(), metric).dim_phi_metric;
  for (std::size_t s = 1; s < polyline.size(); ++s) {
    const Eigen::VectorXd& a = polyline[s - 1];
    const Eigen::VectorXd& b = polyline[s];
    const int pieces = std::max(1, static_cast<int>(std::ceil((b - a).norm() / 1e-3)));
    for (int k = 1; k <= pieces; ++k) {
      const Eigen::VectorXd x = a + (b - a) * (static_cast<double>(k) / pieces);
      best = std::min(best, spectrum_point(law, x, metric).dim_phi_metric);
    }
  }
  return best;
}

}  // namespace brw
