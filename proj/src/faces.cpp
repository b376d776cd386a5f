#include "brw/faces.hpp"

#include "brw/pressure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

namespace brw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<RationalVector> points_of(const Hull& hull, const std::vector<int>& support) {
  std::vector<RationalVector> pts;
  for (int i : support) pts.push_back(hull.points()[static_cast<std::size_t>(i)]);
  return pts;
}

RationalVector barycenter(const Hull& hull, const std::vector<int>& support) {
  const std::size_t d = hull.points().front().size();
  RationalVector acc(d, Rational(0));
  Rational total = 0;
  for (int i : support) {
    const Rational& m = hull.mass[static_cast<std::size_t>(i)];
    acc = plus(acc, scaled(m, hull.points()[static_cast<std::size_t>(i)]));
    total += m;
  }
  return scaled(Rational(1) / total, acc);
}

// Entries of the intensity whose value lies on the given support set.
std::vector<Eigen::Index> entries_on(const BranchLaw& law, const Hull& hull, const std::vector<int>& support) {
  const Intensity& in = law.intensity();
  std::vector<Eigen::Index> out;
  for (Eigen::Index j = 0; j < in.size(); ++j)
    for (int i : support)
      if (in.x_exact[static_cast<std::size_t>(j)] == hull.points()[static_cast<std::size_t>(i)]) {
        out.push_back(j);
        break;
      }
  return out;
}

FaceRecord make_record(const Hull& hull, std::vector<int> support, FaceClass cls, int level, std::optional<int> parent) {
  FaceRecord r;
  const auto pts = points_of(hull, support);
  r.subspace = AffineSubspace::from_frame(affine_frame(pts));
  r.dim = r.subspace.dim();
  r.en_exact = hull.mass_of(support);
  r.en = to_double(r.en_exact);
  r.alpha_F_exact = barycenter(hull, support);
  r.alpha_F = to_eigen(r.alpha_F_exact);
  r.cls = cls;
  r.level = level;
  r.parent = parent;
  r.support = std::move(support);
  return r;
}

// Global support sets of the relative facets of conv(points of `support`).
std::vector<std::vector<int>> relative_facets(const Hull& hull, const std::vector<int>& support) {
  const ExactHull sub(points_of(hull, support));
  std::vector<std::vector<int>> out;
  for (const auto& f : sub.facets()) {
    std::vector<int> g;
    for (int local : f.points) g.push_back(support[static_cast<std::size_t>(local)]);
    std::sort(g.begin(), g.end());
    out.push_back(std::move(g));
  }
  return out;
}

// Implicit pressure at q = 0 of the offspring sitting on the support set.
double zero_tilt_pressure(const BranchLaw& law, const std::vector<Eigen::Index>& cols) {
  const Intensity& in = law.intensity();
  Eigen::VectorXd a(static_cast<Eigen::Index>(cols.size())), phi(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    a(static_cast<Eigen::Index>(c)) = std::log(in.weight(cols[c]));
    phi(static_cast<Eigen::Index>(c)) = in.phi(cols[c]);
  }
  // Sum w e^{-t phi} = 1 is monotone in t; bisection on the log sum.
  auto F = [&](double t) { return log_sum_exp((a - t * phi).eval()); };
  double lo = -1.0, hi = 1.0;
  while (F(lo) <= 0.0) lo *= 2.0;
  while (F(hi) >= 0.0) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++i) {
    const double mid = 0.5 * (lo + hi);
    (F(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double spectrum_on(const BranchLaw& law, const Hull& hull, const std::vector<int>& support, const Eigen::VectorXd& alpha) {
  const auto pts = points_of(hull, support);
  const ExactHull sub(pts);
  const LocatedPoint loc = sub.locate_approx(alpha, kGeometryTolerance);
  if (loc.where == HullLocation::outside) throw std::invalid_argument("alpha does not lie in the face");
  const Rational mass = hull.mass_of(support);
  if (mass < 1) return -kInf;
  const Eigen::VectorXd alpha_F = to_eigen(barycenter(hull, support));
  if (mass == 1) return (alpha - alpha_F).norm() <= kGeometryTolerance ? 0.0 : -kInf;
  if (sub.dim() == 0) return zero_tilt_pressure(law, entries_on(law, hull, support));
  if (loc.where == HullLocation::boundary) {
    std::vector<int> g;
    for (int local : loc.face_points) g.push_back(support[static_cast<std::size_t>(local)]);
    return spectrum_on(law, hull, g, alpha);
  }
  const AffineSubspace face = AffineSubspace::from_frame(affine_frame(pts));
  const BranchLaw restricted = restrict_to_face(law, face);
  const Eigen::VectorXd origin = face_mass(law, face).barycenter;
  const Eigen::VectorXd local = face.basis.transpose() * (alpha - origin);
  const Membership m = membership_IX(restricted, local);
  if (m.cls == IXClass::outside) return -kInf;
  if (!in_tilde_IX(m.cls)) throw std::runtime_error("face location and restricted membership disagree");
  return q_alpha(restricted, local).t;
}

}  // namespace

Rational Hull::mass_of(const std::vector<int>& support) const {
  Rational s = 0;
  for (int i : support) s += mass[static_cast<std::size_t>(i)];
  return s;
}

Hull convex_hull_of_support(const BranchLaw& law) {
  if (law.dim() > 3) throw std::invalid_argument("face geometry is supported for d <= 3 only");
  const Intensity& in = law.intensity();
  if (!in.exact()) throw std::invalid_argument("face geometry needs exact increment values");
  std::vector<RationalVector> pts;
  std::vector<Rational> mass;
  for (Eigen::Index j = 0; j < in.size(); ++j) {
    const RationalVector& x = in.x_exact[static_cast<std::size_t>(j)];
    auto it = std::find(pts.begin(), pts.end(), x);
    if (it == pts.end()) {
      pts.push_back(x);
      mass.push_back(in.weight_exact[static_cast<std::size_t>(j)]);
    } else {
      mass[static_cast<std::size_t>(it - pts.begin())] += in.weight_exact[static_cast<std::size_t>(j)];
    }
  }
  Hull h{ExactHull(std::move(pts)), std::move(mass)};
  if (h.geometry.dim() < law.dim())
    throw std::domain_error("increment values lie in a proper affine subspace; the hull has empty interior");
  return h;
}

double positive_side_mass_check(const BranchLaw& law, const HullFacet& facet) {
  const Intensity& in = law.intensity();
  Rational m = 0;
  for (Eigen::Index j = 0; j < in.size(); ++j) {
    const bool above = in.exact() ? dot(facet.normal, in.x_exact[static_cast<std::size_t>(j)]) > facet.offset
                                  : to_eigen(facet.normal).dot(in.x.col(j)) > to_double(facet.offset) + kGeometryTolerance;
    if (above) m += in.weight_exact[static_cast<std::size_t>(j)];
  }
  return to_double(m);
}

std::string to_string(FaceClass c) {
  switch (c) {
    case FaceClass::Ftilde: return "Ftilde";
    case FaceClass::Fbar_unit: return "Fbar_unit";
    case FaceClass::Fbar_point: return "Fbar_point";
  }
  return "Ftilde";
}

std::vector<FaceRecord> classify_faces(const BranchLaw& law) {
  const Hull hull = convex_hull_of_support(law);
  const int d = law.dim();
  std::vector<FaceRecord> records;
  std::map<std::vector<int>, int> seen;

  struct Pending {
    std::vector<int> support;
    std::optional<int> parent;
    int level;
  };
  std::vector<Pending> queue;
  queue.push_back({hull.geometry.faces().front().points, std::nullopt, 0});
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const Pending cur = queue[head];
    for (auto& g : relative_facets(hull, cur.support)) {
      const Rational mass = hull.mass_of(g);
      if (mass < 1 || seen.count(g)) continue;
      const int dim = affine_rank(points_of(hull, g));
      FaceClass cls = FaceClass::Fbar_unit;
      if (mass > 1) cls = dim >= 1 ? FaceClass::Ftilde : FaceClass::Fbar_point;
      const int index = static_cast<int>(records.size());
      seen[g] = index;
      records.push_back(make_record(hull, g, cls, cur.level + 1, cur.parent));
      if (cls == FaceClass::Ftilde && cur.level + 1 < d) queue.push_back({std::move(g), index, cur.level + 1});
    }
  }
  return records;
}

PolytopeCriterion polytope_criterion(const BranchLaw& law) {
  const Hull hull = convex_hull_of_support(law);
  PolytopeCriterion out;
  for (int v : hull.geometry.vertices())
    if (hull.mass[static_cast<std::size_t>(v)] < 1) out.failing_vertices.push_back(hull.points()[static_cast<std::size_t>(v)]);
  out.holds = out.failing_vertices.empty();
  return out;
}

double face_restricted_spectrum(const BranchLaw& law, const FaceRecord& face, const Eigen::VectorXd& alpha,
                                bool unit_metric) {
  if (alpha.size() != law.dim()) throw std::invalid_argument("alpha has the wrong dimension");
  if (unit_metric) return face_restricted_spectrum(with_unit_metric(law), face, alpha, false);
  const Hull hull = convex_hull_of_support(law);
  return spectrum_on(law, hull, face.support, alpha);
}

double lambda_F(const BranchLaw& law, const FaceRecord& face, const Eigen::VectorXd& alpha, const Eigen::VectorXd& lam) {
  if (lam.size() != law.dim() || alpha.size() != law.dim()) throw std::invalid_argument("dimension mismatch");
  if (face.dim == 0) return lam.dot(face.alpha_F);
  const Hull hull = convex_hull_of_support(law);
  const Intensity& in = law.intensity();
  const auto cols = entries_on(law, hull, face.support);
  Eigen::VectorXd a(static_cast<Eigen::Index>(cols.size()));
  if (face.en_exact == 1) {
    for (std::size_t c = 0; c < cols.size(); ++c)
      a(static_cast<Eigen::Index>(c)) = std::log(in.weight(cols[c])) + lam.dot(in.x.col(cols[c]));
    return log_sum_exp(a);
  }
  const BranchLaw restricted = restrict_to_face(law, face.subspace);
  const Eigen::VectorXd origin = face_mass(law, face.subspace).barycenter;
  const ImplicitPressurePoint p = q_alpha(restricted, (face.subspace.basis.transpose() * (alpha - origin)).eval());
  const Eigen::VectorXd q = face.subspace.basis * p.q;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto j = cols[c];
    a(static_cast<Eigen::Index>(c)) =
        std::log(in.weight(j)) + q.dot(in.x.col(j) - alpha) - p.t * in.phi(j) + lam.dot(in.x.col(j));
  }
  return log_sum_exp(a);
}

namespace {

// Largest s in [0, s_max] with P*(origin + s u) >= 0, given P*(origin) > 0.
double level_radius(const BranchLaw& law, const Eigen::VectorXd& origin, const Eigen::VectorXd& u, double s_max) {
  auto f = [&](double s) { return p_tilde_star(law, (origin + s * u).eval()).value; };
  if (f(s_max) >= 0.0) return s_max;
  double lo = 0.0, hi = s_max;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) >= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

// Distance from origin along u to the relative boundary of conv(points).
double exit_distance(const ExactHull& sub, const Eigen::VectorXd& origin, const Eigen::VectorXd& u) {
  double best = kInf;
  for (const auto& f : sub.facets()) {
    const Eigen::VectorXd n = to_eigen(f.normal);
    const double rate = n.dot(u);
    if (rate > 1e-15) best = std::min(best, (to_double(f.offset) - n.dot(origin)) / rate);
  }
  return best;
}

}  // namespace

DecompositionReport boundary_decomposition(const BranchLaw& law) {
  const Hull hull = convex_hull_of_support(law);
  DecompositionReport rep;
  for (const auto& f : hull.facets()) {
    const Rational m = hull.mass_of(f.points);
    if (m >= 1) rep.hyperplanes.push_back({f.normal, f.offset, to_double(m), f.points});
  }
  rep.faces = classify_faces(law);

  for (std::size_t i = 0; i < rep.faces.size(); ++i) {
    const FaceRecord& r = rep.faces[i];
    BoundaryPiece piece;
    piece.face = static_cast<int>(i);
    if (r.dim == 0 || r.cls == FaceClass::Fbar_unit) {
      piece.dim = 0;
      piece.outline.push_back(r.alpha_F);
    } else {
      const ExactHull sub(points_of(hull, r.support));
      piece.dim = r.dim;
      const int samples = r.dim == 1 ? 2 : 64;
      for (int s = 0; s < samples; ++s) {
        Eigen::VectorXd u;
        if (r.dim == 1) {
          u = (s == 0 ? -1.0 : 1.0) * r.subspace.basis.col(0);
        } else {
          const double th = 2.0 * std::numbers::pi * s / samples;
          u = std::cos(th) * r.subspace.basis.col(0) + std::sin(th) * r.subspace.basis.col(1);
        }
        const double reach = exit_distance(sub, r.alpha_F, u);
        piece.outline.push_back(r.alpha_F + level_radius(law, r.alpha_F, u, reach) * u);
      }
    }
    rep.pieces.push_back(std::move(piece));
  }

  // Pieces sit in relative interiors of faces of one polytope, so they are
  // disjoint as soon as the faces are distinct faces of the hull.
  rep.disjoint = true;
  std::vector<std::vector<int>> hull_faces;
  for (const auto& f : hull.geometry.faces()) hull_faces.push_back(f.points);
  for (std::size_t i = 0; i < rep.faces.size(); ++i) {
    const auto& a = rep.faces[i];
    if (std::find(hull_faces.begin(), hull_faces.end(), a.support) == hull_faces.end()) {
      rep.disjoint = false;
      rep.messages.push_back("face " + std::to_string(i) + " is not a face of the hull");
    }
    for (std::size_t j = 0; j < rep.faces.size(); ++j) {
      if (i == j) continue;
      const auto& b = rep.faces[j];
      if (a.support == b.support) {
        rep.disjoint = false;
        rep.messages.push_back("faces " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
      }
      const ExactHull hb(points_of(hull, b.support));
      if (hb.locate(a.alpha_F_exact).where == HullLocation::relative_interior) {
        rep.disjoint = false;
        rep.messages.push_back("barycenter of face " + std::to_string(i) + " lies in the relative interior of face " +
                               std::to_string(j));
      }
    }
  }
  return rep;
}

}  // namespace brw
