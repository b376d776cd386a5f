#pragma once

#include "brw/geometry.hpp"
#include "brw/law.hpp"

#include <optional>
#include <string>
#include <vector>

namespace brw {

/// Exact hull of the distinct increment values, with the intensity mass
/// carried by each value.
struct Hull {
  ExactHull geometry;
  std::vector<Rational> mass;  // per geometry.points() index

  const std::vector<RationalVector>& points() const { return geometry.points(); }
  const std::vector<HullFacet>& facets() const { return geometry.facets(); }
  Rational mass_of(const std::vector<int>& support) const;
};

/// Throws for d > 3 and for laws whose values span a proper affine subspace.
Hull convex_hull_of_support(const BranchLaw& law);

/// E sum_i 1{<normal, X_i> > offset}; zero for every facet of the hull.
double positive_side_mass_check(const BranchLaw& law, const HullFacet& facet);

enum class FaceClass { Ftilde, Fbar_unit, Fbar_point };
std::string to_string(FaceClass c);

struct FaceRecord {
  AffineSubspace subspace;  // affine hull of the support values on the face
  int dim = 0;
  double en = 0.0;  // E(N^F)
  Rational en_exact = 0;
  Eigen::VectorXd alpha_F;
  RationalVector alpha_F_exact;
  FaceClass cls = FaceClass::Ftilde;
  int level = 1;
  std::optional<int> parent;
  std::vector<int> support;  // indices into Hull::points()
};

/// Recursive classification: at each level the relative facets of the current
/// face with E(N^F) >= 1 are kept; faces of dimension >= 1 with E(N^F) > 1 are
/// Ftilde and are refined further, the others are terminal. A face reached
/// from several parents is recorded once, under the first parent.
std::vector<FaceRecord> classify_faces(const BranchLaw& law);

struct PolytopeCriterion {
  bool holds = false;
  std::vector<RationalVector> failing_vertices;
};

/// True iff every hull vertex P has E(N^{P}) >= 1.
PolytopeCriterion polytope_criterion(const BranchLaw& law);

/// Level-set dimension at alpha in the face, computed on the face-restricted
/// law. With unit_metric the companion weights are replaced by 1.
double face_restricted_spectrum(const BranchLaw& law, const FaceRecord& face, const Eigen::VectorXd& alpha,
                                bool unit_metric = false);

/// Boundary cumulant Lambda^F_alpha(lam).
double lambda_F(const BranchLaw& law, const FaceRecord& face, const Eigen::VectorXd& alpha, const Eigen::VectorXd& lam);

/// Level set of the restricted spectrum inside one classified face.
struct BoundaryPiece {
  int face = 0;  // index into DecompositionReport::faces
  int dim = 0;
  // dim 0: the point; dim 1: segment endpoints; dim 2: sampled boundary polygon.
  std::vector<Eigen::VectorXd> outline;
};

struct SupportingHyperplane {
  RationalVector normal;
  Rational offset;
  double en = 0.0;
  std::vector<int> support;
};

struct DecompositionReport {
  std::vector<SupportingHyperplane> hyperplanes;  // facets of the hull with E(N^H) >= 1
  std::vector<FaceRecord> faces;
  std::vector<BoundaryPiece> pieces;
  bool disjoint = false;
  std::vector<std::string> messages;
};

DecompositionReport boundary_decomposition(const BranchLaw& law);

}  // namespace brw
