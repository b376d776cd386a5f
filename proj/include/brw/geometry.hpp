#pragma once

#include "brw/rational.hpp"

#include <Eigen/Dense>

#include <vector>

namespace brw {

/// Facet of a hull relative to its affine hull: <normal, x> <= offset on the
/// hull with equality exactly on `points`. The normal lies in the direction
/// space of the affine hull and its first nonzero coordinate has modulus 1.
struct HullFacet {
  RationalVector normal;
  Rational offset;
  std::vector<int> points;
};

struct HullFace {
  std::vector<int> points;  // indices of input points lying on the face
  int dim = 0;
};

enum class HullLocation { relative_interior, boundary, outside };

struct LocatedPoint {
  HullLocation where = HullLocation::outside;
  std::vector<int> face_points;  // minimal face containing the point (all points when interior)
  int face_dim = -1;
};

/// Exact convex hull of finitely many rational points in any ambient dimension.
/// Facets are found by enumerating affinely independent point subsets of size
/// dim and keeping the hyperplanes with every point on one side; the face
/// lattice is the closure of facet point sets under intersection.
class ExactHull {
 public:
  explicit ExactHull(std::vector<RationalVector> points);

  int ambient_dim() const { return ambient_dim_; }
  int dim() const { return frame_.dim(); }
  const RationalFrame& affine_hull() const { return frame_; }
  const std::vector<RationalVector>& points() const { return points_; }
  const std::vector<int>& vertices() const { return vertices_; }
  const std::vector<HullFacet>& facets() const { return facets_; }

  /// All nonempty faces, the hull itself first, then by decreasing dimension.
  const std::vector<HullFace>& faces() const { return faces_; }

  bool satisfies_all_facets(const RationalVector& p) const;
  LocatedPoint locate(const RationalVector& p) const;

  /// Location of a floating point: facet slacks and the distance to the affine
  /// hull are compared against tol (Euclidean distance units).
  LocatedPoint locate_approx(const Eigen::VectorXd& p, double tol) const;

  /// Points of the input lying on the affine hull of the given point subset.
  std::vector<int> points_on_affine_hull(const std::vector<int>& subset) const;

 private:
  void build_facets();
  void build_faces();

  int ambient_dim_ = 0;
  std::vector<RationalVector> points_;
  RationalFrame frame_;
  std::vector<int> vertices_;
  std::vector<HullFacet> facets_;
  std::vector<HullFace> faces_;
};

}  // namespace brw
