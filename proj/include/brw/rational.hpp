#pragma once

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include <string_view>
#include <vector>

namespace brw {

using Rational = boost::multiprecision::cpp_rational;
using RationalVector = std::vector<Rational>;

/// Parses "12", "-0.25", "1.5e-3" or "3/4" into an exact rational.
/// Throws std::invalid_argument on malformed input.
Rational parse_decimal(std::string_view text);

/// Exact value of a finite double (every double is a dyadic rational).
Rational exact_rational(double value);

double to_double(const Rational& value);

RationalVector exact_vector(const Eigen::Ref<const Eigen::VectorXd>& v);
Eigen::VectorXd to_eigen(const RationalVector& v);

RationalVector minus(const RationalVector& a, const RationalVector& b);
RationalVector plus(const RationalVector& a, const RationalVector& b);
RationalVector scaled(const Rational& s, const RationalVector& v);
Rational dot(const RationalVector& a, const RationalVector& b);
bool is_zero(const RationalVector& v);

// Small dense exact linear algebra. Matrices are lists of rows.
using RationalRows = std::vector<RationalVector>;

/// Row-reduces in place to reduced row echelon form; returns pivot columns.
std::vector<int> row_reduce(RationalRows& rows, int cols);

int rank(RationalRows rows, int cols);

/// Basis of { v : rows * v = 0 }.
std::vector<RationalVector> nullspace(RationalRows rows, int cols);

/// Dimension of the affine hull of the points, -1 for an empty set.
int affine_rank(const std::vector<RationalVector>& points);

/// Exact affine frame: base point plus linearly independent directions.
struct RationalFrame {
  RationalVector base;
  std::vector<RationalVector> directions;

  int dim() const { return static_cast<int>(directions.size()); }
  int ambient_dim() const { return static_cast<int>(base.size()); }

  /// True when p lies in base + span(directions).
  bool contains(const RationalVector& p) const;

  /// Coordinates c with p = base + sum_j c_j directions[j]; p must be contained.
  RationalVector coordinates(const RationalVector& p) const;
};

/// Frame spanned by the given points (base = first point, greedy independent directions).
RationalFrame affine_frame(const std::vector<RationalVector>& points);

}  // namespace brw
