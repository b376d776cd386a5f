#pragma once

#include "brw/rational.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace brw {

/// One offspring: increment x in R^d and metric weight phi > 0.
/// x_exact carries the exact coordinates when the input was rational;
/// it is empty for coordinates produced by floating re-coordinatization.
struct OffspringEntry {
  Eigen::VectorXd x;
  double phi = 1.0;
  std::optional<RationalVector> x_exact;

  OffspringEntry() = default;
  OffspringEntry(Eigen::VectorXd x_, double phi_);
  OffspringEntry(RationalVector exact, double phi_);
  static OffspringEntry inexact(Eigen::VectorXd x_, double phi_);
};

struct IncrementAtom {
  double p = 0.0;
  std::vector<OffspringEntry> offspring;
  std::optional<Rational> p_exact;
};

struct CountAtom {
  int n = 0;
  double p = 0.0;
  std::optional<Rational> p_exact;
};

struct ValueAtom {
  OffspringEntry value;
  double p = 0.0;
  std::optional<Rational> p_exact;
};

struct ExplicitRepr {
  std::vector<IncrementAtom> atoms;
};

/// N drawn from n_law, then N values drawn iid from mu, independently of N.
struct IidCompoundRepr {
  std::vector<CountAtom> n_law;
  std::vector<ValueAtom> mu;
};

/// Merged intensity measure w_j = E sum_i 1{(X_i, phi_i) = (x_j, phi_j)}.
/// Every pressure-type quantity of the law is a function of it.
struct Intensity {
  Eigen::MatrixXd x;  // d x m
  Eigen::VectorXd phi;
  Eigen::VectorXd weight;
  std::vector<Rational> weight_exact;
  std::vector<RationalVector> x_exact;  // empty when coordinates are inexact

  Eigen::Index size() const { return weight.size(); }
  bool exact() const { return size() == 0 || !x_exact.empty(); }
};

class BranchLaw {
 public:
  BranchLaw(int d, ExplicitRepr repr, bool allow_extinction = false);
  BranchLaw(int d, IidCompoundRepr repr, bool allow_extinction = false);

  int dim() const { return d_; }
  bool allow_extinction() const { return allow_extinction_; }
  bool is_explicit() const { return std::holds_alternative<ExplicitRepr>(repr_); }
  const ExplicitRepr& explicit_repr() const { return std::get<ExplicitRepr>(repr_); }
  const IidCompoundRepr& iid_repr() const { return std::get<IidCompoundRepr>(repr_); }

  const Intensity& intensity() const { return intensity_; }
  double mean_offspring() const { return intensity_.weight.sum(); }
  Rational mean_offspring_exact() const;
  int max_offspring() const;

  /// Expands an iid-compound law into explicit atoms (throws beyond max_atoms).
  BranchLaw to_explicit(std::size_t max_atoms = 100000) const;

 private:
  void check_structure() const;
  void build_intensity();

  int d_;
  std::variant<ExplicitRepr, IidCompoundRepr> repr_;
  bool allow_extinction_;
  Intensity intensity_;
};

struct ValidationReport {
  double mean_offspring = 0.0;
  bool nondegenerate = false;
  int full_dim = 0;
  double probability_sum = 0.0;
  std::vector<std::string> messages;
};

/// Hard errors (std::invalid_argument) for unnormalised probabilities and
/// E(N) <= 1 without allow_extinction.
ValidationReport validate(const BranchLaw& law);

inline constexpr double kProbabilityTolerance = 1e-12;
inline constexpr double kGeometryTolerance = 1e-9;

/// E sum_{i<=N} f(X_i, phi_i) evaluated on the representation itself.
template <class F>
double expect_sum(const BranchLaw& law, F&& f) {
  double total = 0.0;
  if (law.is_explicit()) {
    for (const auto& atom : law.explicit_repr().atoms) {
      double inner = 0.0;
      for (const auto& e : atom.offspring) inner += f(e.x, e.phi);
      total += atom.p * inner;
    }
  } else {
    const auto& r = law.iid_repr();
    double mean_n = 0.0;
    for (const auto& c : r.n_law) mean_n += c.p * c.n;
    for (const auto& v : r.mu) total += v.p * f(v.value.x, v.value.phi);
    total *= mean_n;
  }
  return total;
}

struct TiltedEntry {
  double weight = 0.0;
  OffspringEntry entry;
};

struct FiniteTiltedLaw {
  std::vector<TiltedEntry> entries;
  double total = 0.0;
};

/// Weights w = E[count] * exp(<q, x - alpha> - t phi) over the intensity support.
FiniteTiltedLaw tilt(const BranchLaw& law, const Eigen::VectorXd& q, const Eigen::VectorXd& alpha, double t);

/// Same law with every companion weight phi replaced by 1.
BranchLaw with_unit_metric(const BranchLaw& law);

/// Affine subspace base + span(basis) with orthonormal basis columns.
/// When the subspace was built from rational points the exact frame is kept
/// and membership of exact points is decided without tolerance.
struct AffineSubspace {
  Eigen::VectorXd base;
  Eigen::MatrixXd basis;  // d x k
  std::optional<RationalFrame> exact;

  int dim() const { return static_cast<int>(basis.cols()); }
  bool contains(const OffspringEntry& e) const;
  bool contains(const Eigen::VectorXd& x) const;

  static AffineSubspace whole_space(int d);
  static AffineSubspace from_frame(const RationalFrame& frame);
};

struct FaceMass {
  double mass = 0.0;
  Rational mass_exact = 0;
  Eigen::VectorXd barycenter;
};

/// E(N^F) and the barycenter alpha_F of the intensity restricted to F.
FaceMass face_mass(const BranchLaw& law, const AffineSubspace& face);

/// Law of (N^F, X_F - alpha_F, phi_F) in orthonormal coordinates of dir(F).
BranchLaw restrict_to_face(const BranchLaw& law, const AffineSubspace& face);

}  // namespace brw
