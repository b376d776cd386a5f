#pragma once

#include "brw/law.hpp"

#include <cmath>
#include <initializer_list>

namespace fixtures {

inline Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline brw::OffspringEntry entry(std::initializer_list<double> x, double phi = 1.0) {
  return brw::OffspringEntry(vec(x), phi);
}

/// One atom, two children at 0 and 1, unit metric.
inline brw::BranchLaw law_a() {
  brw::ExplicitRepr r;
  r.atoms.push_back({1.0, {entry({0.0}), entry({1.0})}, {}});
  return brw::BranchLaw(1, r);
}

/// Two children with X = phi in {1, 2}.
inline brw::BranchLaw law_b() {
  brw::ExplicitRepr r;
  r.atoms.push_back({1.0, {entry({1.0}, 1.0), entry({2.0}, 2.0)}, {}});
  return brw::BranchLaw(1, r);
}

/// N uniform on {1, 2}, X iid Bernoulli(1/2).
inline brw::BranchLaw law_one_two() {
  brw::IidCompoundRepr r;
  r.n_law = {{1, 0.5, {}}, {2, 0.5, {}}};
  r.mu = {{entry({0.0}), 0.5, {}}, {entry({1.0}), 0.5, {}}};
  return brw::BranchLaw(1, r);
}

/// N = n, X uniform on the vertices of the unit square.
inline brw::BranchLaw square_law(int n) {
  brw::IidCompoundRepr r;
  r.n_law = {{n, 1.0, {}}};
  for (double a : {0.0, 1.0})
    for (double b : {0.0, 1.0}) r.mu.push_back({entry({a, b}), 0.25, {}});
  return brw::BranchLaw(2, r);
}

/// Two atoms in the plane with varying companion weights.
inline brw::BranchLaw plane_law() {
  brw::ExplicitRepr r;
  r.atoms.push_back({0.5, {entry({0.0, 0.0}, 1.0), entry({1.0, 0.0}, 1.5)}, {}});
  r.atoms.push_back({0.5, {entry({0.0, 1.0}, 0.7), entry({1.0, 1.0}, 1.0), entry({0.5, 0.25}, 2.0)}, {}});
  return brw::BranchLaw(2, r);
}

/// Increments in {0, 1, 3} with companion weights differing from 1.
inline brw::BranchLaw line_law() {
  brw::ExplicitRepr r;
  r.atoms.push_back({0.25, {entry({0.0}, 0.5), entry({3.0}, 1.25)}, {}});
  r.atoms.push_back({0.75, {entry({1.0}, 1.0), entry({0.0}, 0.5), entry({1.0}, 1.0)}, {}});
  return brw::BranchLaw(1, r);
}

inline double binary_entropy(double a) { return -a * std::log(a) - (1 - a) * std::log(1 - a); }

}  // namespace fixtures
