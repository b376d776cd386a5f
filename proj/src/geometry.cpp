#include "brw/geometry.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace brw {

namespace {

std::vector<int> intersect(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool includes_all(const std::vector<int>& sorted, const std::vector<int>& subset) {
  for (int s : subset)
    if (!std::binary_search(sorted.begin(), sorted.end(), s)) return false;
  return true;
}

void canonicalise(RationalVector& n) {
  for (const auto& c : n) {
    if (c != 0) {
      const Rational scale = abs(c);
      for (auto& v : n) v /= scale;
      return;
    }
  }
}

}  // namespace

ExactHull::ExactHull(std::vector<RationalVector> points) : points_(std::move(points)) {
  if (points_.empty()) throw std::invalid_argument("hull of an empty point set");
  ambient_dim_ = static_cast<int>(points_.front().size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (static_cast<int>(points_[i].size()) != ambient_dim_) throw std::invalid_argument("hull points differ in dimension");
    for (std::size_t j = 0; j < i; ++j)
      if (points_[i] == points_[j]) throw std::invalid_argument("hull points must be distinct");
  }
  frame_ = affine_frame(points_);
  build_facets();
  build_faces();
}

void ExactHull::build_facets() {
  const int k = dim();
  const int n = static_cast<int>(points_.size());
  if (k == 0) return;
  std::vector<int> subset(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) subset[static_cast<std::size_t>(i)] = i;
  while (true) {
    bool known = false;
    for (const auto& f : facets_)
      if (includes_all(f.points, subset)) {
        known = true;
        break;
      }
    if (!known) {
      const RationalVector& a = points_[static_cast<std::size_t>(subset[0])];
      RationalRows m;
      for (int j = 1; j < k; ++j) {
        const RationalVector diff = minus(points_[static_cast<std::size_t>(subset[static_cast<std::size_t>(j)])], a);
        RationalVector row;
        for (const auto& dir : frame_.directions) row.push_back(dot(diff, dir));
        m.push_back(std::move(row));
      }
      const auto ns = nullspace(std::move(m), k);
      if (ns.size() == 1) {
        RationalVector normal(static_cast<std::size_t>(ambient_dim_), Rational(0));
        for (int l = 0; l < k; ++l) normal = plus(normal, scaled(ns[0][static_cast<std::size_t>(l)], frame_.directions[static_cast<std::size_t>(l)]));
        bool pos = false, neg = false;
        std::vector<int> on;
        for (int p = 0; p < n; ++p) {
          const Rational s = dot(normal, minus(points_[static_cast<std::size_t>(p)], a));
          if (s > 0) pos = true;
          if (s < 0) neg = true;
          if (s == 0) on.push_back(p);
          if (pos && neg) break;
        }
        if (!(pos && neg)) {
          if (pos) normal = scaled(Rational(-1), normal);
          canonicalise(normal);
          HullFacet f;
          f.offset = dot(normal, a);
          f.normal = std::move(normal);
          f.points = std::move(on);
          facets_.push_back(std::move(f));
        }
      }
    }
    int pos = k - 1;
    while (pos >= 0 && subset[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
    if (pos < 0) break;
    ++subset[static_cast<std::size_t>(pos)];
    for (int j = pos + 1; j < k; ++j) subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
  }
}

void ExactHull::build_faces() {
  std::vector<int> all(points_.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  std::set<std::vector<int>> seen;
  std::vector<std::vector<int>> queue;
  for (const auto& f : facets_)
    if (seen.insert(f.points).second) queue.push_back(f.points);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    for (const auto& f : facets_) {
      auto meet = intersect(queue[head], f.points);
      if (!meet.empty() && seen.insert(meet).second) queue.push_back(std::move(meet));
    }
  }
  faces_.push_back({all, dim()});
  std::vector<HullFace> proper;
  for (auto& s : queue) {
    std::vector<RationalVector> pts;
    for (int i : s) pts.push_back(points_[static_cast<std::size_t>(i)]);
    proper.push_back({s, affine_rank(pts)});
  }
  std::stable_sort(proper.begin(), proper.end(), [](const HullFace& a, const HullFace& b) {
    return a.dim != b.dim ? a.dim > b.dim : a.points < b.points;
  });
  for (auto& f : proper) faces_.push_back(std::move(f));
  for (const auto& f : faces_)
    if (f.dim == 0) vertices_.push_back(f.points.front());
}

bool ExactHull::satisfies_all_facets(const RationalVector& p) const {
  for (const auto& f : facets_)
    if (dot(f.normal, p) > f.offset) return false;
  return true;
}

LocatedPoint ExactHull::locate(const RationalVector& p) const {
  LocatedPoint out;
  if (!frame_.contains(p)) return out;
  std::vector<int> face;
  bool tight_any = false;
  for (const auto& f : facets_) {
    const Rational s = dot(f.normal, p);
    if (s > f.offset) return out;
    if (s == f.offset) {
      face = tight_any ? intersect(face, f.points) : f.points;
      tight_any = true;
    }
  }
  if (!tight_any) {
    out.where = HullLocation::relative_interior;
    out.face_points = faces_.front().points;
    out.face_dim = dim();
    return out;
  }
  out.where = HullLocation::boundary;
  std::vector<RationalVector> pts;
  for (int i : face) pts.push_back(points_[static_cast<std::size_t>(i)]);
  out.face_dim = affine_rank(pts);
  out.face_points = std::move(face);
  return out;
}

LocatedPoint ExactHull::locate_approx(const Eigen::VectorXd& p, double tol) const {
  LocatedPoint out;
  const int k = dim();
  const Eigen::VectorXd v = p - to_eigen(frame_.base);
  if (k == 0) {
    if (v.norm() > tol) return out;
  } else {
    Eigen::MatrixXd dirs(ambient_dim_, k);
    for (int j = 0; j < k; ++j) dirs.col(j) = to_eigen(frame_.directions[static_cast<std::size_t>(j)]);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(dirs).householderQ() * Eigen::MatrixXd::Identity(ambient_dim_, k);
    if ((v - q * (q.transpose() * v)).norm() > tol) return out;
  }
  std::vector<int> face;
  bool tight_any = false;
  for (const auto& f : facets_) {
    const Eigen::VectorXd n = to_eigen(f.normal);
    const double s = (n.dot(p) - to_double(f.offset)) / n.norm();
    if (s > tol) return out;
    if (s >= -tol) {
      face = tight_any ? intersect(face, f.points) : f.points;
      tight_any = true;
    }
  }
  if (!tight_any) {
    out.where = HullLocation::relative_interior;
    out.face_points = faces_.front().points;
    out.face_dim = k;
    return out;
  }
  out.where = HullLocation::boundary;
  std::vector<RationalVector> pts;
  for (int i : face) pts.push_back(points_[static_cast<std::size_t>(i)]);
  out.face_dim = affine_rank(pts);
  out.face_points = std::move(face);
  return out;
}

std::vector<int> ExactHull::points_on_affine_hull(const std::vector<int>& subset) const {
  std::vector<RationalVector> pts;
  for (int i : subset) pts.push_back(points_[static_cast<std::size_t>(i)]);
  const RationalFrame f = affine_frame(pts);
  std::vector<int> out;
  for (std::size_t i = 0; i < points_.size(); ++i)
    if (f.contains(points_[i])) out.push_back(static_cast<int>(i));
  return out;
}

}  // namespace brw
