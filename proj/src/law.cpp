#include "brw/law.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace brw {

OffspringEntry::OffspringEntry(Eigen::VectorXd x_, double phi_)
    : x(std::move(x_)), phi(phi_), x_exact(exact_vector(x)) {}

OffspringEntry::OffspringEntry(RationalVector exact, double phi_)
    : x(to_eigen(exact)), phi(phi_), x_exact(std::move(exact)) {}

OffspringEntry OffspringEntry::inexact(Eigen::VectorXd x_, double phi_) {
  OffspringEntry e;
  e.x = std::move(x_);
  e.phi = phi_;
  return e;
}

namespace {

void check_entry(const OffspringEntry& e, int d, const std::string& where) {
  if (e.x.size() != d) throw std::invalid_argument(where + ": increment has wrong dimension");
  if (!e.x.allFinite()) throw std::invalid_argument(where + ": non-finite increment");
  if (!(e.phi > 0.0) || !std::isfinite(e.phi)) throw std::invalid_argument(where + ": phi must be finite and > 0");
  if (e.x_exact && static_cast<int>(e.x_exact->size()) != d)
    throw std::invalid_argument(where + ": exact increment has wrong dimension");
}

void check_probability(double p, const std::string& where) {
  if (!(p > 0.0) || p > 1.0 + kProbabilityTolerance) throw std::invalid_argument(where + ": probability must lie in (0,1]");
}

// Accumulates (x, phi) -> weight, merging identical support points.
class IntensityBuilder {
 public:
  explicit IntensityBuilder(int d) : d_(d) {}

  void add(const OffspringEntry& e, double w, const Rational& w_exact) {
    exact_ = exact_ && e.x_exact.has_value();
    for (auto& s : slots_) {
      if (s.phi == e.phi && same_point(s.entry, e)) {
        s.weight += w;
        s.weight_exact += w_exact;
        return;
      }
    }
    slots_.push_back({e, e.phi, w, w_exact});
  }

  Intensity finish() const {
    Intensity out;
    const auto m = static_cast<Eigen::Index>(slots_.size());
    out.x.resize(d_, m);
    out.phi.resize(m);
    out.weight.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto& s = slots_[static_cast<std::size_t>(j)];
      out.x.col(j) = s.entry.x;
      out.phi(j) = s.phi;
      out.weight_exact.push_back(s.weight_exact);
      out.weight(j) = to_double(s.weight_exact);
      if (exact_) out.x_exact.push_back(*s.entry.x_exact);
    }
    return out;
  }

 private:
  struct Slot {
    OffspringEntry entry;
    double phi;
    double weight;
    Rational weight_exact;
  };

  static bool same_point(const OffspringEntry& a, const OffspringEntry& b) {
    if (a.x_exact && b.x_exact) return *a.x_exact == *b.x_exact;
    return a.x == b.x;
  }

  int d_;
  bool exact_ = true;
  std::vector<Slot> slots_;
};

}  // namespace

BranchLaw::BranchLaw(int d, ExplicitRepr repr, bool allow_extinction)
    : d_(d), repr_(std::move(repr)), allow_extinction_(allow_extinction) {
  for (auto& a : std::get<ExplicitRepr>(repr_).atoms)
    if (!a.p_exact) a.p_exact = exact_rational(a.p);
  check_structure();
  build_intensity();
}

BranchLaw::BranchLaw(int d, IidCompoundRepr repr, bool allow_extinction)
    : d_(d), repr_(std::move(repr)), allow_extinction_(allow_extinction) {
  auto& r = std::get<IidCompoundRepr>(repr_);
  for (auto& c : r.n_law)
    if (!c.p_exact) c.p_exact = exact_rational(c.p);
  for (auto& v : r.mu)
    if (!v.p_exact) v.p_exact = exact_rational(v.p);
  check_structure();
  build_intensity();
}

void BranchLaw::check_structure() const {
  if (d_ < 0) throw std::invalid_argument("law dimension must be >= 1");
  if (is_explicit()) {
    const auto& atoms = explicit_repr().atoms;
    if (atoms.empty()) throw std::invalid_argument("law has no atoms");
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      const std::string where = "atoms[" + std::to_string(a) + "]";
      check_probability(atoms[a].p, where);
      if (atoms[a].offspring.empty() && !allow_extinction_)
        throw std::invalid_argument(where + ": empty offspring list requires allow_extinction");
      for (std::size_t i = 0; i < atoms[a].offspring.size(); ++i)
        check_entry(atoms[a].offspring[i], d_, where + ".offspring[" + std::to_string(i) + "]");
    }
  } else {
    const auto& r = iid_repr();
    if (r.n_law.empty()) throw std::invalid_argument("n_law is empty");
    if (r.mu.empty()) throw std::invalid_argument("mu is empty");
    for (std::size_t k = 0; k < r.n_law.size(); ++k) {
      const std::string where = "n_law[" + std::to_string(k) + "]";
      check_probability(r.n_law[k].p, where);
      if (r.n_law[k].n < 0) throw std::invalid_argument(where + ": negative offspring count");
      if (r.n_law[k].n == 0 && !allow_extinction_)
        throw std::invalid_argument(where + ": N = 0 requires allow_extinction");
    }
    for (std::size_t k = 0; k < r.mu.size(); ++k) {
      const std::string where = "mu[" + std::to_string(k) + "]";
      check_probability(r.mu[k].p, where);
      check_entry(r.mu[k].value, d_, where);
    }
  }
}

void BranchLaw::build_intensity() {
  IntensityBuilder b(d_);
  if (is_explicit()) {
    for (const auto& a : explicit_repr().atoms)
      for (const auto& e : a.offspring) b.add(e, a.p, *a.p_exact);
  } else {
    const auto& r = iid_repr();
    Rational mean_n = 0;
    for (const auto& c : r.n_law) mean_n += *c.p_exact * c.n;
    for (const auto& v : r.mu) {
      const Rational w = mean_n * *v.p_exact;
      b.add(v.value, to_double(w), w);
    }
  }
  intensity_ = b.finish();
}

Rational BranchLaw::mean_offspring_exact() const {
  Rational s = 0;
  for (const auto& w : intensity_.weight_exact) s += w;
  return s;
}

int BranchLaw::max_offspring() const {
  int m = 0;
  if (is_explicit()) {
    for (const auto& a : explicit_repr().atoms) m = std::max(m, static_cast<int>(a.offspring.size()));
  } else {
    for (const auto& c : iid_repr().n_law) m = std::max(m, c.n);
  }
  return m;
}

BranchLaw BranchLaw::to_explicit(std::size_t max_atoms) const {
  if (is_explicit()) return *this;
  const auto& r = iid_repr();
  ExplicitRepr out;
  const std::size_t k = r.mu.size();
  for (const auto& c : r.n_law) {
    double count = std::pow(static_cast<double>(k), c.n);
    if (count + static_cast<double>(out.atoms.size()) > static_cast<double>(max_atoms))
      throw std::length_error("explicit expansion exceeds atom limit");
    std::vector<std::size_t> idx(static_cast<std::size_t>(c.n), 0);
    while (true) {
      IncrementAtom atom;
      Rational p = *c.p_exact;
      for (auto i : idx) {
        atom.offspring.push_back(r.mu[i].value);
        p *= *r.mu[i].p_exact;
      }
      atom.p_exact = p;
      atom.p = to_double(p);
      out.atoms.push_back(std::move(atom));
      std::size_t pos = 0;
      while (pos < idx.size() && ++idx[pos] == k) idx[pos++] = 0;
      if (pos == idx.size()) break;
    }
  }
  return BranchLaw(d_, std::move(out), allow_extinction_);
}

ValidationReport validate(const BranchLaw& law) {
  ValidationReport rep;
  Rational psum = 0;
  if (law.is_explicit()) {
    for (const auto& a : law.explicit_repr().atoms) psum += *a.p_exact;
  } else {
    Rational mu_sum = 0;
    for (const auto& c : law.iid_repr().n_law) psum += *c.p_exact;
    for (const auto& v : law.iid_repr().mu) mu_sum += *v.p_exact;
    if (abs(mu_sum - 1) > Rational(exact_rational(kProbabilityTolerance))) {
      std::ostringstream os;
      os.precision(17);
      os << "value law probabilities sum to " << to_double(mu_sum) << ", not 1";
      throw std::invalid_argument(os.str());
    }
  }
  rep.probability_sum = to_double(psum);
  if (abs(psum - 1) > Rational(exact_rational(kProbabilityTolerance))) {
    std::ostringstream os;
    os.precision(17);
    os << "atom probabilities sum to " << rep.probability_sum << ", not 1 within 1e-12";
    throw std::invalid_argument(os.str());
  }
  rep.mean_offspring = law.mean_offspring();
  if (law.mean_offspring_exact() <= 1 && !law.allow_extinction()) {
    std::ostringstream os;
    os << "mean offspring " << rep.mean_offspring << " <= 1: tree is not supercritical";
    throw std::invalid_argument(os.str());
  }

  const Intensity& in = law.intensity();
  const int d = law.dim();
  if (in.exact()) {
    rep.full_dim = std::max(0, affine_rank(in.x_exact));
  } else if (in.size() > 1) {
    Eigen::MatrixXd centered = in.x.colwise() - in.x.col(0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
    svd.setThreshold(kGeometryTolerance);
    rep.full_dim = static_cast<int>(svd.rank());
  }
  rep.nondegenerate = rep.full_dim == d;
  if (!rep.nondegenerate)
    rep.messages.push_back("increment values lie in a common affine hyperplane (affine rank " +
                           std::to_string(rep.full_dim) + " < " + std::to_string(d) + ")");
  if (d > 3) rep.messages.push_back("dimension > 3: face geometry is unavailable for this law");
  if (law.allow_extinction()) rep.messages.push_back("extinction allowed: simulations condition on survival");
  return rep;
}

FiniteTiltedLaw tilt(const BranchLaw& law, const Eigen::VectorXd& q, const Eigen::VectorXd& alpha, double t) {
  const Intensity& in = law.intensity();
  FiniteTiltedLaw out;
  for (Eigen::Index j = 0; j < in.size(); ++j) {
    const double expo = q.dot(in.x.col(j) - alpha) - t * in.phi(j);
    if (expo > 700.0) {
      std::ostringstream os;
      os << "tilt exponent overflow: |q| = " << q.norm() << ", t = " << t << ", exponent " << expo;
      throw std::overflow_error(os.str());
    }
    TiltedEntry te;
    te.weight = in.weight(j) * std::exp(expo);
    te.entry = in.exact() ? OffspringEntry(in.x_exact[static_cast<std::size_t>(j)], in.phi(j))
                          : OffspringEntry::inexact(in.x.col(j), in.phi(j));
    out.total += te.weight;
    out.entries.push_back(std::move(te));
  }
  return out;
}

BranchLaw with_unit_metric(const BranchLaw& law) {
  auto unit = [](OffspringEntry e) {
    e.phi = 1.0;
    return e;
  };
  if (law.is_explicit()) {
    ExplicitRepr r = law.explicit_repr();
    for (auto& a : r.atoms)
      for (auto& e : a.offspring) e = unit(e);
    return BranchLaw(law.dim(), std::move(r), law.allow_extinction());
  }
  IidCompoundRepr r = law.iid_repr();
  for (auto& v : r.mu) v.value = unit(v.value);
  return BranchLaw(law.dim(), std::move(r), law.allow_extinction());
}

bool AffineSubspace::contains(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd v = x - base;
  const Eigen::VectorXd off = v - basis * (basis.transpose() * v);
  return off.norm() <= kGeometryTolerance;
}

bool AffineSubspace::contains(const OffspringEntry& e) const {
  if (exact && e.x_exact) return exact->contains(*e.x_exact);
  return contains(e.x);
}

AffineSubspace AffineSubspace::whole_space(int d) {
  AffineSubspace s;
  s.base = Eigen::VectorXd::Zero(d);
  s.basis = Eigen::MatrixXd::Identity(d, d);
  RationalFrame f;
  f.base = RationalVector(static_cast<std::size_t>(d), Rational(0));
  for (int i = 0; i < d; ++i) {
    RationalVector e(static_cast<std::size_t>(d), Rational(0));
    e[static_cast<std::size_t>(i)] = 1;
    f.directions.push_back(std::move(e));
  }
  s.exact = std::move(f);
  return s;
}

AffineSubspace AffineSubspace::from_frame(const RationalFrame& frame) {
  AffineSubspace s;
  s.base = to_eigen(frame.base);
  const int d = frame.ambient_dim();
  Eigen::MatrixXd dirs(d, frame.dim());
  for (int j = 0; j < frame.dim(); ++j) dirs.col(j) = to_eigen(frame.directions[static_cast<std::size_t>(j)]);
  if (frame.dim() > 0) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(dirs);
    s.basis = qr.householderQ() * Eigen::MatrixXd::Identity(d, frame.dim());
  } else {
    s.basis = Eigen::MatrixXd(d, 0);
  }
  s.exact = frame;
  return s;
}

namespace {

bool entry_in(const AffineSubspace& face, const Intensity& in, Eigen::Index j) {
  if (face.exact && in.exact()) return face.exact->contains(in.x_exact[static_cast<std::size_t>(j)]);
  return face.contains(Eigen::VectorXd(in.x.col(j)));
}

OffspringEntry recoordinate(const OffspringEntry& e, const AffineSubspace& face, const Eigen::VectorXd& origin) {
  return OffspringEntry::inexact(face.basis.transpose() * (e.x - origin), e.phi);
}

Rational binomial(int n, int k) {
  Rational r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

FaceMass face_mass(const BranchLaw& law, const AffineSubspace& face) {
  const Intensity& in = law.intensity();
  FaceMass fm;
  fm.barycenter = Eigen::VectorXd::Zero(law.dim());
  for (Eigen::Index j = 0; j < in.size(); ++j) {
    if (!entry_in(face, in, j)) continue;
    fm.mass_exact += in.weight_exact[static_cast<std::size_t>(j)];
    fm.barycenter += in.weight(j) * in.x.col(j);
  }
  fm.mass = to_double(fm.mass_exact);
  if (fm.mass > 0.0) fm.barycenter /= fm.mass;
  return fm;
}

BranchLaw restrict_to_face(const BranchLaw& law, const AffineSubspace& face) {
  if (face.base.size() != law.dim()) throw std::invalid_argument("face dimension does not match law");
  const FaceMass fm = face_mass(law, face);
  if (fm.mass_exact == 0) throw std::domain_error("face carries no offspring mass (E(N^F) = 0)");
  const Eigen::VectorXd& origin = fm.barycenter;
  const int k = face.dim();
  const bool supercritical = fm.mass_exact > 1;

  if (law.is_explicit()) {
    ExplicitRepr out;
    bool any_empty = false;
    for (const auto& a : law.explicit_repr().atoms) {
      IncrementAtom na;
      na.p = a.p;
      na.p_exact = a.p_exact;
      for (const auto& e : a.offspring)
        if (face.contains(e)) na.offspring.push_back(recoordinate(e, face, origin));
      any_empty = any_empty || na.offspring.empty();
      out.atoms.push_back(std::move(na));
    }
    return BranchLaw(k, std::move(out), law.allow_extinction() || any_empty || !supercritical);
  }

  const auto& r = law.iid_repr();
  IidCompoundRepr out;
  Rational face_prob = 0;
  for (const auto& v : r.mu)
    if (face.contains(v.value)) face_prob += *v.p_exact;
  for (const auto& v : r.mu) {
    if (!face.contains(v.value)) continue;
    ValueAtom nv;
    nv.value = recoordinate(v.value, face, origin);
    nv.p_exact = *v.p_exact / face_prob;
    nv.p = to_double(*nv.p_exact);
    out.mu.push_back(std::move(nv));
  }
  // N^F given N is Binomial(N, mu(F)).
  std::map<int, Rational> counts;
  for (const auto& c : r.n_law) {
    for (int j = 0; j <= c.n; ++j) {
      Rational pr = *c.p_exact * binomial(c.n, j);
      for (int i = 0; i < j; ++i) pr *= face_prob;
      for (int i = j; i < c.n; ++i) pr *= 1 - face_prob;
      if (pr != 0) counts[j] += pr;
    }
  }
  bool any_empty = false;
  for (const auto& [n, p] : counts) {
    any_empty = any_empty || n == 0;
    out.n_law.push_back({n, to_double(p), p});
  }
  return BranchLaw(k, std::move(out), law.allow_extinction() || any_empty || !supercritical);
}

}  // namespace brw
