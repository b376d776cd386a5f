#include "brw/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace brw {

namespace {

std::vector<double> cumulative(const std::vector<double>& p) {
  std::vector<double> cdf(p.size());
  std::partial_sum(p.begin(), p.end(), cdf.begin());
  return cdf;
}

std::size_t pick(const std::vector<double>& cdf, double u) {
  const double target = u * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

double log_weight_of(const ScheduleBlock& b, const Eigen::Ref<const Eigen::VectorXd>& x, double phi) {
  return b.q.dot(x - b.alpha) - b.t * phi;
}

constexpr int kMaxAttempts = 10000;

}  // namespace

MarkedTree::MarkedTree(int d, std::uint64_t seed, int depth_cap, std::size_t node_cap)
    : d_(d), seed_(seed), depth_cap_(depth_cap), node_cap_(node_cap) {}

OffspringSampler::OffspringSampler(const BranchLaw& law) : law_(&law) {
  std::vector<double> p;
  if (law.is_explicit()) {
    for (const auto& a : law.explicit_repr().atoms) p.push_back(a.p);
    atom_cdf_ = cumulative(p);
  } else {
    for (const auto& c : law.iid_repr().n_law) p.push_back(c.p);
    count_cdf_ = cumulative(p);
    p.clear();
    for (const auto& v : law.iid_repr().mu) p.push_back(v.p);
    value_cdf_ = cumulative(p);
  }
}

void OffspringSampler::draw(SplitMix64& rng, std::vector<const OffspringEntry*>& out) const {
  out.clear();
  if (law_->is_explicit()) {
    const auto& atom = law_->explicit_repr().atoms[pick(atom_cdf_, rng.uniform())];
    for (const auto& e : atom.offspring) out.push_back(&e);
    return;
  }
  const auto& r = law_->iid_repr();
  const int n = r.n_law[pick(count_cdf_, rng.uniform())].n;
  for (int i = 0; i < n; ++i) out.push_back(&r.mu[pick(value_cdf_, rng.uniform())].value);
}

MarkedTree grow_tree(const BranchLaw& law, int depth_cap, std::size_t node_cap, std::uint64_t seed) {
  if (depth_cap < 0) throw std::invalid_argument("depth_cap must be non-negative");
  if (node_cap < 1) throw std::invalid_argument("node_cap must be positive");
  const int d = law.dim();
  const OffspringSampler sampler(law);
  std::vector<const OffspringEntry*> kids;

  for (int attempt = 0;; ++attempt) {
    const std::uint64_t stream = attempt == 0 ? seed : derive_seed(~seed, static_cast<std::uint64_t>(attempt));
    MarkedTree tree(d, seed, depth_cap, node_cap);
    tree.attempts_ = attempt + 1;
    tree.nodes_.push_back(NodeRecord{});
    tree.x_.assign(static_cast<std::size_t>(d), 0.0);
    tree.sum_x_.assign(static_cast<std::size_t>(d), 0.0);
    tree.level_begin_ = {0, 1};

    bool extinct = false;
    for (int level = 0; level < depth_cap; ++level) {
      const std::size_t begin = tree.level_begin_[static_cast<std::size_t>(level)];
      const std::size_t end = tree.level_begin_[static_cast<std::size_t>(level) + 1];
      std::vector<NodeRecord> next;
      std::vector<double> next_x, next_sum;
      std::vector<std::pair<std::int64_t, std::int32_t>> spans(end - begin);
      bool over = false;
      for (std::size_t i = begin; i < end; ++i) {
        SplitMix64 rng(derive_seed(stream, i));
        sampler.draw(rng, kids);
        spans[i - begin] = {static_cast<std::int64_t>(end + next.size()), static_cast<std::int32_t>(kids.size())};
        if (end + next.size() + kids.size() > node_cap) {
          over = true;
          break;
        }
        const NodeRecord& parent = tree.nodes_[i];
        for (const OffspringEntry* e : kids) {
          NodeRecord rec;
          rec.parent = static_cast<std::int32_t>(i);
          rec.depth = level + 1;
          rec.phi = e->phi;
          rec.sum_phi = parent.sum_phi + e->phi;
          next.push_back(rec);
          for (int c = 0; c < d; ++c) {
            next_x.push_back(e->x[c]);
            next_sum.push_back(tree.sum_x_[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)] + e->x[c]);
          }
        }
      }
      if (over) {
        tree.truncated_at_ = level + 1;
        for (std::size_t i = begin; i < end; ++i) tree.nodes_[i].first_child = static_cast<std::int64_t>(end);
        break;
      }
      for (std::size_t i = begin; i < end; ++i) {
        tree.nodes_[i].first_child = spans[i - begin].first;
        tree.nodes_[i].child_count = spans[i - begin].second;
      }
      if (next.empty()) {
        extinct = true;
        break;
      }
      tree.nodes_.insert(tree.nodes_.end(), next.begin(), next.end());
      tree.x_.insert(tree.x_.end(), next_x.begin(), next_x.end());
      tree.sum_x_.insert(tree.sum_x_.end(), next_sum.begin(), next_sum.end());
      tree.level_begin_.push_back(tree.nodes_.size());
    }
    const std::size_t last_begin = tree.level_begin_[tree.level_begin_.size() - 2];
    for (std::size_t i = last_begin; i < tree.nodes_.size(); ++i)
      if (tree.nodes_[i].child_count == 0) tree.nodes_[i].first_child = static_cast<std::int64_t>(tree.nodes_.size());

    if (!extinct) return tree;
    if (!law.allow_extinction()) return tree;
    if (attempt + 1 >= kMaxAttempts) throw std::runtime_error("tree went extinct in every attempt");
  }
}

double dphi_distance(const MarkedTree& tree, std::size_t s, std::size_t t) {
  if (s >= tree.size() || t >= tree.size()) throw std::out_of_range("node index out of range");
  if (tree.node(s).depth != tree.node(t).depth) throw std::invalid_argument("nodes must be at equal depth");
  if (s == t) return 0.0;
  while (s != t) {
    s = static_cast<std::size_t>(tree.node(s).parent);
    t = static_cast<std::size_t>(tree.node(t).parent);
  }
  return std::exp(-tree.node(s).sum_phi);
}

std::optional<double> cylinder_diameter(const MarkedTree& tree, std::size_t u) {
  if (u >= tree.size()) throw std::out_of_range("node index out of range");
  while (tree.node(u).child_count == 1) u = static_cast<std::size_t>(tree.node(u).first_child);
  if (tree.node(u).child_count == 0) return std::nullopt;
  return std::exp(-tree.node(u).sum_phi);
}

const ScheduleBlock& Schedule::at(std::int64_t k) const {
  if (blocks.empty()) throw std::invalid_argument("empty schedule");
  const auto it = std::lower_bound(block_end.begin(), block_end.end(), std::max<std::int64_t>(k, 1));
  if (it == block_end.end()) return blocks.back();
  return blocks[static_cast<std::size_t>(it - block_end.begin())];
}

Schedule make_schedule(const BranchLaw& law, const std::vector<std::int64_t>& lengths,
                       const std::vector<Eigen::VectorXd>& q, const std::vector<Eigen::VectorXd>& alpha) {
  if (lengths.size() != q.size() || q.size() != alpha.size())
    throw std::invalid_argument("schedule lengths, q and alpha differ in size");
  Schedule s;
  std::int64_t end = 0;
  for (std::size_t j = 0; j < lengths.size(); ++j) {
    if (lengths[j] < 1) throw std::invalid_argument("schedule block lengths must be positive");
    const ImplicitPressurePoint p = implicit_pressure(law, q[j], alpha[j]);
    s.blocks.push_back(ScheduleBlock{lengths[j], q[j], alpha[j], p.t, p.h, p.lambda, p.beta});
    end += lengths[j];
    s.block_end.push_back(end);
  }
  return s;
}

Schedule constant_schedule(const BranchLaw& law, const Eigen::VectorXd& q, const Eigen::VectorXd& alpha) {
  return make_schedule(law, {1}, {q}, {alpha});
}

Schedule build_schedule(const BranchLaw& law, const std::vector<Eigen::VectorXd>& targets, std::int64_t base_block,
                        double growth, const ScheduleOptions& options) {
  if (targets.empty()) throw std::invalid_argument("no schedule targets");
  if (base_block < 1) throw std::invalid_argument("base_block must be at least 1");
  if (!(growth > 1.0)) throw std::invalid_argument("growth must exceed 1");
  std::vector<ImplicitPressurePoint> points;
  for (const auto& a : targets) {
    if (a.size() != law.dim()) throw std::invalid_argument("target dimension mismatch");
    const Membership m = membership_IX(law, a);
    if (!in_tilde_IX(m.cls)) throw std::domain_error("schedule target outside the interior/critical set: " + to_string(m.cls));
    points.push_back(q_alpha(law, a));
  }
  if (targets.size() > 1) {
    const double limit = 0.5 * ix_diameter(law);
    for (std::size_t j = 0; j + 1 < targets.size(); ++j)
      if ((targets[j + 1] - targets[j]).norm() > limit + 1e-12)
        throw std::invalid_argument("consecutive targets farther apart than half the diameter of I_X");
  }

  Schedule s;
  if (targets.size() == 1) {
    const auto& p = points.front();
    s.blocks.push_back(ScheduleBlock{options.horizon, p.q, p.alpha, p.t, p.h, p.lambda, p.beta});
    s.block_end.push_back(options.horizon);
    return s;
  }
  std::int64_t total = 0;
  for (std::size_t j = 0; total < options.horizon; ++j) {
    const double raw = static_cast<double>(base_block) * std::pow(growth, static_cast<double>(j));
    if (raw > 1e15) throw std::overflow_error("schedule block length overflow");
    std::int64_t len = static_cast<std::int64_t>(std::ceil(raw * (1.0 - 1e-12)));
    if (options.dominance) len = std::max<std::int64_t>(len, static_cast<std::int64_t>(j) * total);
    const auto& p = points[j % points.size()];
    s.blocks.push_back(ScheduleBlock{len, p.q, p.alpha, p.t, p.h, p.lambda, p.beta});
    total += len;
    s.block_end.push_back(total);
  }
  return s;
}

std::vector<double> cascade_weights(const MarkedTree& tree, const Schedule& schedule) {
  if (schedule.empty()) throw std::invalid_argument("empty schedule");
  std::vector<double> w(tree.size(), 1.0);
  for (int n = 1; n <= tree.depth(); ++n) {
    const ScheduleBlock& b = schedule.at(n);
    for (std::size_t i = tree.level_begin(n); i < tree.level_end(n); ++i) {
      const auto& rec = tree.node(i);
      w[i] = w[static_cast<std::size_t>(rec.parent)] * std::exp(log_weight_of(b, tree.x(i), rec.phi));
    }
  }
  return w;
}

MartingalePath martingale_Y(const MarkedTree& tree, const Schedule& schedule, int up_to_depth) {
  if (schedule.empty()) throw std::invalid_argument("empty schedule");
  if (up_to_depth < 0 || up_to_depth > tree.depth())
    throw std::invalid_argument("requested depth exceeds the realised tree");
  MartingalePath out;
  const std::vector<double> w = cascade_weights(tree, schedule);
  out.y.push_back(1.0);
  const ScheduleBlock* warned = nullptr;
  for (int n = 1; n <= up_to_depth; ++n) {
    const ScheduleBlock& b = schedule.at(n);
    if (b.h <= 0.0 && warned != &b) {
      out.warnings.push_back("block at depth " + std::to_string(n) + " has non-positive entropy");
      warned = &b;
    }
    double y = 0.0;
    for (std::size_t i = tree.level_begin(n); i < tree.level_end(n); ++i) y += w[i];
    out.y.push_back(y);
  }
  return out;
}

double cylinder_mass(const MarkedTree& tree, const std::vector<double>& weights, std::size_t u, int tail_depth) {
  if (u >= tree.size()) throw std::out_of_range("node index out of range");
  if (tail_depth < 0 || tree.node(u).depth + tail_depth > tree.depth())
    throw std::invalid_argument("insufficient tail depth below the cylinder");
  std::size_t lo = u, hi = u + 1;
  for (int k = 0; k < tail_depth && lo < hi; ++k) {
    const auto& last = tree.node(hi - 1);
    const std::size_t new_lo = static_cast<std::size_t>(tree.node(lo).first_child);
    hi = static_cast<std::size_t>(last.first_child) + static_cast<std::size_t>(last.child_count);
    lo = new_lo;
  }
  double mass = 0.0;
  for (std::size_t i = lo; i < hi; ++i) mass += weights[i];
  return mass;
}

double cylinder_mass(const MarkedTree& tree, const Schedule& schedule, std::size_t u, int tail_depth) {
  return cylinder_mass(tree, cascade_weights(tree, schedule), u, tail_depth);
}

SpinePath spine_sample(const BranchLaw& law, const Schedule& schedule, std::int64_t length, std::uint64_t seed) {
  if (length < 0) throw std::invalid_argument("negative spine length");
  if (length > 0 && schedule.empty()) throw std::invalid_argument("empty schedule");
  const int d = law.dim();
  SpinePath path;
  path.seed = seed;
  path.x.resize(d, length);
  path.phi.resize(length);
  path.cum_x = Eigen::MatrixXd::Zero(d, length + 1);
  path.cum_phi = Eigen::VectorXd::Zero(length + 1);

  struct Table {
    std::vector<TiltedEntry> entries;
    std::vector<double> cdf;
  };
  std::vector<std::optional<Table>> tables(schedule.blocks.size());
  SplitMix64 rng(seed);
  for (std::int64_t k = 1; k <= length; ++k) {
    const ScheduleBlock& b = schedule.at(k);
    const auto j = static_cast<std::size_t>(&b - schedule.blocks.data());
    if (!tables[j]) {
      FiniteTiltedLaw tl = tilt(law, b.q, b.alpha, b.t);
      if (std::abs(tl.total - 1.0) > 1e-10) throw std::runtime_error("schedule block tilt does not sum to one");
      std::vector<double> w;
      for (const auto& e : tl.entries) w.push_back(e.weight);
      tables[j] = Table{std::move(tl.entries), cumulative(w)};
    }
    const Table& tab = *tables[j];
    const OffspringEntry& e = tab.entries[pick(tab.cdf, rng.uniform())].entry;
    path.x.col(k - 1) = e.x;
    path.phi[k - 1] = e.phi;
    path.cum_x.col(k) = path.cum_x.col(k - 1) + e.x;
    path.cum_phi[k] = path.cum_phi[k - 1] + e.phi;
  }
  return path;
}

namespace {

struct TrialResult {
  bool survived = false;
  bool capped = false;
  double mass = 0.0;
  double parents = 0.0;
  double retained = 0.0;
  double retained_sq = 0.0;
};

TrialResult percolate_one(const OffspringSampler& sampler, const Schedule& schedule, double beta,
                          int depth_cap, std::uint64_t seed, std::size_t cap) {
  TrialResult r;
  SplitMix64 rng(seed);
  std::vector<double> weights{1.0}, next;
  std::vector<const OffspringEntry*> kids;
  for (int n = 1; n <= depth_cap; ++n) {
    const ScheduleBlock& b = schedule.at(n);
    next.clear();
    for (double w : weights) {
      sampler.draw(rng, kids);
      double kept = 0.0;
      for (const OffspringEntry* e : kids) {
        if (rng.uniform() >= beta) continue;
        kept += 1.0;
        next.push_back(w * std::exp(log_weight_of(b, e->x, e->phi)) / beta);
      }
      r.parents += 1.0;
      r.retained += kept;
      r.retained_sq += kept * kept;
    }
    weights.swap(next);
    if (weights.empty()) return r;
    if (weights.size() > cap && n < depth_cap) {
      r.capped = true;
      break;
    }
  }
  r.survived = true;
  for (double w : weights) r.mass += w;
  return r;
}

}  // namespace

PercolationOutcome percolate_survival(const BranchLaw& law, const Schedule& schedule, double beta, int depth_cap,
                                      int trials, std::uint64_t seed, const PercolationOptions& options) {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in (0, 1]");
  if (trials < 1) throw std::invalid_argument("trials must be positive");
  if (depth_cap < 1) throw std::invalid_argument("depth_cap must be positive");
  if (schedule.empty()) throw std::invalid_argument("empty schedule");
  const OffspringSampler sampler(law);
  std::vector<TrialResult> results(static_cast<std::size_t>(trials));
  parallel_for(results.size(), options.threads, [&](std::size_t i) {
    results[i] = percolate_one(sampler, schedule, beta, depth_cap, derive_seed(seed, i), options.population_cap);
  });

  PercolationOutcome out;
  out.beta = beta;
  out.trials = trials;
  double parents = 0.0, kept = 0.0, kept_sq = 0.0, m1 = 0.0, m2 = 0.0, positive = 0.0;
  for (const auto& r : results) {
    out.survivals += r.survived ? 1 : 0;
    out.population_capped = out.population_capped || r.capped;
    parents += r.parents;
    kept += r.retained;
    kept_sq += r.retained_sq;
    m1 += r.mass;
    m2 += r.mass * r.mass;
    if (r.mass > 0.0) positive += r.mass;
  }
  out.survival_frequency = static_cast<double>(out.survivals) / trials;
  out.mass_mean = m1 / trials;
  out.mass_sd = trials > 1 ? std::sqrt(std::max(0.0, (m2 - m1 * m1 / trials) / (trials - 1))) : 0.0;
  out.positive_mass_mean = out.survivals > 0 ? positive / out.survivals : 0.0;
  out.mean_retained_offspring = kept / parents;
  const double var = parents > 1 ? std::max(0.0, (kept_sq - kept * kept / parents) / (parents - 1)) : 0.0;
  out.retained_offspring_se = std::sqrt(var / parents);

  double h = 0.0, lam = 0.0;
  for (int k = 1; k <= depth_cap; ++k) {
    h += schedule.at(k).h;
    lam += schedule.at(k).lambda;
  }
  out.predicted_dimension = h / lam;
  out.threshold = -std::log(beta);
  out.probe_dimension_exceeds = out.survival_frequency >= options.survival_quorum;
  out.subcritical_thinning = beta * law.mean_offspring() <= 1.0;
  return out;
}

PartitionEstimate partition_pressure_estimate(const BranchLaw& law, const MarkedTree& tree, const Eigen::VectorXd& q,
                                              const Eigen::VectorXd& alpha, int n_min, int n_max,
                                              std::optional<double> t) {
  if (n_min < 1 || n_max <= n_min || n_max > tree.depth())
    throw std::invalid_argument("degenerate depth range for the partition estimate");
  PartitionEstimate est;
  est.t = t ? *t : implicit_pressure(law, q, alpha).t;
  const int count = n_max - n_min + 1;
  Eigen::VectorXd ns(count), logs(count);
  for (int n = n_min; n <= n_max; ++n) {
    const std::size_t b = tree.level_begin(n), e = tree.level_end(n);
    Eigen::VectorXd terms(static_cast<Eigen::Index>(e - b));
    for (std::size_t i = b; i < e; ++i)
      terms[static_cast<Eigen::Index>(i - b)] =
          q.dot(tree.sum_x(i) - n * alpha) - est.t * tree.node(i).sum_phi;
    ns[n - n_min] = n;
    logs[n - n_min] = log_sum_exp(terms);
    est.log_sums.push_back(logs[n - n_min]);
  }
  const double nbar = ns.mean(), lbar = logs.mean();
  const double sxx = (ns.array() - nbar).square().sum();
  est.slope = ((ns.array() - nbar) * (logs.array() - lbar)).sum() / sxx;
  if (count > 2) {
    const Eigen::ArrayXd resid = logs.array() - lbar - est.slope * (ns.array() - nbar);
    est.standard_error = std::sqrt(resid.square().sum() / (count - 2) / sxx);
  }
  est.consistent = est.slope <= 3.0 * est.standard_error;
  return est;
}

}  // namespace brw
