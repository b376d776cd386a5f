#pragma once

#include "brw/pressure.hpp"
#include "brw/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace brw {

struct NodeRecord {
  std::int32_t parent = -1;
  std::int32_t depth = 0;
  double phi = 0.0;
  double sum_phi = 0.0;
  std::int64_t first_child = 0;
  std::int32_t child_count = 0;
};

/// Breadth-first arena: every level is a contiguous index range and the
/// children of a node are contiguous. Increments are stored flat with stride d.
class MarkedTree {
 public:
  MarkedTree(int d, std::uint64_t seed, int depth_cap, std::size_t node_cap);

  int dim() const { return d_; }
  std::uint64_t seed() const { return seed_; }
  int depth_cap() const { return depth_cap_; }
  std::size_t node_cap() const { return node_cap_; }
  std::optional<int> truncated_at_depth() const { return truncated_at_; }
  int attempts() const { return attempts_; }

  std::size_t size() const { return nodes_.size(); }
  const NodeRecord& node(std::size_t i) const { return nodes_[i]; }
  Eigen::Map<const Eigen::VectorXd> x(std::size_t i) const { return {x_.data() + i * static_cast<std::size_t>(d_), d_}; }
  Eigen::Map<const Eigen::VectorXd> sum_x(std::size_t i) const {
    return {sum_x_.data() + i * static_cast<std::size_t>(d_), d_};
  }

  /// Deepest fully realised level.
  int depth() const { return static_cast<int>(level_begin_.size()) - 2; }
  std::size_t level_begin(int n) const { return level_begin_[static_cast<std::size_t>(n)]; }
  std::size_t level_end(int n) const { return level_begin_[static_cast<std::size_t>(n) + 1]; }
  std::size_t level_size(int n) const { return level_end(n) - level_begin(n); }

 private:
  friend MarkedTree grow_tree(const BranchLaw&, int, std::size_t, std::uint64_t);

  int d_;
  std::uint64_t seed_;
  int depth_cap_;
  std::size_t node_cap_;
  std::optional<int> truncated_at_;
  int attempts_ = 1;
  std::vector<NodeRecord> nodes_;
  std::vector<double> x_, sum_x_;
  std::vector<std::size_t> level_begin_;
};

/// Draws offspring lists from a law by inverse CDF.
class OffspringSampler {
 public:
  explicit OffspringSampler(const BranchLaw& law);
  void draw(SplitMix64& rng, std::vector<const OffspringEntry*>& out) const;

 private:
  const BranchLaw* law_;
  std::vector<double> atom_cdf_, count_cdf_, value_cdf_;
};

/// Whole levels only: growth stops before a level that would exceed node_cap.
/// Laws with extinction are conditioned on reaching depth_cap by rejection.
MarkedTree grow_tree(const BranchLaw& law, int depth_cap, std::size_t node_cap, std::uint64_t seed);

/// exp(-S_{|s^t|} phi), zero when s == t.
double dphi_distance(const MarkedTree& tree, std::size_t s, std::size_t t);

/// diam([u]) = exp(-S phi) at the first branching node at or below u; empty
/// when no branching happens before the realised depth.
std::optional<double> cylinder_diameter(const MarkedTree& tree, std::size_t u);

struct ScheduleBlock {
  std::int64_t length = 1;
  Eigen::VectorXd q;
  Eigen::VectorXd alpha;
  double t = 0.0;
  double h = 0.0;
  double lambda = 0.0;
  Eigen::VectorXd beta;
};

/// Block sequence of tilting parameters; depth k >= 1 uses the block covering
/// k, and the last block extends indefinitely.
struct Schedule {
  std::vector<ScheduleBlock> blocks;
  std::vector<std::int64_t> block_end;  // cumulative lengths

  const ScheduleBlock& at(std::int64_t k) const;
  bool empty() const { return blocks.empty(); }
};

/// Resolves t, h, lambda, beta for each (length, q, alpha) block.
Schedule make_schedule(const BranchLaw& law, const std::vector<std::int64_t>& lengths,
                       const std::vector<Eigen::VectorXd>& q, const std::vector<Eigen::VectorXd>& alpha);

Schedule constant_schedule(const BranchLaw& law, const Eigen::VectorXd& q, const Eigen::VectorXd& alpha);

struct ScheduleOptions {
  std::int64_t horizon = 1 << 20;
  bool dominance = false;  // also enforce N_j >= j * sum_{k<j} N_k
};

/// Cycles through the targets with block lengths ceil(base_block * growth^j)
/// and per-block parameters (q_alpha(target), target).
Schedule build_schedule(const BranchLaw& law, const std::vector<Eigen::VectorXd>& targets, std::int64_t base_block,
                        double growth, const ScheduleOptions& options = {});

/// Products of exp(<q_k, x - alpha_k> - t_k phi) from the root to each node.
std::vector<double> cascade_weights(const MarkedTree& tree, const Schedule& schedule);

struct MartingalePath {
  std::vector<double> y;  // Y_0 .. Y_n
  std::vector<std::string> warnings;
};

MartingalePath martingale_Y(const MarkedTree& tree, const Schedule& schedule, int up_to_depth);

/// Truncated cylinder mass prod W * Y_m(u).
double cylinder_mass(const MarkedTree& tree, const std::vector<double>& weights, std::size_t u, int tail_depth);
double cylinder_mass(const MarkedTree& tree, const Schedule& schedule, std::size_t u, int tail_depth);

struct SpinePath {
  Eigen::MatrixXd x;        // d x length
  Eigen::VectorXd phi;      // length
  Eigen::MatrixXd cum_x;    // d x (length + 1)
  Eigen::VectorXd cum_phi;  // length + 1
  std::uint64_t seed = 0;

  std::int64_t length() const { return phi.size(); }
};

/// Increment k drawn from the tilted law of the block covering k.
SpinePath spine_sample(const BranchLaw& law, const Schedule& schedule, std::int64_t length, std::uint64_t seed);

struct PercolationOutcome {
  double beta = 1.0;
  int trials = 0;
  int survivals = 0;
  double survival_frequency = 0.0;
  double mass_mean = 0.0;
  double mass_sd = 0.0;
  double positive_mass_mean = 0.0;
  double mean_retained_offspring = 0.0;
  double retained_offspring_se = 0.0;
  double predicted_dimension = 0.0;  // mean h / mean lambda over the schedule horizon
  double threshold = 0.0;            // -log beta
  bool probe_dimension_exceeds = false;
  bool subcritical_thinning = false;  // beta * E(N) <= 1
  bool population_capped = false;
};

struct PercolationOptions {
  int threads = 1;
  std::size_t population_cap = std::size_t{1} << 23;
  double survival_quorum = 0.1;
};

PercolationOutcome percolate_survival(const BranchLaw& law, const Schedule& schedule, double beta, int depth_cap,
                                      int trials, std::uint64_t seed, const PercolationOptions& options = {});

struct PartitionEstimate {
  double slope = 0.0;
  double standard_error = 0.0;
  bool consistent = false;  // slope <= 3 SE
  double t = 0.0;
  std::vector<double> log_sums;  // for n in [n_min, n_max]
};

/// Least-squares slope of log sum_{u in T_n} exp(<q, S_n(X - alpha)> - t S_n phi)
/// over n in [n_min, n_max]; t defaults to the implicit pressure.
PartitionEstimate partition_pressure_estimate(const BranchLaw& law, const MarkedTree& tree, const Eigen::VectorXd& q,
                                              const Eigen::VectorXd& alpha, int n_min, int n_max,
                                              std::optional<double> t = std::nullopt);

}  // namespace brw
