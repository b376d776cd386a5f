#pragma once

#include "brw/cascade.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace brw {

/// Uniform empirical measure on the window averages
/// (cum_x[j + n] - cum_x[j]) / n. Overlapping windows use every offset
/// 0 <= j < n k; the disjoint variant uses offsets j = n i, 0 <= i < k.
struct WindowMeasure {
  Eigen::MatrixXd points;  // d x count
  int n = 0;
  std::int64_t k = 0;

  Eigen::Index count() const { return points.cols(); }
  double mass() const { return 1.0; }
};

WindowMeasure window_measure(const SpinePath& path, int n, std::int64_t k, bool disjoint = false);

/// (1/n) log of the mean of exp(n <lambda, avg>) over the windows.
double window_cumulant(const SpinePath& path, int n, std::int64_t k, const Eigen::VectorXd& lambda,
                       bool disjoint = false);
double window_cumulant(const WindowMeasure& windows, const Eigen::VectorXd& lambda);

/// Number of windows with average in the open ball B(center, eps).
std::int64_t ball_hits(const WindowMeasure& windows, const Eigen::VectorXd& center, double eps);

/// k(n) = ceil(exp(r n)).
std::int64_t window_count(double rate, int n);

struct LDOptions {
  std::vector<double> eps_ladder{0.2, 0.1, 0.05, 0.025};
  double rate_margin = 0.02;
  double cumulant_tolerance = 0.05;
  double shrink_slack = 0.02;
  double theta_tolerance = 0.08;
  double seed_quorum = 0.95;
  int seeds = 20;
  double cap = 1e8;  // bound on n k(n)
  bool disjoint = false;
  int threads = 1;
};

enum class Verdict { pass, fail, inapplicable };
std::string to_string(Verdict v);

struct BallCount {
  double eps = 0.0;
  std::int64_t hits = 0;
  double log_ratio = 0.0;  // (1/n) log(hits / (n k)), -inf without hits
};

struct LDPerN {
  int n = 0;
  std::int64_t k = 0;
  double cumulant = 0.0;
  double deviation = 0.0;
  std::vector<BallCount> balls;
  std::vector<double> zero_hit_frequency;  // part 2, aligned with eps_ladder
};

struct ThetaCheck {
  double theta = 1.0;
  double predicted = 0.0;
  double observed = 0.0;
  bool within = false;
};

struct LDReport {
  int part = 1;
  Eigen::VectorXd lambda;
  double rate_r = 0.0;
  double predicted_cumulant = 0.0;   // Lambda_psi(lambda)
  Eigen::VectorXd target;            // grad Lambda_psi(lambda)
  double rate_value = 0.0;           // Lambda_psi^*(target) <= 0
  double threshold = 0.0;            // -rate_value
  std::vector<LDPerN> per_n;
  std::vector<ThetaCheck> theta;
  std::optional<double> eps_found;   // part 2
  std::uint64_t seed = 0;
  int seeds = 1;
  Verdict verdict = Verdict::inapplicable;
  std::string reason;
};

/// Window large-deviation checks on spines tilted by (q, alpha).
LDReport ld_verify_part1(const BranchLaw& law, const Eigen::VectorXd& q, const Eigen::VectorXd& alpha,
                         const Eigen::VectorXd& lambda, double r, const std::vector<int>& n_list, std::uint64_t seed,
                         const LDOptions& options = {});
LDReport ld_verify_part2(const BranchLaw& law, const Eigen::VectorXd& q, const Eigen::VectorXd& alpha,
                         const Eigen::VectorXd& lambda, double r, const std::vector<int>& n_list, std::uint64_t seed,
                         const LDOptions& options = {});
/// The window rate defaults to the critical rate -Lambda^*(grad Lambda(lambda)).
LDReport ld_verify_part3(const BranchLaw& law, const Eigen::VectorXd& q, const Eigen::VectorXd& alpha,
                         const Eigen::VectorXd& lambda, const std::vector<double>& theta_list,
                         const std::vector<int>& n_list, std::uint64_t seed, const LDOptions& options = {},
                         std::optional<double> rate_override = std::nullopt);

/// Maximum window average of coordinate `coordinate` at window length
/// m = floor(c log N), clamped to at least 1, over the first N increments.
double classic_er_statistic(const SpinePath& path, std::int64_t n_len, double c, int coordinate = 0);

struct LevelCount {
  int n = 0;
  std::int64_t count = 0;
  double log_count_rate = 0.0;  // (1/n) log count, -inf when empty
};

/// Exact counts #{u in T_n : |S_n X(u) / n - alpha| < eps}.
std::vector<LevelCount> level_set_counts(const MarkedTree& tree, const Eigen::VectorXd& alpha, double eps,
                                         const std::vector<int>& n_list);

}  // namespace brw
