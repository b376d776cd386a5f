#include "brw/erlln.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace brw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::int64_t required_length(int n, std::int64_t k) { return static_cast<std::int64_t>(n) * (k + 1); }

void check_window_args(const SpinePath& path, int n, std::int64_t k) {
  if (n < 1 || k < 1) throw std::invalid_argument("window length and count must be positive");
  if (path.length() < required_length(n, k))
    throw std::invalid_argument("path too short: need " + std::to_string(required_length(n, k)) + " increments, have " +
                                std::to_string(path.length()));
}

struct Setup {
  ImplicitPressurePoint point;
  double predicted = 0.0;
  Eigen::VectorXd target;
  double rate_value = 0.0;
};

Setup prepare(const BranchLaw& law, const Eigen::VectorXd& q, const Eigen::VectorXd& alpha,
              const Eigen::VectorXd& lambda) {
  Setup s;
  s.point = implicit_pressure(law, q, alpha);
  const ConvexEval lam = lambda_psi(law, s.point, lambda);
  s.predicted = lam.value;
  s.target = lam.gradient;
  s.rate_value = lambda_psi_star(law, q, alpha, s.target).value;
  return s;
}

LDReport report_header(int part, const Setup& s, const Eigen::VectorXd& lambda, double r, std::uint64_t seed) {
  LDReport rep;
  rep.part = part;
  rep.lambda = lambda;
  rep.rate_r = r;
  rep.predicted_cumulant = s.predicted;
  rep.target = s.target;
  rep.rate_value = s.rate_value;
  rep.threshold = -s.rate_value;
  rep.seed = seed;
  return rep;
}

std::int64_t spine_length_for(const std::vector<int>& n_list, double r, const LDOptions& options) {
  if (n_list.empty()) throw std::invalid_argument("empty n list");
  std::int64_t need = 0;
  for (int n : n_list) {
    if (n < 1) throw std::invalid_argument("window lengths must be positive");
    const double nk = static_cast<double>(n) * std::ceil(std::exp(r * n));
    if (nk > options.cap)
      throw std::length_error("n k(n) exceeds the cap at n = " + std::to_string(n) + "; required path length " +
                              std::to_string(static_cast<double>(n) + nk));
    need = std::max(need, required_length(n, window_count(r, n)));
  }
  return need;
}

LDPerN evaluate(const SpinePath& path, int n, double r, const Eigen::VectorXd& lambda, const Setup& s,
                const LDOptions& options) {
  LDPerN row;
  row.n = n;
  row.k = window_count(r, n);
  const WindowMeasure w = window_measure(path, n, row.k, options.disjoint);
  row.cumulant = window_cumulant(w, lambda);
  row.deviation = std::abs(row.cumulant - s.predicted);
  for (double eps : options.eps_ladder) {
    BallCount b;
    b.eps = eps;
    b.hits = ball_hits(w, s.target, eps);
    b.log_ratio = b.hits > 0 ? std::log(static_cast<double>(b.hits) / static_cast<double>(w.count())) / n : -kInf;
    row.balls.push_back(b);
  }
  return row;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inapplicable: return "inapplicable";
  }
  return "?";
}

std::int64_t window_count(double rate, int n) {
  const double k = std::ceil(std::exp(rate * n) * (1.0 - 1e-15));
  if (!(k < 9e18)) throw std::overflow_error("window count overflow");
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(k));
}

WindowMeasure window_measure(const SpinePath& path, int n, std::int64_t k, bool disjoint) {
  check_window_args(path, n, k);
  WindowMeasure w;
  w.n = n;
  w.k = k;
  const std::int64_t count = disjoint ? k : static_cast<std::int64_t>(n) * k;
  const std::int64_t step = disjoint ? n : 1;
  w.points.resize(path.cum_x.rows(), count);
  for (std::int64_t i = 0; i < count; ++i) {
    const std::int64_t j = i * step;
    w.points.col(i) = (path.cum_x.col(j + n) - path.cum_x.col(j)) / n;
  }
  return w;
}

double window_cumulant(const WindowMeasure& windows, const Eigen::VectorXd& lambda) {
  if (lambda.size() != windows.points.rows()) throw std::invalid_argument("lambda dimension mismatch");
  const Eigen::VectorXd v = windows.points.transpose() * lambda;
  const double top = v.maxCoeff();
  const double mean = (windows.n * (v.array() - top)).exp().mean();
  return top + std::log(mean) / windows.n;
}

double window_cumulant(const SpinePath& path, int n, std::int64_t k, const Eigen::VectorXd& lambda, bool disjoint) {
  return window_cumulant(window_measure(path, n, k, disjoint), lambda);
}

std::int64_t ball_hits(const WindowMeasure& windows, const Eigen::VectorXd& center, double eps) {
  std::int64_t hits = 0;
  for (Eigen::Index i = 0; i < windows.count(); ++i)
    if ((windows.points.col(i) - center).norm() < eps) ++hits;
  return hits;
}

LDReport ld_verify_part1(const BranchLaw& law, const Eigen::VectorXd& q, const Eigen::VectorXd& alpha,
                         const Eigen::VectorXd& lambda, double r, const std::vector<int>& n_list, std::uint64_t seed,
                         const LDOptions& options) {
  const Setup s = prepare(law, q, alpha, lambda);
  LDReport rep = report_header(1, s, lambda, r, seed);
  if (!(r > rep.threshold + options.rate_margin)) {
    rep.reason = "window rate does not exceed the critical rate plus margin";
    return rep;
  }
  const std::int64_t need = spine_length_for(n_list, r, options);
  const SpinePath path = spine_sample(law, constant_schedule(law, q, alpha), need, seed);
  for (int n : n_list) rep.per_n.push_back(evaluate(path, n, r, lambda, s, options));
  const double first = rep.per_n.front().deviation, last = rep.per_n.back().deviation;
  const bool ok = last <= first + options.shrink_slack && last <= options.cumulant_tolerance;
  rep.verdict = ok ? Verdict::pass : Verdict::fail;
  if (!ok) rep.reason = "cumulant deviation did not settle within tolerance";
  return rep;
}

LDReport ld_verify_part2(const BranchLaw& law, const Eigen::VectorXd& q, const Eigen::VectorXd& alpha,
                         const Eigen::VectorXd& lambda, double r, const std::vector<int>& n_list, std::uint64_t seed,
                         const LDOptions& options) {
  const Setup s = prepare(law, q, alpha, lambda);
  LDReport rep = report_header(2, s, lambda, r, seed);
  rep.seeds = options.seeds;
  if (!(r >= 0.0 && r < rep.threshold - options.rate_margin)) {
    rep.reason = "window rate is not below the critical rate minus margin";
    return rep;
  }
  if (options.seeds < 1) throw std::invalid_argument("seed count must be positive");
  const std::int64_t need = spine_length_for(n_list, r, options);
  const Schedule schedule = constant_schedule(law, q, alpha);

  std::vector<std::vector<LDPerN>> runs(static_cast<std::size_t>(options.seeds));
  parallel_for(runs.size(), options.threads, [&](std::size_t i) {
    const SpinePath path = spine_sample(law, schedule, need, derive_seed(seed, i));
    for (int n : n_list) runs[i].push_back(evaluate(path, n, r, lambda, s, options));
  });

  const std::size_t levels = options.eps_ladder.size();
  for (std::size_t j = 0; j < n_list.size(); ++j) {
    LDPerN row = runs.front()[j];
    row.cumulant = 0.0;
    row.zero_hit_frequency.assign(levels, 0.0);
    for (auto& b : row.balls) b.hits = 0;
    for (const auto& run : runs) {
      row.cumulant += run[j].cumulant / options.seeds;
      for (std::size_t e = 0; e < levels; ++e) {
        row.balls[e].hits += run[j].balls[e].hits;
        if (run[j].balls[e].hits == 0) row.zero_hit_frequency[e] += 1.0 / options.seeds;
      }
    }
    row.deviation = std::abs(row.cumulant - s.predicted);
    for (auto& b : row.balls) {
      const double total = static_cast<double>(row.k) * row.n * options.seeds;
      b.log_ratio = b.hits > 0 ? std::log(static_cast<double>(b.hits) / total) / row.n : -kInf;
    }
    rep.per_n.push_back(std::move(row));
  }

  std::vector<std::size_t> order(n_list.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return n_list[a] > n_list[b]; });
  const std::size_t largest = std::min<std::size_t>(2, order.size());
  for (std::size_t e = 0; e < levels && !rep.eps_found; ++e) {
    bool all = true;
    for (std::size_t m = 0; m < largest; ++m)
      all = all && rep.per_n[order[m]].zero_hit_frequency[e] >= options.seed_quorum - 1e-12;
    if (all) rep.eps_found = options.eps_ladder[e];
  }
  rep.verdict = rep.eps_found ? Verdict::pass : Verdict::fail;
  if (!rep.eps_found) rep.reason = "no ball radius on the ladder is empty in enough seeds";
  return rep;
}

LDReport ld_verify_part3(const BranchLaw& law, const Eigen::VectorXd& q, const Eigen::VectorXd& alpha,
                         const Eigen::VectorXd& lambda, const std::vector<double>& theta_list,
                         const std::vector<int>& n_list, std::uint64_t seed, const LDOptions& options,
                         std::optional<double> rate_override) {
  if (theta_list.empty()) throw std::invalid_argument("empty theta list");
  for (double th : theta_list)
    if (!(th >= 1.0)) throw std::invalid_argument("theta must be at least 1");
  const Setup s = prepare(law, q, alpha, lambda);
  const double r = rate_override ? *rate_override : std::max(0.0, -s.rate_value);
  LDReport rep = report_header(3, s, lambda, r, seed);
  const std::int64_t need = spine_length_for(n_list, r, options);
  const SpinePath path = spine_sample(law, constant_schedule(law, q, alpha), need, seed);
  for (int n : n_list) rep.per_n.push_back(evaluate(path, n, r, lambda, s, options));

  const int n_top = *std::max_element(n_list.begin(), n_list.end());
  const WindowMeasure w = window_measure(path, n_top, window_count(r, n_top), options.disjoint);
  bool ok = true;
  for (double th : theta_list) {
    ThetaCheck c;
    c.theta = th;
    c.predicted = s.predicted + (th - 1.0) * lambda.dot(s.target);
    c.observed = window_cumulant(w, th * lambda);
    c.within = std::abs(c.observed - c.predicted) <= options.theta_tolerance;
    ok = ok && c.within;
    rep.theta.push_back(c);
  }
  rep.verdict = ok ? Verdict::pass : Verdict::fail;
  if (!ok) rep.reason = "scaled cumulant misses the affine prediction";
  return rep;
}

double classic_er_statistic(const SpinePath& path, std::int64_t n_len, double c, int coordinate) {
  if (n_len < 2) throw std::invalid_argument("N must be at least 2");
  if (!(c > 0.0)) throw std::invalid_argument("c must be positive");
  if (path.length() < n_len) throw std::invalid_argument("path shorter than N");
  if (coordinate < 0 || coordinate >= path.cum_x.rows()) throw std::invalid_argument("coordinate out of range");
  const auto m = std::max<std::int64_t>(
      1, std::min<std::int64_t>(n_len, static_cast<std::int64_t>(std::floor(c * std::log(static_cast<double>(n_len)) + 1e-9))));
  const auto row = path.cum_x.row(coordinate);
  double best = -kInf;
  for (std::int64_t j = 0; j + m <= n_len; ++j) best = std::max(best, row[j + m] - row[j]);
  return best / static_cast<double>(m);
}

std::vector<LevelCount> level_set_counts(const MarkedTree& tree, const Eigen::VectorXd& alpha, double eps,
                                         const std::vector<int>& n_list) {
  if (alpha.size() != tree.dim()) throw std::invalid_argument("alpha dimension mismatch");
  std::vector<LevelCount> out;
  for (int n : n_list) {
    if (n < 1 || n > tree.depth())
      throw std::invalid_argument("tree not realised to depth " + std::to_string(n));
    LevelCount c;
    c.n = n;
    for (std::size_t i = tree.level_begin(n); i < tree.level_end(n); ++i)
      if ((tree.sum_x(i) / n - alpha).norm() < eps) ++c.count;
    c.log_count_rate = c.count > 0 ? std::log(static_cast<double>(c.count)) / n : -kInf;
    out.push_back(c);
  }
  return out;
}

}  // namespace brw
