#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "brw/cascade.hpp"
#include "fixtures.hpp"

#include <cmath>

using namespace brw;
using fixtures::vec;

namespace {

const double kLn2 = std::log(2.0);

Schedule uniform_a() { return constant_schedule(fixtures::law_a(), vec({0.0}), vec({0.5})); }

struct MeanSe {
  double mean = 0.0, se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  double s1 = 0.0, s2 = 0.0;
  for (double x : xs) {
    s1 += x;
    s2 += x * x;
  }
  const double n = static_cast<double>(xs.size());
  const double m = s1 / n;
  return {m, std::sqrt((s2 - n * m * m) / (n - 1) / n)};
}

std::size_t deepest_ancestor(const MarkedTree& t, std::size_t u, int depth) {
  while (t.node(u).depth > depth) u = static_cast<std::size_t>(t.node(u).parent);
  return u;
}

}  // namespace

TEST_CASE("law A tree: full binary levels and integer sums") {
  const MarkedTree t = grow_tree(fixtures::law_a(), 20, std::size_t{1} << 22, 42);
  CHECK(t.depth() == 20);
  CHECK(t.level_size(20) == (std::size_t{1} << 20));
  CHECK_FALSE(t.truncated_at_depth());
  bool ok = true;
  for (std::size_t i = t.level_begin(20); i < t.level_end(20); ++i) {
    const double s = t.sum_x(i)[0];
    ok = ok && s >= 0 && s <= 20 && s == std::floor(s) && t.node(i).sum_phi == 20.0;
  }
  CHECK(ok);
}

TEST_CASE("node cap truncates whole levels") {
  const MarkedTree t = grow_tree(fixtures::law_a(), 20, 100, 1);
  REQUIRE(t.truncated_at_depth());
  CHECK(*t.truncated_at_depth() == 6);
  CHECK(t.size() == 63);
  CHECK(t.depth() == 5);
  CHECK(t.size() <= t.node_cap());
}

TEST_CASE("prefix sums are consistent on every node") {
  for (const auto& law : {fixtures::plane_law(), fixtures::line_law(), fixtures::law_one_two()}) {
    const MarkedTree t = grow_tree(law, 9, 200000, 7);
    bool ok = true;
    for (std::size_t i = 1; i < t.size(); ++i) {
      const auto p = static_cast<std::size_t>(t.node(i).parent);
      ok = ok && (t.sum_x(i) - t.sum_x(p) - t.x(i)).cwiseAbs().maxCoeff() == 0.0;
      ok = ok && t.node(i).sum_phi == t.node(p).sum_phi + t.node(i).phi && t.node(i).sum_phi > t.node(p).sum_phi;
      ok = ok && t.node(i).depth == t.node(p).depth + 1;
    }
    CHECK(ok);
  }
}

TEST_CASE("trees are reproducible from the seed") {
  const auto law = fixtures::plane_law();
  const MarkedTree a = grow_tree(law, 8, 100000, 99), b = grow_tree(law, 8, 100000, 99), c = grow_tree(law, 8, 100000, 100);
  REQUIRE(a.size() == b.size());
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i) same = same && a.sum_x(i) == b.sum_x(i);
  CHECK(same);
  CHECK((a.size() != c.size() || a.sum_x(a.size() - 1) != c.sum_x(c.size() - 1)));
}

TEST_CASE("mean generation size matches E(N)^n") {
  const auto law = fixtures::law_one_two();
  std::vector<double> leaves(10000);
  parallel_for(leaves.size(), 4, [&](std::size_t i) {
    leaves[i] = static_cast<double>(grow_tree(law, 10, 1 << 20, derive_seed(2024, i)).level_size(10));
  });
  const auto s = mean_se(leaves);
  CHECK(std::abs(s.mean - std::pow(1.5, 10)) <= 3 * s.se);
}

TEST_CASE("extinction-prone laws are conditioned on survival") {
  ExplicitRepr r;
  r.atoms.push_back({0.5, {}, {}});
  r.atoms.push_back({0.5, {fixtures::entry({0.0}), fixtures::entry({1.0}), fixtures::entry({2.0})}, {}});
  const BranchLaw law(1, r, true);
  for (std::uint64_t s = 0; s < 20; ++s) CHECK(grow_tree(law, 6, 100000, s).depth() == 6);
}

TEST_CASE("d_phi examples") {
  const MarkedTree t = grow_tree(fixtures::law_a(), 6, 1000, 3);
  const std::size_t first = t.level_begin(6), last = t.level_end(6) - 1;
  CHECK(dphi_distance(t, first, first) == 0.0);
  CHECK(dphi_distance(t, first, last) == 1.0);
  CHECK(dphi_distance(t, first, first + 1) == std::exp(-5.0));
  CHECK(dphi_distance(t, first, first + 4) == std::exp(-3.0));
  CHECK_THROWS(dphi_distance(t, first, 0));
}

TEST_CASE("ultrametric inequality on random leaf triples") {
  const MarkedTree t = grow_tree(fixtures::line_law(), 10, 1 << 20, 11);
  SplitMix64 rng(8);
  const std::size_t b = t.level_begin(10), n = t.level_size(10);
  auto pick = [&] { return b + static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)); };
  for (int k = 0; k < 1000; ++k) {
    const std::size_t s = pick(), u = pick(), v = pick();
    CHECK(dphi_distance(t, s, v) <= std::max(dphi_distance(t, s, u), dphi_distance(t, u, v)));
  }
}

TEST_CASE("cylinder diameters follow the next branching") {
  const MarkedTree t = grow_tree(fixtures::law_one_two(), 14, 1 << 20, 5);
  SplitMix64 rng(9);
  int checked = 0;
  for (int k = 0; k < 100; ++k) {
    std::size_t leaf = t.level_begin(14) + static_cast<std::size_t>(rng.uniform() * static_cast<double>(t.level_size(14)));
    const int n = 1 + static_cast<int>(rng.uniform() * 8);
    const std::size_t u = deepest_ancestor(t, leaf, n);
    const auto diam = cylinder_diameter(t, u);
    if (!diam) continue;
    std::size_t v = u;
    while (t.node(v).child_count == 1) v = static_cast<std::size_t>(t.node(v).first_child);
    CHECK(std::log(*diam) / -t.node(v).sum_phi == 1.0);
    // the two extreme leaves below u realise the diameter
    std::size_t lo = u, hi = u;
    while (t.node(lo).depth < 14) {
      lo = static_cast<std::size_t>(t.node(lo).first_child);
      hi = static_cast<std::size_t>(t.node(hi).first_child + t.node(hi).child_count - 1);
    }
    CHECK(dphi_distance(t, lo, hi) == *diam);
    ++checked;
  }
  CHECK(checked > 50);
}

TEST_CASE("martingale examples") {
  const MarkedTree t = grow_tree(fixtures::law_a(), 16, 1 << 20, 1);
  const auto path = martingale_Y(t, uniform_a(), 16);
  REQUIRE(path.y.size() == 17);
  for (double y : path.y) CHECK(y == 1.0);
  CHECK(path.warnings.empty());
  CHECK_THROWS(martingale_Y(t, Schedule{}, 3));
  CHECK_THROWS(martingale_Y(t, uniform_a(), 17));
}

TEST_CASE("martingale mean is one") {
  for (const auto& law : {fixtures::law_one_two(), fixtures::line_law()}) {
    const auto in = law.intensity();
    const Eigen::VectorXd mean = in.x * in.weight / in.weight.sum();
    const Schedule sch = constant_schedule(law, vec({0.0}), mean);
    std::vector<std::vector<double>> ys(10000);
    parallel_for(ys.size(), 4, [&](std::size_t i) {
      ys[i] = martingale_Y(grow_tree(law, 10, 1 << 20, derive_seed(77, i)), sch, 10).y;
    });
    for (int n = 1; n <= 10; ++n) {
      std::vector<double> col;
      for (const auto& y : ys) col.push_back(y[static_cast<std::size_t>(n)]);
      const auto s = mean_se(col);
      CHECK(std::abs(s.mean - 1.0) <= 3 * s.se);
    }
  }
}

TEST_CASE("non-positive entropy triggers a warning") {
  const auto a = fixtures::law_a();
  const MarkedTree t = grow_tree(a, 4, 100, 1);
  const auto p = q_alpha(a, vec({0.3}));
  const Schedule good = constant_schedule(a, p.q, p.alpha);
  CHECK(good.blocks[0].h > 0.0);
  CHECK(martingale_Y(t, good, 4).warnings.empty());
  Schedule bad = good;
  bad.blocks[0].h = 0.0;
  CHECK(martingale_Y(t, bad, 4).warnings.size() == 1);
}

TEST_CASE("cylinder masses") {
  const MarkedTree t = grow_tree(fixtures::law_a(), 14, 1 << 20, 2);
  const auto sch = uniform_a();
  for (int n : {0, 3, 6})
    for (int m : {0, 2, 8}) CHECK(cylinder_mass(t, sch, t.level_begin(n) + (t.level_size(n) - 1) / 2, m) == std::ldexp(1.0, -n));
  const auto y = martingale_Y(t, sch, 14).y;
  CHECK(cylinder_mass(t, sch, 0, 14) == y[14]);
  CHECK_THROWS(cylinder_mass(t, sch, t.level_begin(10), 5));

  const auto law = fixtures::plane_law();
  const auto p = q_alpha(law, vec({0.45, 0.5}));
  const Schedule s2 = constant_schedule(law, p.q, p.alpha);
  const MarkedTree t2 = grow_tree(law, 10, 1 << 20, 4);
  const auto w = cascade_weights(t2, s2);
  for (int n = 0; n <= 4; ++n)
    for (std::size_t u = t2.level_begin(n); u < std::min(t2.level_end(n), t2.level_begin(n) + 5); ++u) {
      const double parent = cylinder_mass(t2, w, u, 6);
      double kids = 0.0;
      for (std::int32_t c = 0; c < t2.node(u).child_count; ++c)
        kids += cylinder_mass(t2, w, static_cast<std::size_t>(t2.node(u).first_child + c), 5);
      CHECK(std::abs(kids - parent) <= 1e-12 * parent);
    }
  CHECK(std::abs(cylinder_mass(t2, w, 0, 10) - martingale_Y(t2, s2, 10).y[10]) <= 1e-12);
}

TEST_CASE("spine sampling") {
  const auto a = fixtures::law_a();
  CHECK(spine_sample(a, uniform_a(), 0, 1).length() == 0);
  for (double target : {0.5, 0.25}) {
    const auto p = q_alpha(a, vec({target}));
    const Schedule s = constant_schedule(a, p.q, p.alpha);
    int good = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const SpinePath path = spine_sample(a, s, 1000000, seed);
      good += std::abs(path.cum_x(0, 1000000) / 1e6 - target) <= 0.002 ? 1 : 0;
    }
    CHECK(good >= 19);
  }
  const SpinePath path = spine_sample(fixtures::plane_law(), constant_schedule(fixtures::plane_law(), vec({0.1, 0.2}), vec({0.5, 0.5})), 500, 3);
  bool ok = true;
  for (Eigen::Index k = 0; k < 500; ++k) {
    ok = ok && (path.cum_x.col(k + 1) - path.cum_x.col(k) - path.x.col(k)).norm() <= 1e-12 * (1.0 + path.cum_x.col(k + 1).norm());
    ok = ok && std::abs(path.cum_phi[k + 1] - path.cum_phi[k] - path.phi[k]) <= 1e-12 * path.cum_phi[k + 1];
  }
  CHECK(ok);
}

TEST_CASE("schedule construction") {
  const auto a = fixtures::law_a();
  const Schedule one = build_schedule(a, {vec({0.5})}, 64, 1.5);
  CHECK(one.blocks.size() == 1);
  CHECK(std::abs(one.at(1).q[0]) <= 1e-9);
  CHECK(&one.at(1) == &one.at(1 << 22));

  const Schedule two = build_schedule(a, {vec({0.3}), vec({0.7})}, 64, 1.5);
  REQUIRE(two.blocks.size() >= 5);
  const std::int64_t expect[] = {64, 96, 144, 216, 324};
  for (int j = 0; j < 5; ++j) {
    CHECK(two.blocks[static_cast<std::size_t>(j)].length == expect[j]);
    CHECK(two.blocks[static_cast<std::size_t>(j)].alpha[0] == (j % 2 == 0 ? 0.3 : 0.7));
  }
  CHECK(two.at(64).alpha[0] == 0.3);
  CHECK(two.at(65).alpha[0] == 0.7);

  CHECK_THROWS_AS(build_schedule(a, {vec({0.1}), vec({0.9})}, 64, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule(a, {vec({1.0})}, 64, 1.5), std::domain_error);
  CHECK_THROWS_AS(build_schedule(a, {vec({0.5})}, 64, 1.0), std::invalid_argument);

  ScheduleOptions dom;
  dom.dominance = true;
  const Schedule d = build_schedule(a, {vec({0.3}), vec({0.7})}, 4, 1.5, dom);
  std::int64_t past = 0;
  for (std::size_t j = 0; j < d.blocks.size(); ++j) {
    CHECK(d.blocks[j].length >= static_cast<std::int64_t>(j) * past);
    past += d.blocks[j].length;
  }
}

TEST_CASE("schedule running means visit every target") {
  const auto a = fixtures::law_a();
  const Schedule s = build_schedule(a, {vec({0.3}), vec({0.7})}, 64, 10.0);
  const SpinePath path = spine_sample(a, s, 1000000, 12);
  double lo = 1.0, hi = 0.0;
  for (std::int64_t k = 10000; k <= 1000000; ++k) {
    const double m = path.cum_x(0, k) / static_cast<double>(k);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  CHECK(lo <= 0.3 + 0.05);
  CHECK(hi >= 0.7 - 0.05);
}

TEST_CASE("percolation examples") {
  const auto a = fixtures::law_a();
  PercolationOptions opt;
  opt.threads = 4;
  const auto low = percolate_survival(a, uniform_a(), 0.4, 20, 200, 31, opt);
  CHECK(low.survival_frequency <= 0.05);
  CHECK(low.subcritical_thinning);
  CHECK_FALSE(low.probe_dimension_exceeds);
  const auto high = percolate_survival(a, uniform_a(), 0.6, 20, 200, 31, opt);
  CHECK(high.survival_frequency >= 0.3);
  CHECK(high.probe_dimension_exceeds);
  CHECK(std::abs(high.predicted_dimension - kLn2) <= 1e-12);
  const auto full = percolate_survival(a, uniform_a(), 1.0, 12, 20, 31, opt);
  CHECK(full.survival_frequency == 1.0);
  CHECK(full.survivals <= full.trials);
  CHECK(std::abs(full.mass_mean - 1.0) <= 1e-12);
  CHECK_THROWS(percolate_survival(a, uniform_a(), 0.0, 20, 10, 1));
  CHECK_THROWS(percolate_survival(a, uniform_a(), 1.5, 20, 10, 1));
}

TEST_CASE("percolation thins offspring by beta") {
  for (const auto& law : {fixtures::law_a(), fixtures::line_law()}) {
    const auto in = law.intensity();
    const Eigen::VectorXd mean = in.x * in.weight / in.weight.sum();
    const auto out = percolate_survival(law, constant_schedule(law, vec({0.0}), mean), 0.7, 12, 200, 3);
    CHECK(std::abs(out.mean_retained_offspring - 0.7 * law.mean_offspring()) <= 3 * out.retained_offspring_se);
  }
}

TEST_CASE("percolation is independent of the thread count") {
  const auto a = fixtures::law_a();
  PercolationOptions one, many;
  many.threads = 16;
  const auto x = percolate_survival(a, uniform_a(), 0.6, 16, 64, 5, one);
  const auto y = percolate_survival(a, uniform_a(), 0.6, 16, 64, 5, many);
  CHECK(x.survivals == y.survivals);
  CHECK(x.mass_mean == y.mass_mean);
  CHECK(x.mean_retained_offspring == y.mean_retained_offspring);
}

TEST_CASE("partition pressure estimates") {
  const auto a = fixtures::law_a();
  const MarkedTree t = grow_tree(a, 14, 1 << 20, 3);
  const auto exact = partition_pressure_estimate(a, t, vec({0.0}), vec({0.5}), 1, 14);
  CHECK(std::abs(exact.t - kLn2) <= 1e-15);
  CHECK(std::abs(exact.slope) <= 1e-12);
  CHECK(exact.consistent);
  const auto above = partition_pressure_estimate(a, t, vec({0.0}), vec({0.5}), 1, 14, kLn2 + 0.1);
  CHECK(std::abs(above.slope + 0.1) <= 1e-9);
  CHECK(above.consistent);
  const auto below = partition_pressure_estimate(a, t, vec({0.0}), vec({0.5}), 1, 14, kLn2 - 0.1);
  CHECK(std::abs(below.slope - 0.1) <= 1e-9);
  CHECK_FALSE(below.consistent);
  CHECK_THROWS(partition_pressure_estimate(a, t, vec({0.0}), vec({0.5}), 5, 5));
  CHECK_THROWS(partition_pressure_estimate(a, t, vec({0.0}), vec({0.5}), 1, 15));

  const auto law = fixtures::line_law();
  const MarkedTree t2 = grow_tree(law, 12, 1 << 22, 8);
  const auto est = partition_pressure_estimate(law, t2, vec({0.4}), vec({1.0}), 4, 12);
  CHECK(est.consistent);
}
