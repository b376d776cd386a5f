// brwlab: command-line front end for the branching random walk toolkit.

#include "brw/cascade.hpp"
#include "brw/erlln.hpp"
#include "brw/faces.hpp"
#include "brw/io.hpp"
#include "brw/spectrum.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace brw;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double parse_real(const std::string& s) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && *b == ' ') ++b;
  if (b < e && *b == '+') ++b;
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e) throw UsageError("not a number: '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

Eigen::VectorXd parse_vector(const std::string& s, int d, const std::string& what) {
  const auto parts = split(s, ',');
  if (static_cast<int>(parts.size()) != d)
    throw UsageError(what + " needs " + std::to_string(d) + " comma-separated values");
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = parse_real(parts[static_cast<std::size_t>(i)]);
  return v;
}

std::vector<Eigen::VectorXd> parse_points(const std::string& s, int d, const std::string& what) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& p : split(s, ';')) out.push_back(parse_vector(p, d, what));
  return out;
}

std::vector<double> parse_reals(const std::string& s) {
  std::vector<double> out;
  for (const auto& p : split(s, ',')) out.push_back(parse_real(p));
  return out;
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  for (const auto& p : split(s, ',')) {
    const double v = parse_real(p);
    if (v != std::floor(v) || v < 0 || v > 1e9) throw UsageError("not a non-negative integer: '" + p + "'");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

/// "a:b:step" per coordinate, coordinates separated by ';'.
std::vector<Eigen::VectorXd> parse_grid(const std::string& s, int d) {
  const auto axes_text = split(s, ';');
  if (static_cast<int>(axes_text.size()) != d) throw UsageError("--alpha-grid needs one a:b:step range per dimension");
  std::vector<std::vector<double>> axes;
  for (const auto& a : axes_text) {
    const auto r = split(a, ':');
    if (r.size() != 3) throw UsageError("grid range must be a:b:step");
    const double lo = parse_real(r[0]), hi = parse_real(r[1]), step = parse_real(r[2]);
    if (!(step > 0) || hi < lo) throw UsageError("grid range needs step > 0 and b >= a");
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> axis;
    for (long i = 0; i < n; ++i) axis.push_back(lo + static_cast<double>(i) * step);
    axes.push_back(std::move(axis));
  }
  std::vector<Eigen::VectorXd> grid;
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  while (true) {
    Eigen::VectorXd p(d);
    for (int i = 0; i < d; ++i) p[i] = axes[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
    grid.push_back(p);
    int k = d - 1;
    while (k >= 0 && ++idx[static_cast<std::size_t>(k)] == axes[static_cast<std::size_t>(k)].size()) {
      idx[static_cast<std::size_t>(k)] = 0;
      --k;
    }
    if (k < 0) break;
  }
  return grid;
}

Metric parse_metric(const std::string& s) {
  if (s == "unit") return Metric::unit;
  if (s == "phi") return Metric::phi;
  throw UsageError("--metric must be unit or phi");
}

json rational_vector_json(const RationalVector& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(x.str());
  return a;
}

struct Context {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 1;
  int threads = 1;
  std::vector<std::string> argv;
};

class Runner {
 public:
  explicit Runner(const Context& ctx) : ctx_(ctx) {
    law_bytes_ = read_file(ctx.config);
    law_.emplace(load_law(ctx.config));
    fs::create_directories(ctx.out);
  }

  const BranchLaw& law() const { return *law_; }
  int d() const { return law_->dim(); }

  void emit(const std::string& name, const std::string& text) {
    write_text(fs::path(ctx_.out) / name, text);
    outputs_.push_back(name);
  }
  void emit_json(const std::string& name, const json& doc) { emit(name, dump_json(doc)); }

  json& manifest() { return manifest_; }

  void finish(const std::string& command, double seconds) {
    std::string canonical = law_bytes_;
    for (std::size_t i = 0; i < ctx_.argv.size(); ++i) {
      const std::string& a = ctx_.argv[i];
      if (a == "--out" || a == "--threads") {
        ++i;
        continue;
      }
      canonical += '\n' + a;
    }
    manifest_["command"] = command;
    manifest_["argv"] = ctx_.argv;
    manifest_["config_hash"] = sha256_hex(canonical);
    manifest_["law_hash"] = sha256_hex(law_bytes_);
    manifest_["seed"] = ctx_.seed;
    manifest_["threads"] = ctx_.threads;
    manifest_["version"] = "1.0.0";
    manifest_["wall_time_seconds"] = seconds;
    manifest_["outputs"] = outputs_;
    manifest_["tolerances"] = {
        {"probability", kProbabilityTolerance},       {"geometry", kGeometryTolerance},
        {"divergence_cap", kDivergenceCap},           {"critical", kCriticalTolerance},
        {"attainment", kAttainmentTolerance},         {"ek_set_spacing", 1e-3},
    };
    write_text(fs::path(ctx_.out) / "manifest.json", dump_json(manifest_));
  }

 private:
  const Context& ctx_;
  std::string law_bytes_;
  std::optional<BranchLaw> law_;
  json manifest_ = json::object();
  std::vector<std::string> outputs_;
};

json ld_options_json(const LDOptions& o) {
  return {{"eps_ladder", o.eps_ladder},       {"rate_margin", o.rate_margin},
          {"cumulant_tolerance", o.cumulant_tolerance}, {"shrink_slack", o.shrink_slack},
          {"theta_tolerance", o.theta_tolerance}, {"seed_quorum", o.seed_quorum},
          {"seeds", o.seeds},                 {"cap", o.cap},
          {"disjoint", o.disjoint}};
}

json ld_report_json(const LDReport& r) {
  json doc;
  doc["part"] = r.part;
  doc["lambda"] = json_vector(r.lambda);
  doc["r"] = json_number(r.rate_r);
  doc["predicted"] = {{"cumulant", json_number(r.predicted_cumulant)},
                      {"target", json_vector(r.target)},
                      {"rate", json_number(r.rate_value)},
                      {"threshold", json_number(r.threshold)}};
  json per_n = json::array();
  for (const auto& row : r.per_n) {
    json balls = json::array();
    for (std::size_t e = 0; e < row.balls.size(); ++e) {
      json b = {{"eps", row.balls[e].eps}, {"hits", row.balls[e].hits}, {"log_ratio", json_number(row.balls[e].log_ratio)}};
      if (!row.zero_hit_frequency.empty()) b["zero_hit_frequency"] = json_number(row.zero_hit_frequency[e]);
      balls.push_back(b);
    }
    per_n.push_back({{"n", row.n},
                     {"k", row.k},
                     {"cumulant", json_number(row.cumulant)},
                     {"deviation", json_number(row.deviation)},
                     {"count_ratio_by_eps", balls}});
  }
  doc["per_n"] = per_n;
  if (!r.theta.empty()) {
    json th = json::array();
    for (const auto& c : r.theta)
      th.push_back({{"theta", c.theta},
                    {"predicted", json_number(c.predicted)},
                    {"observed", json_number(c.observed)},
                    {"within", c.within}});
    doc["theta"] = th;
  }
  if (r.eps_found) doc["eps_found"] = *r.eps_found;
  doc["verdict"] = to_string(r.verdict);
  doc["reason"] = r.reason;
  doc["seed"] = r.seed;
  doc["seeds"] = r.seeds;
  return doc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"brwlab: pressures, spectra and simulations for branching random walks"};
  app.require_subcommand(1);
  Context ctx;
  for (int i = 1; i < argc; ++i) ctx.argv.emplace_back(argv[i]);

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", ctx.config, "law JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", ctx.out, "output directory");
    sub->add_option("--seed", ctx.seed, "master seed");
    sub->add_option("--threads", ctx.threads, "worker threads")->check(CLI::Range(1, 1024));
  };

  std::string q_text, alpha_text, grid_text, metric_text = "phi", vertices_text, targets_text;
  std::string lambda_text = "1", n_text = "16,20,24", theta_text = "1,2", eps_text;
  int depth = 20, tail = 8, trees = 1, trials = 200;
  std::size_t node_cap = std::size_t{1} << 22;
  std::int64_t length = 100000, base_block = 64, stride = 1, n_len = 1 << 20;
  double growth = 10.0, beta = 0.5, rate = 0.3, c = 1.0 / std::log(2.0), eps = 0.05;
  std::optional<double> rate_opt;
  bool disjoint = false;
  std::optional<int> part_seeds;

  auto* pressure = app.add_subcommand("pressure", "P(q), gradient and implicit pressure at (q, alpha)");
  common(pressure);
  pressure->add_option("--q", q_text, "tilt vector, comma separated")->required();
  pressure->add_option("--alpha", alpha_text, "level vector");

  auto* spectrum = app.add_subcommand("spectrum", "pointwise spectrum on a grid");
  common(spectrum);
  spectrum->add_option("--alpha-grid", grid_text, "a:b:step per coordinate, ';' between coordinates")->required();
  spectrum->add_option("--metric", metric_text, "unit or phi");

  auto* ekset = app.add_subcommand("ekset", "spectrum of a polyline target set");
  common(ekset);
  ekset->add_option("--vertices", vertices_text, "points separated by ';'")->required();
  ekset->add_option("--metric", metric_text, "unit or phi");

  auto* simulate = app.add_subcommand("simulate", "grow trees and track the cascade martingale");
  common(simulate);
  simulate->add_option("--depth", depth, "depth cap");
  simulate->add_option("--node-cap", node_cap, "node cap per tree");
  simulate->add_option("--q", q_text, "schedule tilt (default 0)");
  simulate->add_option("--alpha", alpha_text, "schedule level (default q_alpha at this level when --q is absent)");
  simulate->add_option("--trees", trees, "number of independent trees")->check(CLI::PositiveNumber);
  simulate->add_option("--tail", tail, "truncation depth for cylinder masses");

  auto* spine = app.add_subcommand("spine", "sample the tilted spine under a schedule");
  common(spine);
  spine->add_option("--targets", targets_text, "schedule targets separated by ';'")->required();
  spine->add_option("--length", length, "number of increments");
  spine->add_option("--base", base_block, "first block length");
  spine->add_option("--growth", growth, "block growth ratio");
  spine->add_option("--stride", stride, "row stride of the CSV dump")->check(CLI::PositiveNumber);

  auto* erlln = app.add_subcommand("erlln", "window statistics and large-deviation checks");
  erlln->require_subcommand(1);
  auto add_ld = [&](CLI::App* sub) {
    common(sub);
    sub->add_option("--q", q_text, "tilt (default 0)");
    sub->add_option("--alpha", alpha_text, "level")->required();
    sub->add_option("--lambda", lambda_text, "lambda vector");
    sub->add_option("--n", n_text, "window lengths, comma separated");
    sub->add_flag("--disjoint", disjoint, "use disjoint windows");
    sub->add_option("--seeds", part_seeds, "seed count for multi-seed checks");
  };
  auto* part1 = erlln->add_subcommand("part1", "cumulant convergence above the critical rate");
  add_ld(part1);
  part1->add_option("--rate", rate, "window rate r");
  auto* part2 = erlln->add_subcommand("part2", "empty balls below the critical rate");
  add_ld(part2);
  part2->add_option("--rate", rate, "window rate r");
  auto* part3 = erlln->add_subcommand("part3", "scaled cumulants at the critical rate");
  add_ld(part3);
  part3->add_option("--theta", theta_text, "theta values, comma separated");
  part3->add_option("--rate", rate_opt, "override the critical window rate");
  auto* classic = erlln->add_subcommand("classic", "classic sliding-window maximum");
  common(classic);
  classic->add_option("--q", q_text, "tilt (default 0)");
  classic->add_option("--alpha", alpha_text, "spine level (default: the intensity mean, untilted)");
  classic->add_option("--N", n_len, "path length");
  classic->add_option("--c", c, "window constant");
  auto* counts = erlln->add_subcommand("counts", "exact level-set counts on a realised tree");
  common(counts);
  counts->add_option("--alpha", alpha_text, "level")->required();
  counts->add_option("--eps", eps, "ball radius");
  counts->add_option("--eps-list", eps_text, "per-n radii, comma separated");
  counts->add_option("--n", n_text, "depths, comma separated");
  counts->add_option("--node-cap", node_cap, "node cap");

  auto* percolate = app.add_subcommand("percolate", "percolation survival probe");
  common(percolate);
  percolate->add_option("--beta", beta, "retention probability")->required();
  percolate->add_option("--depth", depth, "depth cap");
  percolate->add_option("--trials", trials, "number of trials")->check(CLI::PositiveNumber);
  percolate->add_option("--q", q_text, "schedule tilt (default 0)");
  percolate->add_option("--alpha", alpha_text, "schedule level");

  auto* faces = app.add_subcommand("faces", "face classification and boundary decomposition");
  common(faces);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const auto start = std::chrono::steady_clock::now();
  std::string command;
  try {
    Runner run(ctx);
    const int d = run.d();
    const BranchLaw& law = run.law();
    auto q_or_zero = [&] { return q_text.empty() ? Eigen::VectorXd(Eigen::VectorXd::Zero(d)) : parse_vector(q_text, d, "--q"); };
    auto alpha_or_mean = [&] {
      if (!alpha_text.empty()) return parse_vector(alpha_text, d, "--alpha");
      const auto& in = law.intensity();
      return Eigen::VectorXd(in.x * in.weight / in.weight.sum());
    };

    if (*pressure) {
      command = "pressure";
      const Eigen::VectorXd q = parse_vector(q_text, d, "--q");
      const ConvexEval p = p_tilde(law, q);
      json doc = {{"q", json_vector(q)}, {"p_tilde", json_number(p.value)}, {"gradient", json_vector(p.gradient)}};
      if (!alpha_text.empty()) {
        const Eigen::VectorXd a = parse_vector(alpha_text, d, "--alpha");
        const ImplicitPressurePoint ip = implicit_pressure(law, q, a);
        const Membership m = membership_IX(law, a);
        doc["alpha"] = json_vector(a);
        doc["implicit_pressure"] = {{"t", json_number(ip.t)},
                                    {"gradient", json_vector(ip.gradient)},
                                    {"entropy", json_number(ip.h)},
                                    {"lyapunov", json_number(ip.lambda)},
                                    {"dimension", json_number(ip.h / ip.lambda)},
                                    {"beta", json_vector(ip.beta)}};
        doc["legendre"] = json_number(m.value);
        doc["membership"] = to_string(m.cls);
      }
      run.emit_json("pressure.json", doc);
    } else if (*spectrum || *ekset) {
      const Metric metric = parse_metric(metric_text);
      if (*spectrum) {
        command = "spectrum";
        const auto rows = spectrum_table(law, parse_grid(grid_text, d), metric);
        CsvTable csv;
        for (int i = 0; i < d; ++i) csv.header.push_back("alpha_" + std::to_string(i + 1));
        for (const char* h : {"in_IX", "class", "dim_unit", "dim_phi"}) csv.header.emplace_back(h);
        for (int i = 0; i < d; ++i) csv.header.push_back("q_alpha_" + std::to_string(i + 1));
        csv.header.emplace_back("t");
        json arr = json::array();
        for (const auto& r : rows) {
          std::vector<std::string> cells;
          json obj;
          for (int i = 0; i < d; ++i) {
            cells.push_back(format_number(r.alpha[i]));
            obj["alpha_" + std::to_string(i + 1)] = json_number(r.alpha[i]);
          }
          cells.emplace_back(r.in_IX ? "true" : "false");
          obj["in_IX"] = r.in_IX;
          cells.push_back(to_string(r.cls));
          obj["class"] = to_string(r.cls);
          cells.push_back(format_number(r.dim_unit_metric));
          obj["dim_unit"] = json_number(r.dim_unit_metric);
          cells.push_back(format_number(r.dim_phi_metric));
          obj["dim_phi"] = json_number(r.dim_phi_metric);
          for (int i = 0; i < d; ++i) {
            cells.push_back(r.q_alpha ? format_number((*r.q_alpha)[i]) : "");
            obj["q_alpha_" + std::to_string(i + 1)] = r.q_alpha ? json_number((*r.q_alpha)[i]) : json(nullptr);
          }
          cells.push_back(format_number(r.t));
          obj["t"] = json_number(r.t);
          csv.add_row(std::move(cells));
          arr.push_back(obj);
        }
        run.emit("spectrum.csv", csv.str());
        run.emit_json("spectrum.json", {{"metric", metric_text}, {"rows", arr}});
      } else {
        command = "ekset";
        const auto verts = parse_points(vertices_text, d, "--vertices");
        const double v = ek_set_spectrum(law, verts, metric);
        json vs = json::array();
        for (const auto& p : verts) vs.push_back(json_vector(p));
        run.emit_json("ekset.json", {{"metric", metric_text}, {"vertices", vs}, {"dimension", json_number(v)}});
      }
      run.manifest()["metric"] = metric_text;
    } else if (*simulate) {
      command = "simulate";
      Schedule schedule;
      if (q_text.empty() && !alpha_text.empty()) {
        const ImplicitPressurePoint p = q_alpha(law, parse_vector(alpha_text, d, "--alpha"));
        schedule = constant_schedule(law, p.q, p.alpha);
      } else {
        schedule = constant_schedule(law, q_or_zero(), alpha_or_mean());
      }
      std::vector<std::vector<double>> ys(static_cast<std::size_t>(trees));
      std::vector<std::optional<int>> truncations(static_cast<std::size_t>(trees));
      std::vector<int> depths(static_cast<std::size_t>(trees));
      std::vector<std::vector<std::string>> warnings(static_cast<std::size_t>(trees));
      std::optional<double> root_mass;
      parallel_for(ys.size(), ctx.threads, [&](std::size_t i) {
        const MarkedTree tree = grow_tree(law, depth, node_cap, derive_seed(ctx.seed, i));
        const MartingalePath path = martingale_Y(tree, schedule, tree.depth());
        ys[i] = path.y;
        warnings[i] = path.warnings;
        truncations[i] = tree.truncated_at_depth();
        depths[i] = tree.depth();
      });
      if (trees == 1) {
        const MarkedTree tree = grow_tree(law, depth, node_cap, derive_seed(ctx.seed, 0));
        if (tail <= tree.depth()) root_mass = cylinder_mass(tree, schedule, 0, tail);
      }
      const int common_depth = *std::min_element(depths.begin(), depths.end());
      CsvTable csv{{"n", "mean_Y", "se_Y"}, {}};
      for (int n = 0; n <= common_depth; ++n) {
        double s1 = 0.0, s2 = 0.0;
        for (const auto& y : ys) {
          s1 += y[static_cast<std::size_t>(n)];
          s2 += y[static_cast<std::size_t>(n)] * y[static_cast<std::size_t>(n)];
        }
        const double mean = s1 / trees;
        const double se = trees > 1 ? std::sqrt(std::max(0.0, (s2 - s1 * mean) / (trees - 1)) / trees) : 0.0;
        csv.add_row({std::to_string(n), format_number(mean), format_number(se)});
      }
      run.emit("martingale.csv", csv.str());
      json trunc = json::array();
      for (const auto& t : truncations) trunc.push_back(t ? json(*t) : json(nullptr));
      json summary = {{"trees", trees},
                      {"depth_cap", depth},
                      {"node_cap", node_cap},
                      {"realised_depth", common_depth},
                      {"truncated_at_depth", trunc},
                      {"schedule", {{"q", json_vector(schedule.blocks[0].q)},
                                    {"alpha", json_vector(schedule.blocks[0].alpha)},
                                    {"t", json_number(schedule.blocks[0].t)},
                                    {"entropy", json_number(schedule.blocks[0].h)}}},
                      {"warnings", warnings.front()},
                      {"tail_depth", tail}};
      if (root_mass) summary["root_cylinder_mass"] = json_number(*root_mass);
      run.emit_json("simulate.json", summary);
      run.manifest()["caps"] = {{"depth_cap", depth}, {"node_cap", node_cap}, {"tail_depth", tail}};
      run.manifest()["truncation"] = trunc;
    } else if (*spine) {
      command = "spine";
      const auto targets = parse_points(targets_text, d, "--targets");
      ScheduleOptions so;
      so.horizon = std::max<std::int64_t>(length, 1);
      const Schedule schedule = build_schedule(law, targets, base_block, growth, so);
      const SpinePath path = spine_sample(law, schedule, length, ctx.seed);
      CsvTable csv;
      csv.header.emplace_back("k");
      for (int i = 0; i < d; ++i) csv.header.push_back("x_" + std::to_string(i + 1));
      csv.header.emplace_back("phi");
      for (int i = 0; i < d; ++i) csv.header.push_back("mean_" + std::to_string(i + 1));
      std::vector<double> tail_min(static_cast<std::size_t>(d), INFINITY), tail_max(static_cast<std::size_t>(d), -INFINITY);
      for (std::int64_t k = 1; k <= length; ++k) {
        const Eigen::VectorXd mean = path.cum_x.col(k) / static_cast<double>(k);
        if (k >= 10000)
          for (int i = 0; i < d; ++i) {
            tail_min[static_cast<std::size_t>(i)] = std::min(tail_min[static_cast<std::size_t>(i)], mean[i]);
            tail_max[static_cast<std::size_t>(i)] = std::max(tail_max[static_cast<std::size_t>(i)], mean[i]);
          }
        if (k % stride != 0 && k != length) continue;
        std::vector<std::string> cells{std::to_string(k)};
        for (int i = 0; i < d; ++i) cells.push_back(format_number(path.x(i, k - 1)));
        cells.push_back(format_number(path.phi[k - 1]));
        for (int i = 0; i < d; ++i) cells.push_back(format_number(mean[i]));
        csv.add_row(std::move(cells));
      }
      run.emit("spine.csv", csv.str());
      json blocks = json::array();
      for (std::size_t j = 0; j < schedule.blocks.size(); ++j)
        blocks.push_back({{"length", schedule.blocks[j].length},
                          {"q", json_vector(schedule.blocks[j].q)},
                          {"alpha", json_vector(schedule.blocks[j].alpha)},
                          {"t", json_number(schedule.blocks[j].t)}});
      json summary = {{"length", length}, {"blocks", blocks}};
      if (length > 0) summary["final_mean"] = json_vector(path.cum_x.col(length) / static_cast<double>(length));
      if (length >= 10000) {
        summary["tail_from"] = 10000;
        summary["tail_min"] = tail_min;
        summary["tail_max"] = tail_max;
      }
      run.emit_json("spine.json", summary);
    } else if (*erlln) {
      LDOptions opt;
      opt.threads = ctx.threads;
      opt.disjoint = disjoint;
      if (part_seeds) opt.seeds = *part_seeds;
      if (*part1 || *part2 || *part3) {
        const Eigen::VectorXd q = q_or_zero();
        const Eigen::VectorXd a = parse_vector(alpha_text, d, "--alpha");
        const Eigen::VectorXd lam = parse_vector(lambda_text, d, "--lambda");
        const std::vector<int> ns = parse_ints(n_text);
        LDReport rep;
        if (*part1) {
          command = "erlln part1";
          rep = ld_verify_part1(law, q, a, lam, rate, ns, ctx.seed, opt);
        } else if (*part2) {
          command = "erlln part2";
          rep = ld_verify_part2(law, q, a, lam, rate, ns, ctx.seed, opt);
        } else {
          command = "erlln part3";
          rep = ld_verify_part3(law, q, a, lam, parse_reals(theta_text), ns, ctx.seed, opt, rate_opt);
        }
        run.emit_json("ld_report.json", ld_report_json(rep));
        run.manifest()["ld_options"] = ld_options_json(opt);
      } else if (*classic) {
        command = "erlln classic";
        const Eigen::VectorXd a = alpha_or_mean();
        const Eigen::VectorXd q = !q_text.empty()     ? parse_vector(q_text, d, "--q")
                                  : alpha_text.empty() ? Eigen::VectorXd(Eigen::VectorXd::Zero(d))
                                                       : q_alpha(law, a).q;
        const SpinePath path = spine_sample(law, constant_schedule(law, q, a), n_len, ctx.seed);
        const double stat = classic_er_statistic(path, n_len, c);
        run.emit_json("classic.json", {{"N", n_len},
                                       {"c", c},
                                       {"window", std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(
                                                                                c * std::log(static_cast<double>(n_len)) + 1e-9)))},
                                       {"statistic", json_number(stat)}});
      } else {
        command = "erlln counts";
        const Eigen::VectorXd a = parse_vector(alpha_text, d, "--alpha");
        const std::vector<int> ns = parse_ints(n_text);
        const std::vector<double> radii = eps_text.empty() ? std::vector<double>(ns.size(), eps) : parse_reals(eps_text);
        if (radii.size() != ns.size()) throw UsageError("--eps-list needs one radius per depth");
        const int top = *std::max_element(ns.begin(), ns.end());
        const MarkedTree tree = grow_tree(law, top, node_cap, ctx.seed);
        const double legendre = p_tilde_star(law, a).value;
        CsvTable csv{{"n", "eps", "count", "log_count_rate", "legendre"}, {}};
        for (std::size_t i = 0; i < ns.size(); ++i) {
          const LevelCount lc = level_set_counts(tree, a, radii[i], {ns[i]}).front();
          csv.add_row({std::to_string(lc.n), format_number(radii[i]), std::to_string(lc.count),
                       format_number(lc.log_count_rate), format_number(legendre)});
        }
        run.emit("counts.csv", csv.str());
        json trunc = tree.truncated_at_depth() ? json(*tree.truncated_at_depth()) : json(nullptr);
        run.manifest()["truncation"] = trunc;
      }
    } else if (*percolate) {
      command = "percolate";
      const Schedule schedule = constant_schedule(law, q_or_zero(), alpha_or_mean());
      PercolationOptions po;
      po.threads = ctx.threads;
      const PercolationOutcome o = percolate_survival(law, schedule, beta, depth, trials, ctx.seed, po);
      run.emit_json("percolation.json", {{"beta", o.beta},
                                         {"trials", o.trials},
                                         {"survivals", o.survivals},
                                         {"survival_frequency", json_number(o.survival_frequency)},
                                         {"mass_mean", json_number(o.mass_mean)},
                                         {"mass_sd", json_number(o.mass_sd)},
                                         {"surviving_mass_mean", json_number(o.positive_mass_mean)},
                                         {"mean_retained_offspring", json_number(o.mean_retained_offspring)},
                                         {"retained_offspring_se", json_number(o.retained_offspring_se)},
                                         {"predicted_dimension", json_number(o.predicted_dimension)},
                                         {"threshold", json_number(o.threshold)},
                                         {"probe_dimension_exceeds_threshold", o.probe_dimension_exceeds},
                                         {"subcritical_thinning", o.subcritical_thinning},
                                         {"population_capped", o.population_capped}});
      run.manifest()["caps"] = {{"depth_cap", depth}, {"population_cap", po.population_cap},
                                {"survival_quorum", po.survival_quorum}};
    } else if (*faces) {
      command = "faces";
      const DecompositionReport rep = boundary_decomposition(law);
      const PolytopeCriterion pc = polytope_criterion(law);
      json fs_json = json::array();
      for (const auto& f : rep.faces) {
        json basis = json::array();
        for (const auto& v : f.subspace.exact->directions) basis.push_back(rational_vector_json(v));
        fs_json.push_back({{"class", to_string(f.cls)},
                           {"dim", f.dim},
                           {"level", f.level},
                           {"parent", f.parent ? json(*f.parent) : json(nullptr)},
                           {"mass", f.en_exact.str()},
                           {"barycenter", rational_vector_json(f.alpha_F_exact)},
                           {"base_point", rational_vector_json(f.subspace.exact->base)},
                           {"basis", basis},
                           {"support", f.support}});
      }
      json hs = json::array();
      for (const auto& h : rep.hyperplanes)
        hs.push_back({{"normal", rational_vector_json(h.normal)}, {"offset", h.offset.str()}, {"mass", json_number(h.en)}});
      json pieces = json::array();
      for (const auto& p : rep.pieces) {
        json outline = json::array();
        for (const auto& v : p.outline) outline.push_back(json_vector(v));
        pieces.push_back({{"face", p.face}, {"dim", p.dim}, {"outline", outline}});
      }
      json failing = json::array();
      for (const auto& v : pc.failing_vertices) failing.push_back(rational_vector_json(v));
      run.emit_json("faces.json", {{"faces", fs_json},
                                   {"hyperplanes", hs},
                                   {"pieces", pieces},
                                   {"disjoint", rep.disjoint},
                                   {"messages", rep.messages},
                                   {"polytope_criterion", {{"holds", pc.holds}, {"failing_vertices", failing}}}});
    }
    run.finish(command, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
