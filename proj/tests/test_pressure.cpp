#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "brw/rng.hpp"
#include "brw/spectrum.hpp"
#include "fixtures.hpp"

#include <cmath>

using namespace brw;
using fixtures::binary_entropy;
using fixtures::vec;

namespace {

const double kLn2 = std::log(2.0);

template <class F>
Eigen::VectorXd central_difference(F&& f, const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

bool close_rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double rel) {
  return (a - b).norm() <= rel * std::max(1.0, b.norm());
}

}  // namespace

TEST_CASE("p_tilde examples") {
  const auto a = fixtures::law_a();
  const auto z = p_tilde(a, vec({0.0}));
  CHECK(std::abs(z.value - kLn2) <= 1e-15);
  CHECK(std::abs(z.gradient[0] - 0.5) <= 1e-15);
  CHECK(std::abs(p_tilde(a, vec({1.0})).value - std::log1p(std::exp(1.0))) <= 1e-10);
  CHECK(std::abs(p_tilde(a, vec({-1.0})).gradient[0] - 0.2689414213699951) <= 1e-12);
  CHECK(std::isfinite(p_tilde(a, vec({800.0})).value));
}

TEST_CASE("hessians are symmetric and positive semidefinite") {
  const auto plane = fixtures::plane_law();
  SplitMix64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const auto q = vec({4 * rng.uniform() - 2, 4 * rng.uniform() - 2});
    const auto e = p_tilde(plane, q, 2);
    REQUIRE(e.hessian);
    CHECK((*e.hessian - e.hessian->transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(*e.hessian).eigenvalues().minCoeff() > 0);
    const auto ip = implicit_pressure(plane, q, vec({0.4, 0.5}), true);
    REQUIRE(ip.hessian);
    CHECK((*ip.hessian - ip.hessian->transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(*ip.hessian).eigenvalues().minCoeff() >= -1e-12);
  }
}

TEST_CASE("p_tilde_star examples") {
  const auto a = fixtures::law_a();
  const auto mid = p_tilde_star(a, vec({0.5}));
  CHECK(std::abs(mid.value - kLn2) <= 1e-12);
  REQUIRE(mid.argmin);
  CHECK(std::abs((*mid.argmin)[0]) <= 1e-9);
  const auto q = p_tilde_star(a, vec({0.25}));
  CHECK(std::abs(q.value - 0.5623351446188083) <= 1e-8);
  REQUIRE(q.argmin);
  CHECK(std::abs((*q.argmin)[0] - std::log(1.0 / 3.0)) <= 1e-8);
  CHECK(p_tilde_star(a, vec({1.2})).value == -INFINITY);
  const auto edge = p_tilde_star(a, vec({1.0}));
  CHECK(std::abs(edge.value) <= 1e-12);
  CHECK_FALSE(edge.argmin);
}

TEST_CASE("membership examples") {
  const auto a = fixtures::law_a();
  CHECK(membership_IX(a, vec({0.5})).cls == IXClass::interior);
  CHECK(membership_IX(a, vec({1.0})).cls == IXClass::boundary_noncrit);
  CHECK(membership_IX(a, vec({0.0})).cls == IXClass::boundary_noncrit);
  CHECK(membership_IX(a, vec({-0.1})).cls == IXClass::outside);

  // E(N) = 3/2 with Bernoulli values: log(3/4) + H(alpha) has two roots inside (0, 1).
  const auto law = fixtures::law_one_two();
  double lo = 1e-9, hi = 0.5;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    (std::log(0.75) + binary_entropy(m) < 0 ? lo : hi) = m;
  }
  const auto crit = membership_IX(law, vec({hi}));
  CHECK(crit.cls == IXClass::boundary_crit);
  CHECK(std::isfinite(crit.q_norm));
  CHECK(membership_IX(law, vec({hi - 1e-3})).cls == IXClass::outside);
  CHECK(membership_IX(law, vec({hi + 1e-3})).cls == IXClass::interior);
  CHECK(membership_IX(law, vec({0.0})).cls == IXClass::outside);
}

TEST_CASE("implicit pressure examples") {
  const auto a = fixtures::law_a();
  for (double al : {0.0, 0.3, 0.9}) CHECK(std::abs(implicit_pressure(a, vec({0.0}), vec({al})).t - kLn2) <= 1e-12);
  const auto b = fixtures::law_b();
  CHECK(std::abs(implicit_pressure(b, vec({0.0}), vec({1.5})).t - 0.4812118250596035) <= 1e-12);
  const double q = std::log(1.0 / 3.0);
  CHECK(std::abs(implicit_pressure(a, vec({q}), vec({0.25})).t - (p_tilde(a, vec({q})).value - q * 0.25)) <= 1e-10);
}

TEST_CASE("q_alpha examples") {
  const auto a = fixtures::law_a();
  const auto mid = q_alpha(a, vec({0.5}));
  CHECK(std::abs(mid.q[0]) <= 1e-9);
  CHECK(std::abs(mid.t - kLn2) <= 1e-12);
  const auto quarter = q_alpha(a, vec({0.25}));
  CHECK(std::abs(quarter.q[0] - std::log(1.0 / 3.0)) <= 1e-8);
  CHECK(std::abs(quarter.t - binary_entropy(0.25)) <= 1e-10);
  CHECK(std::abs(q_alpha(fixtures::law_b(), vec({1.5})).t - 0.4620981203732969) <= 1e-10);
  CHECK_THROWS_AS(q_alpha(a, vec({1.0})), std::domain_error);
  CHECK_THROWS_AS(q_alpha(a, vec({2.0})), std::domain_error);
}

TEST_CASE("lambda_psi and its Legendre transform") {
  const auto a = fixtures::law_a();
  const auto p = q_alpha(a, vec({0.5}));
  const auto zero = lambda_psi(a, p, vec({0.0}));
  CHECK(std::abs(zero.value) <= 1e-12);
  CHECK(std::abs(zero.gradient[0] - 0.5) <= 1e-12);
  CHECK(std::abs(lambda_psi(a, p, vec({1.0})).value - 0.6201145069582275) <= 1e-12);

  const auto at_mean = lambda_psi_star(a, p.q, p.alpha, vec({0.5}));
  CHECK(std::abs(at_mean.value) <= 1e-12);
  REQUIRE(at_mean.argmin);
  CHECK(std::abs((*at_mean.argmin)[0]) <= 1e-8);
  const auto at_one = lambda_psi_star(a, p.q, p.alpha, vec({1.0}));
  CHECK(std::abs(at_one.value + kLn2) <= 1e-10);
  CHECK_FALSE(at_one.argmin);
  CHECK(std::abs(lambda_psi_star(a, p.q, p.alpha, vec({0.75})).value + 0.1308120359) <= 1e-9);
  const double e = std::exp(1.0);
  CHECK(std::abs(lambda_psi_star(a, p.q, p.alpha, vec({e / (1 + e)})).value - (binary_entropy(e / (1 + e)) - kLn2)) <= 1e-10);
}

TEST_CASE("spectrum examples") {
  const auto a = fixtures::law_a();
  CHECK(std::abs(spectrum_point(a, vec({0.5}), Metric::unit).dim_phi_metric - kLn2) <= 1e-12);
  CHECK(std::abs(spectrum_point(fixtures::law_b(), vec({1.5}), Metric::phi).dim_phi_metric - kLn2 / 1.5) <= 1e-10);
  const auto edge = spectrum_point(a, vec({1.0}), Metric::unit);
  CHECK(edge.in_IX);
  CHECK(edge.dim_phi_metric == 0.0);
  const auto out = spectrum_point(a, vec({1.5}), Metric::phi);
  CHECK_FALSE(out.in_IX);
  CHECK(out.dim_unit_metric == -INFINITY);
  CHECK(out.dim_phi_metric == -INFINITY);
}

TEST_CASE("ek-set examples") {
  const auto a = fixtures::law_a();
  CHECK(std::abs(ek_set_spectrum(a, {vec({0.5})}, Metric::phi) - kLn2) <= 1e-12);
  CHECK(std::abs(ek_set_spectrum(a, {vec({0.25}), vec({0.5})}, Metric::phi) - 0.5623351446) <= 1e-9);
  CHECK(std::abs(ek_set_spectrum(a, {vec({0.3}), vec({0.7})}, Metric::phi) - 0.6108643021) <= 1e-9);
  CHECK_THROWS_AS(ek_set_spectrum(a, {vec({0.5}), vec({1.5})}, Metric::phi), std::domain_error);
}

TEST_CASE("unit metric: both spectrum columns agree") {
  const auto law = fixtures::law_one_two();
  for (double al = 0.2; al <= 0.95; al += 0.05) {
    const auto row = spectrum_point(law, vec({al}), Metric::phi);
    if (row.in_IX) CHECK(std::abs(row.dim_phi_metric - std::max(0.0, row.dim_unit_metric)) <= 1e-8);
  }
}

TEST_CASE("convexity of p_tilde and lambda_psi") {
  const auto plane = fixtures::plane_law();
  const auto p = implicit_pressure(plane, vec({0.3, -0.2}), vec({0.4, 0.5}));
  SplitMix64 rng(17);
  auto draw = [&] {
    Eigen::VectorXd q(2);
    do {
      q << 10 * rng.uniform() - 5, 10 * rng.uniform() - 5;
    } while (q.norm() > 5);
    return q;
  };
  for (int k = 0; k < 200; ++k) {
    const auto q1 = draw(), q2 = draw();
    const Eigen::VectorXd m = 0.5 * (q1 + q2);
    CHECK(p_tilde(plane, m).value <= 0.5 * (p_tilde(plane, q1).value + p_tilde(plane, q2).value) + 1e-12);
    CHECK(lambda_psi(plane, p, m).value <= 0.5 * (lambda_psi(plane, p, q1).value + lambda_psi(plane, p, q2).value) + 1e-12);
  }
}

TEST_CASE("analytic gradients match central differences") {
  SplitMix64 rng(5);
  for (const auto& law : {fixtures::plane_law(), fixtures::square_law(3)}) {
    const Eigen::VectorXd alpha = vec({0.45, 0.55});
    const auto base = implicit_pressure(law, vec({0.2, 0.1}), alpha);
    for (int k = 0; k < 100; ++k) {
      const auto q = vec({4 * rng.uniform() - 2, 4 * rng.uniform() - 2});
      CHECK(close_rel(p_tilde(law, q).gradient, central_difference([&](const Eigen::VectorXd& v) { return p_tilde(law, v).value; }, q), 1e-6));
      CHECK(close_rel(implicit_pressure(law, q, alpha).gradient,
                      central_difference([&](const Eigen::VectorXd& v) { return implicit_pressure(law, v, alpha).t; }, q), 1e-6));
      CHECK(close_rel(lambda_psi(law, base, q).gradient,
                      central_difference([&](const Eigen::VectorXd& v) { return lambda_psi(law, base, v).value; }, q), 1e-6));
    }
  }
}

TEST_CASE("duality between p_tilde and its transform") {
  for (const auto& law : {fixtures::law_a(), fixtures::line_law()})
    for (double q = -3.0; q <= 3.0; q += 0.25) {
      const auto e = p_tilde(law, vec({q}));
      CHECK(std::abs(e.value - q * e.gradient[0] - p_tilde_star(law, e.gradient).value) <= 1e-10);
    }
}

TEST_CASE("entropy over Lyapunov exponent") {
  for (const auto& law : {fixtures::law_a(), fixtures::law_b(), fixtures::line_law()})
    for (double q = -2.0; q <= 2.0; q += 0.5)
      for (double al : {0.2, 0.5, 1.2, 1.7}) {
        const auto p = implicit_pressure(law, vec({q}), vec({al}));
        CHECK(std::abs(p.h / p.lambda - (p.t - q * p.gradient[0])) <= 1e-8);
      }
}

TEST_CASE("unit metric reduction and metric independence at q = 0") {
  const auto a = fixtures::law_a();
  for (double q = -3.0; q <= 3.0; q += 0.5)
    for (double al = -0.5; al <= 1.5; al += 0.25)
      CHECK(std::abs(implicit_pressure(a, vec({q}), vec({al})).t - (p_tilde(a, vec({q})).value - q * al)) <= 1e-10);
  const auto line = fixtures::line_law();
  const double t0 = implicit_pressure(line, vec({0.0}), vec({0.0})).t;
  for (double al = -1.0; al <= 4.0; al += 0.5) CHECK(std::abs(implicit_pressure(line, vec({0.0}), vec({al})).t - t0) <= 1e-12);
}

TEST_CASE("stationarity at q_alpha") {
  for (const auto& [law, alphas] : std::vector<std::pair<BranchLaw, std::vector<double>>>{
           {fixtures::law_a(), {0.1, 0.25, 0.5, 0.8}}, {fixtures::law_b(), {1.1, 1.5, 1.9}}, {fixtures::line_law(), {0.3, 1.0, 2.0}}})
    for (double al : alphas) {
      const auto p = q_alpha(law, vec({al}));
      CHECK(p.gradient.norm() <= 1e-8);
      CHECK(std::abs(p.beta[0] - al) <= 1e-7);
    }
  const auto plane = fixtures::plane_law();
  const auto p = q_alpha(plane, vec({0.4, 0.45}));
  CHECK(p.gradient.norm() <= 1e-8);
  CHECK((p.beta - vec({0.4, 0.45})).norm() <= 1e-7);
}

TEST_CASE("support function and diameter of I_X") {
  const auto a = fixtures::law_a();
  CHECK(std::abs(ix_support(a, vec({1.0})) - 1.0) <= 1e-6);
  CHECK(std::abs(ix_diameter(a) - 1.0) <= 1e-6);
  const auto law = fixtures::law_one_two();
  double lo = 1e-9, hi = 0.5;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    (std::log(0.75) + binary_entropy(m) < 0 ? lo : hi) = m;
  }
  CHECK(std::abs(ix_diameter(law) - (1 - 2 * hi)) <= 1e-6);
}
