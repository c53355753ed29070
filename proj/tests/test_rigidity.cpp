#include <doctest.h>

#include "test_support.hpp"
#include "toriclab/error.hpp"
#include "toriclab/ma_solver.hpp"
#include "toriclab/rigidity.hpp"

#include <cmath>

using namespace toriclab;
using namespace toriclab::testing;

TEST_CASE("flat plane: m_phi = 1/r") {
  const auto q = make_quadratic(Matrix::Identity(2, 2));
  ScanOptions opt;
  opt.step = 1e-3;
  opt.max_steps = 1000;
  const auto rep = radial_scan(q, *q.weights(), vec({0.1, -0.2}), vec({1.0, 1.0}), opt);
  CHECK_FALSE(rep.truncated);
  CHECK(rep.monotone);
  CHECK(rep.samples.size() == 1000);
  double worst = 0.0;
  for (const auto& s : rep.samples)
    if (s.r >= 0.1 - 1e-12) worst = std::max(worst, std::abs(s.m_phi - 1.0 / s.r));
  CHECK(worst <= 1e-6);
  CHECK(rep.samples.back().r == doctest::Approx(1.0));
  CHECK(rep.samples.back().x[0] == doctest::Approx(0.1 + std::sqrt(0.5)));
  CHECK(rep.samples.back().sigma == 0.0);

  const auto b = mean_curvature_bound_check(rep, 0.0);
  CHECK(b.holds);
  CHECK(b.tightest_ratio == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("flat space in three dimensions: m_phi = 2/r") {
  Matrix a(3, 3);
  a << 2.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 1.5;
  const auto q = make_quadratic(a);
  ScanOptions opt;
  opt.max_steps = 500;
  const auto rep = radial_scan(q, *q.weights(), vec({0.0, 0.0, 0.0}), vec({0.3, -1.0, 0.5}), opt);
  for (const auto& s : rep.samples) CHECK(std::abs(s.m_phi - 2.0 / s.r) <= 1e-6 * (2.0 / s.r));
}

TEST_CASE("distance Laplacian against neighbouring geodesics") {
  // Oracle: J from central differences of geodesics shot at v0 +- eps e, and
  // Delta r = d/dr log |J|_g by central differences in r.
  const auto u = product_family({make_exp1d(1.0), make_xlogx1d(1.0)});
  const Vector p0 = vec({0.1, 0.2});
  const Vector d = vec({1.0, 0.7});
  const Matrix g0 = evaluate_jet(u, p0, 2).hess;
  Vector e = vec({-(g0 * d)[1], (g0 * d)[0]});
  e /= std::sqrt(e.dot(g0 * e));
  const Vector v0 = d / std::sqrt(d.dot(g0 * d));
  ScanOptions opt;
  opt.step = 1e-3;
  opt.max_steps = 600;
  const auto rep = radial_scan(u, *u.weights(), p0, v0, opt);
  const double eps = 1e-5;
  const auto plus = radial_scan(u, *u.weights(), p0, v0 + eps * e, opt);
  const auto minus = radial_scan(u, *u.weights(), p0, v0 - eps * e, opt);
  auto log_len = [&](std::size_t k) {
    const Vector j = (plus.samples[k].x - minus.samples[k].x) / (2 * eps);
    return 0.5 * std::log(j.dot(evaluate_jet(u, rep.samples[k].x, 2).hess * j));
  };
  for (std::size_t k = 199; k + 1 < rep.samples.size(); k += 100) {
    const double oracle = (log_len(k + 1) - log_len(k - 1)) / (2 * opt.step);
    CAPTURE(rep.samples[k].r);
    CHECK(rep.samples[k].laplacian_r == doctest::Approx(oracle).epsilon(1e-5));
  }
}

TEST_CASE("exp1d rays against the closed form") {
  const auto e = make_exp1d(1.0);
  ScanOptions opt;
  opt.step = 1e-3;
  opt.max_steps = 1500;
  SUBCASE("increasing x") {
    const auto rep = radial_scan(e, *e.weights(), vec({0.0}), vec({1.0}), opt);
    CHECK(rep.monotone);
    for (const auto& s : rep.samples) {
      // arc length 2(1 - e^{-x/2})
      CHECK(s.x[0] == doctest::Approx(-2.0 * std::log(1.0 - s.r / 2.0)).epsilon(1e-9));
      CHECK(s.m_phi == doctest::Approx(-0.5 * std::exp(s.x[0] / 2.0)).epsilon(1e-9));
      CHECK(s.laplacian_r == 0.0);
      CHECK(s.phi == doctest::Approx(s.x[0] / 2.0));
      REQUIRE(s.bochner_slack);
      CHECK(*s.bochner_slack >= 0.0);
    }
    const auto b = mean_curvature_bound_check(rep, max_abs_phi(rep));
    CHECK(b.holds);
    CHECK(b.worst_excess < 0.0);
  }
  SUBCASE("decreasing x") {
    const auto rep = radial_scan(e, *e.weights(), vec({0.0}), vec({-1.0}), opt);
    CHECK(rep.monotone);
    for (const auto& s : rep.samples) {
      CHECK(s.x[0] == doctest::Approx(-2.0 * std::log(1.0 + s.r / 2.0)).epsilon(1e-9));
      CHECK(s.m_phi == doctest::Approx(0.5 * std::exp(s.x[0] / 2.0)).epsilon(1e-9));
    }
  }
  SUBCASE("inflated m_phi violates the bound") {
    opt.max_steps = 4000;
    auto rep = radial_scan(e, *e.weights(), vec({0.0}), vec({-1.0}), opt);
    CHECK(mean_curvature_bound_check(rep, max_abs_phi(rep)).holds);
    for (auto& s : rep.samples) s.m_phi += 1.0;
    CHECK_FALSE(mean_curvature_bound_check(rep, max_abs_phi(rep)).holds);
  }
}

TEST_CASE("scans stop at the end of incomplete directions") {
  const auto e = make_exp1d(1.0);
  ScanOptions opt;
  opt.step = 1e-2;
  opt.max_steps = 400;
  opt.diagnostics = false;
  const auto up = radial_scan(e, *e.weights(), vec({0.0}), vec({1.0}), opt);
  CHECK(up.truncated);
  CHECK(up.stop_kind == ErrorKind::GeodesicIntegrationFailure);
  CHECK(std::abs(up.max_radius - 2.0) <= 1e-3);
  const auto down = radial_scan(e, *e.weights(), vec({0.0}), vec({-1.0}), opt);
  CHECK_FALSE(down.truncated);
  CHECK(down.max_radius == doctest::Approx(4.0));

  // xlogx with K = 1: the boundary x = -1 lies at distance 2 from 0.
  const auto x = make_xlogx1d(1.0);
  const auto left = radial_scan(x, *x.weights(), vec({0.0}), vec({-1.0}), opt);
  CHECK(left.truncated);
  CHECK(std::abs(left.max_radius - 2.0) <= 1e-3);
}

TEST_CASE("m_phi is non-increasing along rays of certified families") {
  for (const auto& u : certified_families()) {
    const int n = u.dimension();
    const Vector lo = u.domain().lower().cwiseMax(Vector::Constant(n, -0.3));
    const Vector hi = u.domain().upper().cwiseMin(Vector::Constant(n, 0.3));
    const Vector p0 = sample_interior(AffineDomain::box(lo, hi), 1, 77).front();
    const auto dirs = sample_interior(AffineDomain::box(Vector::Constant(n, -1.0), Vector::Constant(n, 1.0)), 8, 78);
    for (const auto& d : dirs) {
      ScanOptions opt;
      opt.max_steps = 300;
      const auto rep = radial_scan(u, *u.weights(), p0, d, opt);
      CAPTURE(u.describe());
      CHECK(rep.monotone);
      CHECK(mean_curvature_bound_check(rep, max_abs_phi(rep)).holds);
    }
  }
}

TEST_CASE("cutoff profile") {
  const auto p = cutoff_eta(2.0, 0.5, 10001);
  CHECK(p.eta.front() == 2.0);
  CHECK(p.eta.back() == 0.0);
  CHECK(p.certified);
  CHECK(cutoff_value(2.0, 0.5, 0.5).eta == 2.0);
  CHECK(cutoff_value(2.0, 0.5, 0.5 + 1e-12).eta == doctest::Approx(2.0));
  CHECK(p.c0 == doctest::Approx(1.1 * std::max({p.max_neg_deta, p.max_abs_d2eta, p.max_ratio})));

  // Derivatives against central differences of eta.
  const double h = 1e-5;
  for (double t : {0.7, 1.1, 1.6, 1.9}) {
    const auto c = cutoff_value(2.0, 0.5, t);
    const auto ep = cutoff_value(2.0, 0.5, t + h).eta, em = cutoff_value(2.0, 0.5, t - h).eta;
    CHECK(c.deta == doctest::Approx((ep - em) / (2 * h)).epsilon(1e-7));
    CHECK(c.d2eta == doctest::Approx((ep - 2 * c.eta + em) / (h * h)).epsilon(1e-4));
    CHECK(c.ratio == doctest::Approx(c.deta * c.deta / c.eta).epsilon(1e-12));
  }

  for (auto [r, d] : {std::pair{1.0, 0.5}, {2.0, 0.0}, {2.0, 1.0}, {0.5, 0.25}}) {
    try {
      cutoff_eta(r, d);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidRange);
    }
  }
}

TEST_CASE("cutoff certificate depends only on delta") {
  // The suprema over R > 1 of -eta', |eta''| and eta'^2/eta are
  // 8/(3 sqrt3 (1-d)), 8/(1-d)^2 and 16/(1-d)^2; the last dominates.
  for (double d : {0.25, 0.5, 0.75}) {
    const double uniform = 1.1 * 16.0 / ((1 - d) * (1 - d));
    for (double R : {2.0, 4.0, 8.0, 16.0}) {
      const auto p = cutoff_eta(R, d, 10000);
      CAPTURE(R);
      CAPTURE(d);
      CHECK(p.certified);
      CHECK(p.c0 <= uniform);
      CHECK(p.max_neg_deta <= 8.0 / (3.0 * std::sqrt(3.0) * (1 - d)));
      CHECK(p.max_abs_d2eta <= 8.0 / ((1 - d) * (1 - d)));
    }
  }
}

TEST_CASE("liouville scan examples") {
  const std::vector<double> radii{1.5, 2.0, 2.5, 3.0, 4.0};
  const auto q = make_quadratic(Matrix::Identity(2, 2));
  const auto rq = liouville_scan(q, *q.weights(), vec({0.0, 0.0}), radii);
  CHECK_FALSE(rq.truncated);
  CHECK(rq.sigma_p0 == 0.0);
  for (const auto& e : rq.entries) {
    CHECK(e.feasible);
    CHECK(e.product == 0.0);
  }

  const auto e = make_exp1d(1.0);
  const auto re = liouville_scan(e, *e.weights(), vec({0.0}), radii);
  CHECK(re.truncated);
  CHECK(std::abs(re.feasible_radius - 2.0) <= 1e-3);
  CHECK(re.sigma_p0 == doctest::Approx(1.0));
  CHECK(re.entries[0].feasible);
  CHECK(re.entries[0].product == doctest::Approx(0.75));
  CHECK(re.entries[0].product < 1.0);
  for (std::size_t i = 1; i < re.entries.size(); ++i) {
    CHECK_FALSE(re.entries[i].feasible);
    CHECK(re.entries[i].error == ErrorKind::RadiusInfeasible);
  }
  CHECK(re.bounded);
}

TEST_CASE("quadratic rigidity deviation") {
  Matrix a(2, 2);
  a << 1.0, 0.2, 0.2, 3.0;
  const auto q = make_quadratic(a, vec({0.5, -1.0}));
  CHECK(quadratic_rigidity_deviation(q, sample_interior(AffineDomain::box(vec({-1, -1}), vec({1, 1})), 30, 4)) <=
        1e-12);

  std::vector<Vector> xs;
  for (int i = 0; i <= 20; ++i) xs.push_back(vec({-1.0 + 0.1 * i}));
  const double dev = quadratic_rigidity_deviation(make_exp1d(1.0), xs);
  CHECK(dev > 0.01);

  // Independent fit through the normal equations.
  Matrix m(21, 3);
  Vector y(21);
  for (int i = 0; i < 21; ++i) {
    const double x = xs[static_cast<std::size_t>(i)][0];
    m.row(i) << 1.0, x, x * x;
    y[i] = std::exp(-x);
  }
  const Vector c = (m.transpose() * m).ldlt().solve(m.transpose() * y);
  CHECK(dev == doctest::Approx((m * c - y).cwiseAbs().maxCoeff()).epsilon(1e-8));

  try {
    quadratic_rigidity_deviation(q, {vec({0, 0}), vec({1, 0}), vec({2, 0}), vec({3, 0}), vec({4, 0}), vec({5, 0})});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateSampleSet);
  }
  CHECK_THROWS_AS(quadratic_rigidity_deviation(q, {vec({0, 0})}), Error);

  const double h = 1.0 / 16;
  const auto s = solve_dirichlet(MAProblem::from_boundary_field(vec({0.0, 0.0}), vec({1.0, 1.0}), h, *q.weights(), q),
                                 1e-10, 25);
  std::vector<Vector> nodes;
  for (int i = 1; i <= 15; i += 2)
    for (int j = 1; j <= 15; j += 3) nodes.push_back(vec({i * h, j * h}));
  CHECK(quadratic_rigidity_deviation(s.field(), nodes) <= 10 * h * h);
}

TEST_CASE("scan preconditions") {
  CHECK_THROWS_AS(radial_scan(quartic_2d(), WeightData::zero(2), vec({0, 0}), vec({1, 0})), Error);
  const auto e = make_exp1d(1.0);
  CHECK_THROWS_AS(radial_scan(e, *e.weights(), vec({0.0}), vec({0.0})), Error);
  const auto x = make_xlogx1d(1.0);
  CHECK_THROWS_AS(radial_scan(x, *x.weights(), vec({-2.0}), vec({1.0})), Error);
}
