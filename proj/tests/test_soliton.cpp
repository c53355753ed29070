#include <doctest.h>

#include "test_support.hpp"
#include "toriclab/error.hpp"
#include "toriclab/soliton.hpp"

#include <cmath>

using namespace toriclab;
using namespace toriclab::testing;

TEST_CASE("ma residual examples") {
  Matrix a = Vector(vec({2.0, 5.0})).asDiagonal();
  const auto q = make_quadratic(a);
  CHECK(std::abs(ma_residual(evaluate_jet(q, vec({0.3, 0.4}), 2), *q.weights())) < 1e-15);

  const auto e = make_exp1d(1.0);
  const auto jet = evaluate_jet(e, vec({0.7}), 2);
  CHECK(std::abs(ma_residual(jet, *e.weights())) < 1e-15);
  WeightData wrong = *e.weights();
  wrong.c = 0.5;
  CHECK(ma_residual(jet, wrong) == doctest::Approx(-0.5));
}

TEST_CASE("differential identity examples") {
  const auto q = make_quadratic(Matrix::Identity(2, 2));
  CHECK(differential_identity_residual(evaluate_jet(q, vec({0.1, 0.2}), 3), *q.weights()).isZero());
  const auto e = make_exp1d(1.0);
  CHECK(std::abs(differential_identity_residual(evaluate_jet(e, vec({0.0}), 3), *e.weights())[0]) < 1e-15);
  const auto x = make_xlogx1d(1.0);
  CHECK(std::abs(differential_identity_residual(evaluate_jet(x, vec({0.0}), 3), *x.weights())[0]) < 1e-15);
}

TEST_CASE("weight function examples") {
  const auto q = make_quadratic(Matrix::Identity(1, 1));
  CHECK(weight_function(evaluate_jet(q, vec({0.4}), 3), *q.weights()).phi == 0.0);

  const auto e = make_exp1d(1.0);
  const auto we = weight_function(evaluate_jet(e, vec({0.6}), 3), *e.weights());
  CHECK(we.phi == doctest::Approx(0.3));
  CHECK(we.grad[0] == doctest::Approx(0.5));
  CHECK(we.hess(0, 0) == 0.0);

  const auto x = make_xlogx1d(2.0);
  const auto wx = weight_function(evaluate_jet(x, vec({0.5}), 3), *x.weights());
  CHECK(wx.phi == doctest::Approx(-0.5 * std::log(2.5)));
  CHECK(wx.grad[0] == doctest::Approx(-0.5 / 2.5));
}

TEST_CASE("bakry-emery examples") {
  const auto e = make_exp1d(1.0);
  for (double x : {-0.5, 0.0, 1.3}) {
    const auto be = bakry_emery(evaluate_jet(e, vec({x}), 3), *e.weights());
    CHECK(be.ric_phi(0, 0) == doctest::Approx(0.25));
    CHECK(be.ric_phi_rhs(0, 0) == doctest::Approx(0.25));
  }
  const auto p = product_family({make_exp1d(1.0), make_quadratic(Matrix::Identity(1, 1))});
  const auto be = bakry_emery(evaluate_jet(p, vec({0.2, -0.3}), 3), *p.weights());
  CHECK(be.ric_phi(0, 0) == doctest::Approx(0.25));
  CHECK(std::abs(be.ric_phi(0, 1)) < 1e-15);
  CHECK(std::abs(be.ric_phi(1, 1)) < 1e-15);
  CHECK(max_abs(be.ric_phi - be.ric_phi_rhs) < 1e-14);
}

TEST_CASE("sigma examples") {
  CHECK(sigma(evaluate_jet(make_quadratic(Matrix::Identity(2, 2)), vec({0.0, 0.0}), 3)) == 0.0);
  const auto e = make_exp1d(1.0);
  CHECK(sigma(evaluate_jet(e, vec({0.0}), 3)) == doctest::Approx(1.0));
  CHECK(sigma(evaluate_jet(e, vec({0.8}), 3)) == doctest::Approx(std::exp(0.8)));
  CHECK(sigma(evaluate_jet(make_xlogx1d(1.0), vec({0.0}), 3)) == doctest::Approx(1.0));
}

TEST_CASE("sigma jet against finite differences of sigma") {
  // Oracle: sigma evaluated from order-3 jets at neighbouring points.
  const auto u = quartic_3d();
  const Vector p = vec({0.1, -0.2, 0.15});
  const double h = 1e-4;
  const auto s = sigma_jet(evaluate_jet(u, p, 5));
  const int n = 3;
  auto sig = [&](const Vector& x) { return sigma(evaluate_jet(u, x, 3)); };
  CHECK(s.value == doctest::Approx(sig(p)).epsilon(1e-13));
  for (int a = 0; a < n; ++a) {
    const Vector ea = h * Vector::Unit(n, a);
    CHECK(std::abs((sig(p + ea) - sig(p - ea)) / (2 * h) - s.grad[a]) < 1e-7);
    for (int b = 0; b < n; ++b) {
      const Vector eb = h * Vector::Unit(n, b);
      const double fd = (sig(p + ea + eb) - sig(p + ea - eb) - sig(p - ea + eb) + sig(p - ea - eb)) / (4 * h * h);
      CHECK(std::abs(fd - s.hess(a, b)) < 1e-5);
    }
  }
}

TEST_CASE("bochner examples") {
  CHECK(bochner_check(evaluate_jet(make_quadratic(Matrix::Identity(2, 2)), vec({0.0, 0.0}), 5),
                      WeightData::zero(2))
            .slack == 0.0);
  const auto e = make_exp1d(1.0);
  const auto r = bochner_check(evaluate_jet(e, vec({0.0}), 5), e.weights());
  CHECK(r.slack == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.weighted_laplacian == doctest::Approx(1.0));
  const auto x = make_xlogx1d(1.0);
  for (const auto& p : sample_interior(x.domain(), 20, 9)) {
    const auto rx = bochner_check(evaluate_jet(x, p, 5), x.weights());
    CHECK(rx.slack >= 0.0);
    CHECK(rx.weighted_laplacian == doctest::Approx(rx.refined_weighted_laplacian).epsilon(1e-10));
  }
  try {
    bochner_check(evaluate_jet(quartic_2d(), vec({0.0, 0.0}), 5), std::nullopt);
    FAIL("expected throw");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::UncertifiedWeights);
  }
  CHECK_THROWS_AS(bochner_check(evaluate_jet(e, vec({0.0}), 4), e.weights()), Error);
}

TEST_CASE("soliton identities hold on every certified family") {
  for (const auto& u : certified_families()) {
    const int n = u.dimension();
    for (const auto& p : sample_interior(u.domain(), 100, 101)) {
      const auto d = diagnose(evaluate_jet(u, p, 5), *u.weights(), true);
      CAPTURE(u.describe());
      CHECK(std::abs(d.ma_residual) < 1e-10);
      CHECK(d.identity_residual.cwiseAbs().maxCoeff() < 1e-9);
      CHECK(max_abs(d.ric_phi - d.ric_phi_rhs) < 1e-8);
      CHECK(d.min_eig_ric_phi >= -1e-8);
      CHECK(d.min_eig_ric_phi_rhs >= -1e-8);
      CHECK(d.sigma >= 0.0);
      CHECK(std::abs(*d.scalar_identity_residual) < 1e-9);
      REQUIRE(d.bochner);
      CHECK(d.bochner->slack >= -1e-7);
      CHECK(std::abs(d.bochner->weighted_laplacian - d.bochner->refined_weighted_laplacian) <
            1e-9 * (1 + std::abs(d.bochner->weighted_laplacian)));
      (void)n;
    }
  }
}

TEST_CASE("perturbations break the equation at first order") {
  const auto base = product_family({make_exp1d(1.0), make_xlogx1d(1.0)});
  const auto cubic = [](double eps) {
    return make_polynomial(2, {Monomial{eps, {3, 0}}, Monomial{eps, {1, 2}}, Monomial{0.5 * eps, {0, 3}}});
  };
  const Vector p = vec({0.2, 0.3});
  std::vector<double> ma, id;
  for (double eps : {1e-3, 1e-2}) {
    const auto u = make_sum(std::vector<PotentialField>{base, cubic(eps)});
    const auto jet = evaluate_jet(u, p, 3);
    ma.push_back(std::abs(ma_residual(jet, *base.weights())));
    id.push_back(differential_identity_residual(jet, *base.weights()).cwiseAbs().maxCoeff());
  }
  CHECK(ma[0] > 1e-5);
  CHECK(ma[1] / ma[0] == doctest::Approx(10.0).epsilon(0.2));
  CHECK(id[1] / id[0] == doctest::Approx(10.0).epsilon(0.2));
}
