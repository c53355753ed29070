#include <doctest.h>

#include "test_support.hpp"
#include "toriclab/error.hpp"
#include "toriclab/ma_solver.hpp"
#include "toriclab/soliton.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace toriclab;
using namespace toriclab::testing;

namespace {

double max_nodal_error(const MASolution& s, const PotentialField& exact) {
  double err = 0.0;
  const int n = s.spec.dimension();
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  for (std::size_t f = 0; f < s.spec.node_count(); ++f) {
    err = std::max(err, std::abs(s.values[f] - evaluate_jet(exact, s.spec.node(idx), 0).value));
    for (int a = n - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < s.spec.shape[static_cast<std::size_t>(a)]) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
  return err;
}

MASolution solve_exact(const PotentialField& exact, const Vector& lo, const Vector& hi, double h) {
  return solve_dirichlet(MAProblem::from_boundary_field(lo, hi, h, *exact.weights(), exact), 1e-10, 25);
}

PotentialField product_2d() { return product_family({make_exp1d(1.0), make_xlogx1d(1.0)}); }

}  // namespace

TEST_CASE("1D exponential problem") {
  const auto exact = make_exp1d(1.0);
  const double h = 1.0 / 64;
  const auto s = solve_exact(exact, vec({0.0}), vec({1.0}), h);
  CHECK(s.converged);
  CHECK(s.residual_norm <= 1e-10);
  CHECK(s.log.size() <= 25);
  CHECK(s.values.front() == 1.0);
  CHECK(s.values.back() == std::exp(-1.0));
  CHECK(max_nodal_error(s, exact) <= h * h);

  const auto jet = discrete_jet(s, vec({0.5}));
  CHECK(std::abs(jet.hess(0, 0) - std::exp(-0.5)) <= h * h);
}

TEST_CASE("quadratic boundary data is reproduced exactly") {
  const auto exact = make_quadratic(Matrix::Identity(1, 1));
  const auto s = solve_exact(exact, vec({-1.0}), vec({1.0}), 1.0 / 32);
  CHECK(max_nodal_error(s, exact) <= 1e-12);
  CHECK(std::abs(discrete_jet(s, vec({0.25})).third(0, 0, 0)) <= 1e-8);

  Matrix a(2, 2);
  a << 1.5, 0.25, 0.25, 0.8;
  const auto q2 = make_quadratic(a, vec({0.1, -0.2}));
  const auto s2 = solve_exact(q2, vec({0.0, 0.0}), vec({1.0, 1.0}), 1.0 / 16);
  CHECK(max_nodal_error(s2, q2) <= 1e-12);
  CHECK(discrete_jet(s2, vec({0.5, 0.5})).third.max_abs() <= 1e-8);
}

TEST_CASE("2D product problem converges at second order") {
  const auto exact = product_2d();
  std::vector<double> hs{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};
  std::vector<double> errs;
  for (double h : hs) {
    const auto s = solve_exact(exact, vec({0.0, 0.0}), vec({1.0, 1.0}), h);
    CHECK(s.log.size() <= 25);
    errs.push_back(max_nodal_error(s, exact));
    CHECK(errs.back() <= h * h);
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double rate = std::log2(errs[i - 1] / errs[i]);
    CAPTURE(rate);
    CHECK(std::abs(rate - 2.0) <= 0.3);
  }
}

TEST_CASE("solver output satisfies the soliton diagnostics to discretization accuracy") {
  const auto exact = product_2d();
  const double h = 1.0 / 32;
  const auto s = solve_exact(exact, vec({0.0, 0.0}), vec({1.0, 1.0}), h);
  const auto field = s.field();
  const auto jet_mid = discrete_jet(s, vec({0.5, 0.5}));
  CHECK(std::abs(jet_mid.third(0, 0, 1)) <= 10 * h * h);
  CHECK(std::abs(jet_mid.third(0, 1, 1)) <= 10 * h * h);
  for (int i = 3; i <= 29; i += 2)
    for (int j = 3; j <= 29; j += 2) {
      const auto jet = evaluate_jet(field, vec({i * h, j * h}), 3);
      CHECK(std::abs(ma_residual(jet, s.weights)) <= 10 * h * h);
      const auto be = bakry_emery(jet, s.weights);
      CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(be.ric_phi).eigenvalues().minCoeff() >= -10 * h * h);
    }
}

TEST_CASE("default initial guess is convex for the example problems") {
  for (const auto& exact : {make_exp1d(1.0), make_quadratic(Matrix::Identity(1, 1))}) {
    const auto p = MAProblem::from_boundary_field(vec({0.0}), vec({1.0}), 1.0 / 64, *exact.weights(), exact);
    CHECK_NOTHROW(discrete_residual_norm(p, default_initial_guess(p)));
  }
  const auto exact = product_2d();
  for (double h : {1.0 / 16, 1.0 / 128}) {
    const auto p = MAProblem::from_boundary_field(vec({0.0, 0.0}), vec({1.0, 1.0}), h, *exact.weights(), exact);
    CHECK_NOTHROW(discrete_residual_norm(p, default_initial_guess(p)));
  }
}

TEST_CASE("solver errors") {
  const auto exact = make_exp1d(1.0);
  auto p = MAProblem::from_boundary_field(vec({0.0}), vec({1.0}), 1.0 / 16, *exact.weights(), exact);

  SUBCASE("iteration cap") {
    try {
      solve_dirichlet(p, 1e-14, 0);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::MaxIterationsExceeded);
    }
  }
  SUBCASE("non-convex start is repaired") {
    std::vector<double> guess(p.boundary.size());
    for (std::size_t i = 0; i < guess.size(); ++i) guess[i] = -static_cast<double>(i * i) / 256.0;
    p.initial_guess = guess;
    const auto s = solve_dirichlet(p, 1e-10, 50);
    CHECK(s.log.front().shift > 0.0);
    CHECK(s.log.back().shift == 0.0);
    CHECK(max_nodal_error(s, exact) <= 1.0 / 256);
  }
  SUBCASE("boundary data without a convex extension") {
    const auto concave = make_polynomial(2, {Monomial{-1.0, {2, 0}}, Monomial{-1.0, {0, 2}}});
    const auto q = MAProblem::from_boundary_field(vec({0.0, 0.0}), vec({1.0, 1.0}), 1.0 / 8, WeightData::zero(2), concave);
    try {
      solve_dirichlet(q, 1e-10, 50);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK((e.kind() == ErrorKind::NonConvexIterate || e.kind() == ErrorKind::MaxIterationsExceeded));
    }
  }
  SUBCASE("invalid parameters") {
    CHECK_THROWS_AS(solve_dirichlet(p, 0.0, 25), Error);
    p.boundary.pop_back();
    CHECK_THROWS_AS(solve_dirichlet(p, 1e-10, 25), Error);
  }
  SUBCASE("jet near the boundary") {
    const auto s = solve_dirichlet(p, 1e-10, 25);
    try {
      discrete_jet(s, vec({1.0 / 16}));
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InsufficientMargin);
    }
  }
}
