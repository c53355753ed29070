#pragma once

#include "toriclab/potential.hpp"

#include <initializer_list>
#include <vector>

namespace toriclab::testing {

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline PotentialField product_family(std::initializer_list<PotentialField> fs) {
  const std::vector<PotentialField> v(fs);
  return make_product(v);
}

/// Every certified family used across the suites: n in {1, 2, 3}.
inline std::vector<PotentialField> certified_families() {
  Matrix a(2, 2);
  a << 2.0, 0.4, 0.4, 1.0;
  return {
      make_quadratic(a, vec({0.3, -0.1})),
      make_exp1d(1.0),
      make_exp1d(-2.0, 0.3),
      make_xlogx1d(1.0),
      product_family({make_exp1d(1.0), make_xlogx1d(1.0)}),
      product_family({make_exp1d(1.0), make_quadratic(Matrix::Identity(1, 1))}),
      product_family({make_exp1d(0.5, 2.0), make_xlogx1d(2.0), make_quadratic(3.0 * Matrix::Identity(1, 1))}),
      product_family({make_xlogx1d(1.0), make_exp1d(-1.0), make_exp1d(1.5)}),
  };
}

/// Non-product convex quartic on [-1/2, 1/2]^2.
inline PotentialField quartic_2d() {
  return make_polynomial(2, {Monomial{0.5, {2, 0}}, Monomial{0.5, {0, 2}}, Monomial{1.0 / 12, {4, 0}},
                             Monomial{1.0 / 8, {2, 2}}, Monomial{0.1, {1, 3}}});
}

inline PotentialField quartic_3d() {
  return make_polynomial(3, {Monomial{0.5, {2, 0, 0}}, Monomial{0.5, {0, 2, 0}}, Monomial{0.5, {0, 0, 2}},
                             Monomial{1.0 / 12, {4, 0, 0}}, Monomial{1.0 / 8, {2, 2, 0}}, Monomial{0.1, {0, 1, 3}},
                             Monomial{1.0 / 6, {1, 1, 1}}});
}

}  // namespace toriclab::testing
