#include "toriclab/toric.hpp"

#include "detail.hpp"
#include "toriclab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace toriclab {

namespace {

constexpr const char* kModule = "toric";

Matrix canonical_omega(int n) {
  Matrix w = Matrix::Zero(2 * n, 2 * n);
  w.topRightCorner(n, n).setIdentity();
  w.bottomLeftCorner(n, n) = -Matrix::Identity(n, n);
  return w;
}

}  // namespace

ToricMetricSample assemble_metric(const JetEvaluation& jet, const WeightData& weights,
                                  const std::optional<Vector>& theta) {
  detail::require_order(jet, 2, kModule, "assemble_metric");
  detail::require_weights(jet, weights, kModule, "assemble_metric");
  const int n = jet.dimension();
  if (theta && theta->size() != n)
    throw Error(ErrorKind::InvalidParams, kModule, "assemble_metric", "theta must have length n");
  ToricMetricSample s;
  s.x = jet.point;
  s.theta = theta ? *theta : Vector::Zero(n);
  s.G = jet.hess;
  s.G_inv = 0.5 * (jet.inverse_hess + jet.inverse_hess.transpose());
  s.metric = Matrix::Zero(2 * n, 2 * n);
  s.metric.topLeftCorner(n, n) = s.G;
  s.metric.bottomRightCorner(n, n) = s.G_inv;
  s.complex_structure = Matrix::Zero(2 * n, 2 * n);
  s.complex_structure.topRightCorner(n, n) = -s.G_inv;
  s.complex_structure.bottomLeftCorner(n, n) = s.G;
  s.omega = canonical_omega(n);
  s.moment = jet.grad;
  s.f = weights.v.dot(jet.point) + weights.c;
  if (jet.order >= 3) s.soliton_residual = soliton_residual(jet, weights);
  return s;
}

RicciFormPotential ricci_form_potential(const JetEvaluation& jet) {
  detail::require_order(jet, 2, kModule, "ricci_form_potential");
  RicciFormPotential r;
  r.log_det = jet.log_det;
  if (jet.order >= 3) {
    const int n = jet.dimension();
    Vector g = Vector::Zero(n);
    for (int j = 0; j < n; ++j)
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) g[j] += jet.inverse_hess(p, q) * jet.third(p, q, j);
    r.gradient = g;
  }
  return r;
}

Vector soliton_residual(const JetEvaluation& jet, const WeightData& weights) {
  detail::require_order(jet, 3, kModule, "soliton_residual");
  detail::require_weights(jet, weights, kModule, "soliton_residual");
  const int n = jet.dimension();
  // J* dtheta_i is column n+i of J^T; only its dx part is nonzero.
  Matrix j = Matrix::Zero(2 * n, 2 * n);
  j.topRightCorner(n, n) = -jet.inverse_hess;
  j.bottomLeftCorner(n, n) = jet.hess;
  const Matrix coframe = j.transpose();
  Vector r = *ricci_form_potential(jet).gradient + weights.v;
  for (int i = 0; i < n; ++i) r -= weights.xi[i] * coframe.block(0, n + i, n, 1);
  return r;
}

DarbouxVerdict darboux_check(const ToricMetricSample& s, double tol) {
  const int n = static_cast<int>(s.x.size());
  DarbouxVerdict v;
  const Matrix id = Matrix::Identity(2 * n, 2 * n);
  const Matrix& j = s.complex_structure;
  const Matrix& w = s.omega;
  if (j.rows() != 2 * n || j.cols() != 2 * n || w.rows() != 2 * n || w.cols() != 2 * n || s.metric.rows() != 2 * n ||
      s.metric.cols() != 2 * n) {
    v.max_deviation = std::numeric_limits<double>::infinity();
    return v;
  }
  v.j_squared_deviation = max_abs(j * j + id);
  const double scale = 1.0 + max_abs(s.metric);
  v.max_deviation = std::max({max_abs(w - canonical_omega(n)), max_abs(w.bottomRightCorner(n, n)),
                              max_abs(j.transpose() * w * j - w) / scale, max_abs(s.metric - w * j) / scale,
                              v.j_squared_deviation / scale});
  v.pass = v.max_deviation <= tol;
  return v;
}

FlatnessVerdict flatness_check(const PotentialField& field, const std::vector<Vector>& points, double tol) {
  if (!field.weights())
    throw Error(ErrorKind::UncertifiedWeights, kModule, "flatness_check",
                "field " + field.describe() + " carries no certified weights");
  if (points.empty()) throw Error(ErrorKind::InvalidParams, kModule, "flatness_check", "no sample points");
  FlatnessVerdict v;
  const Matrix g0 = evaluate_jet(field, points.front(), 2).hess;
  for (const auto& p : points) v.variation = std::max(v.variation, max_abs(evaluate_jet(field, p, 2).hess - g0));
  v.flat = v.variation <= tol;
  if (v.flat) {
    v.verdict = "flat (C*)^" + std::to_string(field.dimension()) + " model";
  } else {
    std::ostringstream os;
    os.precision(6);
    os << "non-constant Hessian, variation " << v.variation;
    v.verdict = os.str();
  }
  return v;
}

}  // namespace toriclab
