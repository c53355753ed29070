#include "toriclab/soliton.hpp"

#include "detail.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace toriclab {

namespace {

constexpr const char* kModule = "soliton_structure";

// Scalar carrying its value, gradient and Hessian in the affine coordinates.
struct Jet2 {
  double v = 0.0;
  Vector g;
  Matrix h;

  static Jet2 zero(int n) { return {0.0, Vector::Zero(n), Matrix::Zero(n, n)}; }

  Jet2& operator+=(const Jet2& o) {
    v += o.v;
    g += o.g;
    h += o.h;
    return *this;
  }
  friend Jet2 operator*(const Jet2& a, const Jet2& b) {
    Jet2 r;
    r.v = a.v * b.v;
    r.g = a.v * b.g + b.v * a.g;
    r.h = a.v * b.h + b.v * a.h + a.g * b.g.transpose() + b.g * a.g.transpose();
    return r;
  }
};

using Jet2Matrix = std::vector<std::vector<Jet2>>;

// Fifth-order data of u turned into Jet2 fields for g_ij and u_ijk.
Jet2Matrix metric_field(const JetEvaluation& jet) {
  const int n = jet.dimension();
  Jet2Matrix g(n, std::vector<Jet2>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Jet2& e = g[i][j];
      e = Jet2::zero(n);
      e.v = jet.hess(i, j);
      for (int a = 0; a < n; ++a) {
        e.g[a] = jet.third(i, j, a);
        for (int b = 0; b < n; ++b) e.h(a, b) = jet.fourth(i, j, a, b);
      }
    }
  return g;
}

Jet2Matrix inverse_field(const JetEvaluation& jet, const Jet2Matrix& g) {
  const int n = jet.dimension();
  const Matrix& gi = jet.inverse_hess;
  // d_a G^{-1} = -G^{-1} G_a G^{-1};
  // d_ab G^{-1} = G^{-1} G_a G^{-1} G_b G^{-1} + G^{-1} G_b G^{-1} G_a G^{-1} - G^{-1} G_ab G^{-1}.
  std::vector<Matrix> ga(static_cast<std::size_t>(n), Matrix(n, n));
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) ga[a](i, j) = g[i][j].g[a];
  std::vector<Matrix> dinv(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) dinv[a] = -gi * ga[a] * gi;
  Jet2Matrix out(n, std::vector<Jet2>(n, Jet2::zero(n)));
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      Matrix gab(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) gab(i, j) = g[i][j].h(a, b);
      const Matrix d2 = gi * ga[a] * gi * ga[b] * gi + gi * ga[b] * gi * ga[a] * gi - gi * gab * gi;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          out[i][j].h(a, b) = d2(i, j);
          out[i][j].h(b, a) = d2(i, j);
        }
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      out[i][j].v = gi(i, j);
      for (int a = 0; a < n; ++a) out[i][j].g[a] = dinv[a](i, j);
    }
  return out;
}

std::vector<Jet2> cubic_field(const JetEvaluation& jet) {
  const int n = jet.dimension();
  std::vector<Jet2> t(Tensor::ipow(n, 3), Jet2::zero(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Jet2& e = t[static_cast<std::size_t>((i * n + j) * n + k)];
        e.v = jet.third(i, j, k);
        for (int a = 0; a < n; ++a) {
          e.g[a] = jet.fourth(i, j, k, a);
          for (int b = 0; b < n; ++b) e.h(a, b) = jet.fifth(i, j, k, a, b);
        }
      }
  return t;
}

double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

}  // namespace

double ma_residual(const JetEvaluation& jet, const WeightData& weights) {
  detail::require_order(jet, 2, kModule, "ma_residual");
  detail::require_weights(jet, weights, kModule, "ma_residual");
  return jet.log_det - (-weights.v.dot(jet.point) + jet.grad.dot(weights.xi) + weights.c);
}

Vector differential_identity_residual(const JetEvaluation& jet, const WeightData& weights) {
  detail::require_order(jet, 3, kModule, "differential_identity_residual");
  detail::require_weights(jet, weights, kModule, "differential_identity_residual");
  const int n = jet.dimension();
  Vector r = weights.v - jet.hess * weights.xi;
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) r[i] += jet.inverse_hess(q, p) * jet.third(p, q, i);
  return r;
}

WeightFunction weight_function(const JetEvaluation& jet, const WeightData& weights) {
  detail::require_order(jet, 3, kModule, "weight_function");
  detail::require_weights(jet, weights, kModule, "weight_function");
  const int n = jet.dimension();
  WeightFunction w;
  w.phi = 0.5 * (jet.grad.dot(weights.xi) + weights.v.dot(jet.point));
  w.grad = 0.5 * (jet.hess * weights.xi + weights.v);
  w.hess = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int p = 0; p < n; ++p) w.hess(i, j) += 0.5 * jet.third(i, j, p) * weights.xi[p];
  return w;
}

BakryEmery bakry_emery(const JetEvaluation& jet, const WeightData& weights) {
  detail::require_order(jet, 3, kModule, "bakry_emery");
  const int n = jet.dimension();
  const WeightFunction w = weight_function(jet, weights);
  BakryEmery be;
  be.ric_phi = ricci(jet) + hessian_of(jet, ScalarJet{w.phi, w.grad, w.hess});
  // rhs_ij = 1/4 sum T_{ipk} T_{jql} g^{pq} g^{kl}: contract through M_i = T_i.. as matrices.
  const Matrix& gi = jet.inverse_hess;
  std::vector<Matrix> slices(static_cast<std::size_t>(n), Matrix(n, n));
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < n; ++p)
      for (int k = 0; k < n; ++k) slices[i](p, k) = jet.third(i, p, k);
  be.ric_phi_rhs.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      be.ric_phi_rhs(i, j) = 0.25 * (gi * slices[i] * gi).cwiseProduct(slices[j]).sum();
  return be;
}

double sigma(const JetEvaluation& jet) {
  detail::require_order(jet, 3, kModule, "sigma");
  const int n = jet.dimension();
  const Matrix& gi = jet.inverse_hess;
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int p = 0; p < n; ++p)
          for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r) s += gi(i, p) * gi(j, q) * gi(k, r) * jet.third(i, j, k) * jet.third(p, q, r);
  return s;
}

ScalarJet sigma_jet(const JetEvaluation& jet) {
  detail::require_order(jet, 5, kModule, "sigma_jet");
  const int n = jet.dimension();
  const auto g = metric_field(jet);
  const auto gi = inverse_field(jet, g);
  const auto t = cubic_field(jet);
  auto at = [n](int i, int j, int k) { return static_cast<std::size_t>((i * n + j) * n + k); };

  // Raise the three indices of T one at a time.
  std::vector<Jet2> cur = t;
  for (int slot = 0; slot < 3; ++slot) {
    std::vector<Jet2> next(cur.size(), Jet2::zero(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          Jet2 acc = Jet2::zero(n);
          for (int m = 0; m < n; ++m) {
            if (slot == 0) acc += gi[i][m] * cur[at(m, j, k)];
            else if (slot == 1) acc += gi[j][m] * cur[at(i, m, k)];
            else acc += gi[k][m] * cur[at(i, j, m)];
          }
          next[at(i, j, k)] = std::move(acc);
        }
    cur = std::move(next);
  }
  Jet2 s = Jet2::zero(n);
  for (std::size_t f = 0; f < t.size(); ++f) s += cur[f] * t[f];
  return ScalarJet{s.v, s.g, 0.5 * (s.h + s.h.transpose())};
}

BochnerResult bochner_check(const JetEvaluation& jet, const std::optional<WeightData>& certified) {
  detail::require_order(jet, 5, kModule, "bochner_check");
  if (!certified)
    throw Error(ErrorKind::UncertifiedWeights, kModule, "bochner_check",
                "the Bochner inequality holds only for solutions of the weighted Monge-Ampere equation");
  const ScalarJet s = sigma_jet(jet);
  const WeightedLaplacian lap = laplace_weighted(jet, s, *certified, true, true);
  BochnerResult r;
  r.sigma = s.value;
  r.weighted_laplacian = lap.value;
  r.refined_weighted_laplacian = *lap.refined_value;
  r.slack = lap.value - s.value * s.value / (2.0 * jet.dimension());
  return r;
}

SolitonDiagnostics diagnose(const JetEvaluation& jet, const WeightData& weights, bool certified) {
  detail::require_order(jet, 3, kModule, "diagnose");
  SolitonDiagnostics d;
  d.point = jet.point;
  d.ma_residual = ma_residual(jet, weights);
  d.identity_residual = differential_identity_residual(jet, weights);
  const WeightFunction w = weight_function(jet, weights);
  d.phi = w.phi;
  d.grad_phi = w.grad;
  d.hess_phi = hessian_of(jet, ScalarJet{w.phi, w.grad, w.hess});
  const BakryEmery be = bakry_emery(jet, weights);
  d.ric_phi = be.ric_phi;
  d.ric_phi_rhs = be.ric_phi_rhs;
  d.min_eig_ric_phi = min_eigenvalue(be.ric_phi);
  d.min_eig_ric_phi_rhs = min_eigenvalue(be.ric_phi_rhs);
  d.sigma = sigma(jet);
  if (certified) {
    const CurvatureBundle cb = curvature(jet, weights);
    d.scalar_identity_residual = cb.scalar - cb.refined->scalar;
    if (jet.order >= 5) d.bochner = bochner_check(jet, weights);
  }
  return d;
}

}  // namespace toriclab
