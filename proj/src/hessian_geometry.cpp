#include "toriclab/hessian_geometry.hpp"

#include "detail.hpp"

#include <algorithm>
#include <cmath>

namespace toriclab {

namespace {

constexpr const char* kModule = "hessian_geometry";

}  // namespace

Tensor christoffel(const JetEvaluation& jet) {
  detail::require_order(jet, 3, kModule, "christoffel");
  const int n = jet.dimension();
  const Matrix& gi = jet.inverse_hess;
  Tensor gamma(3, n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += gi(l, k) * jet.third(i, j, l);
        gamma(k, i, j) = gamma(k, j, i) = 0.5 * s;
      }
  return gamma;
}

Tensor riemann(const JetEvaluation& jet) {
  detail::require_order(jet, 3, kModule, "riemann");
  const int n = jet.dimension();
  const Matrix& gi = jet.inverse_hess;
  const Tensor& t = jet.third;
  Tensor rm(4, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double s = 0.0;
          for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q) s += gi(p, q) * (t(i, l, p) * t(j, k, q) - t(j, l, p) * t(i, k, q));
          rm(i, j, k, l) = 0.25 * s;
        }
  return rm;
}

namespace {

Matrix ricci_from(const Tensor& rm, const Matrix& gi) {
  const int n = rm.dim();
  Matrix ric = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) ric(i, k) += gi(j, l) * rm(i, j, k, l);
  return ric;
}

// sigma = |u_ijk|^2_g with every index raised by g^{-1}.
double cubic_norm(const JetEvaluation& jet) {
  const int n = jet.dimension();
  const Matrix& gi = jet.inverse_hess;
  const Tensor& t = jet.third;
  // Raise one index at a time: t1(p,j,k) = g^{pi} t(i,j,k), etc.
  Tensor raised(3, n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) s += gi(p, i) * gi(q, j) * gi(r, k) * t(i, j, k);
        raised(p, q, r) = s;
      }
  double total = 0.0;
  for (std::size_t f = 0; f < raised.size(); ++f) total += raised.data()[f] * t.data()[f];
  return total;
}

Vector trace_of_third(const JetEvaluation& jet) {
  const int n = jet.dimension();
  Vector tr = Vector::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int m = 0; m < n; ++m)
      for (int k = 0; k < n; ++k) tr[i] += jet.inverse_hess(m, k) * jet.third(i, m, k);
  return tr;
}

}  // namespace

Matrix ricci(const JetEvaluation& jet) {
  detail::require_order(jet, 3, kModule, "ricci");
  return ricci_from(riemann(jet), jet.inverse_hess);
}

double scalar_curvature(const JetEvaluation& jet) {
  detail::require_order(jet, 3, kModule, "scalar");
  const Vector tr = trace_of_third(jet);
  return 0.25 * (cubic_norm(jet) - tr.dot(jet.inverse_hess * tr));
}

CurvatureBundle curvature(const JetEvaluation& jet, const std::optional<WeightData>& certified) {
  detail::require_order(jet, 3, kModule, "curvature");
  CurvatureBundle b;
  b.christoffel = christoffel(jet);
  b.riemann = riemann(jet);
  b.ricci = ricci_from(b.riemann, jet.inverse_hess);
  b.scalar = scalar_curvature(jet);
  if (!certified) return b;

  const WeightData& w = *certified;
  detail::require_weights(jet, w, kModule, "curvature");
  const int n = jet.dimension();
  const Matrix& gi = jet.inverse_hess;
  const Tensor& t = jet.third;
  RefinedCurvature r;
  const Vector lin = jet.hess * w.xi - w.v;
  r.contracted_christoffel = 0.5 * lin;
  r.ricci = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double quartic = 0.0;
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
          for (int m = 0; m < n; ++m)
            for (int nn = 0; nn < n; ++nn) quartic += gi(p, q) * gi(m, nn) * t(i, p, m) * t(j, q, nn);
      double lin_term = 0.0;
      for (int p = 0; p < n; ++p) {
        lin_term += t(i, j, p) * w.xi[p];
        for (int q = 0; q < n; ++q) lin_term -= gi(p, q) * t(i, j, q) * w.v[p];
      }
      r.ricci(i, j) = 0.25 * quartic - 0.25 * lin_term;
    }
  r.scalar = 0.25 * (cubic_norm(jet) - lin.dot(gi * lin));

  Vector contracted = Vector::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) contracted[i] += b.christoffel(k, i, k);
  r.discrepancy = std::max({(contracted - r.contracted_christoffel).cwiseAbs().maxCoeff(),
                            max_abs(b.ricci - r.ricci), std::abs(b.scalar - r.scalar)});
  b.refined = std::move(r);
  return b;
}

// ---------------------------------------------------------------------------
// Oracle

MetricSamples MetricSamples::from_field(const PotentialField& field, const GridSpec& spec) {
  spec.validate();
  MetricSamples s;
  s.spec = spec;
  s.metric.resize(spec.node_count());
  std::vector<int> idx(static_cast<std::size_t>(spec.dimension()), 0);
  for (std::size_t f = 0; f < s.metric.size(); ++f) {
    s.metric[f] = evaluate_jet(field, spec.node(idx), 2).hess;
    for (int a = spec.dimension() - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < spec.shape[static_cast<std::size_t>(a)]) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
  return s;
}

namespace {

struct OracleGrid {
  const MetricSamples& s;
  const std::vector<double>& stencil;
  int radius;

  const Matrix& g(const std::vector<int>& idx) const { return s.metric[s.spec.flat_index(idx)]; }

  // dg[c](a, b) = d_c g_ab at the node.
  std::vector<Matrix> metric_derivatives(const std::vector<int>& idx) const {
    const int n = s.spec.dimension();
    std::vector<Matrix> dg(static_cast<std::size_t>(n), Matrix::Zero(n, n));
    std::vector<int> nb = idx;
    for (int c = 0; c < n; ++c) {
      for (int o = -radius; o <= radius; ++o) {
        const double w = stencil[static_cast<std::size_t>(o + radius)];
        if (w == 0.0) continue;
        nb[static_cast<std::size_t>(c)] = idx[static_cast<std::size_t>(c)] + o;
        dg[static_cast<std::size_t>(c)] += w * g(nb);
      }
      nb[static_cast<std::size_t>(c)] = idx[static_cast<std::size_t>(c)];
      dg[static_cast<std::size_t>(c)] /= s.spec.spacing[c];
    }
    return dg;
  }

  Tensor christoffel_at(const std::vector<int>& idx) const {
    const int n = s.spec.dimension();
    const auto dg = metric_derivatives(idx);
    const Matrix gi = g(idx).inverse();
    Tensor gamma(3, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) {
          double sum = 0.0;
          for (int d = 0; d < n; ++d)
            sum += gi(a, d) * (dg[static_cast<std::size_t>(b)](d, c) + dg[static_cast<std::size_t>(c)](d, b) -
                               dg[static_cast<std::size_t>(d)](b, c));
          gamma(a, b, c) = 0.5 * sum;
        }
    return gamma;
  }
};

}  // namespace

CurvatureBundle curvature_oracle(const MetricSamples& samples, const Vector& point, int accuracy) {
  const GridSpec& spec = samples.spec;
  spec.validate();
  if (samples.metric.size() != spec.node_count())
    throw Error(ErrorKind::InvalidParams, kModule, "curvature_oracle", "metric sample count does not match the grid");
  const auto located = spec.locate(point);
  if (!located) throw Error(ErrorKind::PointOffGrid, kModule, "curvature_oracle", "point is not a grid node");
  const std::vector<int>& idx = *located;
  const int n = spec.dimension();
  const int r = stencil_radius(1, accuracy);
  for (int a = 0; a < n; ++a) {
    const int i = idx[static_cast<std::size_t>(a)];
    if (i - 2 * r < 0 || i + 2 * r > spec.shape[static_cast<std::size_t>(a)] - 1)
      throw Error(ErrorKind::InsufficientMargin, kModule, "curvature_oracle",
                  "need " + std::to_string(2 * r) + " nodes of margin on every axis");
  }

  OracleGrid grid{samples, central_stencil(1, accuracy), r};
  const Tensor gamma = grid.christoffel_at(idx);

  // dgamma(e, a, b, c) = d_e Gamma^a_bc by differencing Gamma itself.
  Tensor dgamma(4, n);
  std::vector<int> nb = idx;
  for (int e = 0; e < n; ++e) {
    for (int o = -r; o <= r; ++o) {
      const double w = grid.stencil[static_cast<std::size_t>(o + r)];
      if (w == 0.0) continue;
      nb[static_cast<std::size_t>(e)] = idx[static_cast<std::size_t>(e)] + o;
      const Tensor gnb = grid.christoffel_at(nb);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c) dgamma(e, a, b, c) += w * gnb(a, b, c) / spec.spacing[e];
    }
    nb[static_cast<std::size_t>(e)] = idx[static_cast<std::size_t>(e)];
  }

  // R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb
  Tensor up(4, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double v = dgamma(c, a, d, b) - dgamma(d, a, c, b);
          for (int e = 0; e < n; ++e) v += gamma(a, c, e) * gamma(e, d, b) - gamma(a, d, e) * gamma(e, c, b);
          up(a, b, c, d) = v;
        }

  const Matrix& g = grid.g(idx);
  const Matrix gi = g.inverse();
  CurvatureBundle out;
  out.christoffel = gamma;
  out.riemann = Tensor(4, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double v = 0.0;
          for (int e = 0; e < n; ++e) v += g(a, e) * up(e, b, c, d);
          out.riemann(a, b, c, d) = v;
        }
  out.ricci = Matrix::Zero(n, n);
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d)
      for (int a = 0; a < n; ++a) out.ricci(b, d) += up(a, b, a, d);
  out.scalar = (gi.cwiseProduct(out.ricci)).sum();
  return out;
}

// ---------------------------------------------------------------------------
// Hessian and Laplacian

Matrix hessian_of(const JetEvaluation& jet_u, const ScalarJet& f) {
  detail::require_order(jet_u, 3, kModule, "hessian_of");
  const int n = jet_u.dimension();
  if (f.grad.size() != n || f.hess.rows() != n || f.hess.cols() != n)
    throw Error(ErrorKind::InvalidParams, kModule, "hessian_of", "scalar jet dimension mismatch");
  const Tensor gamma = christoffel(jet_u);
  Matrix h = f.hess;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) h(i, j) -= gamma(k, i, j) * f.grad[k];
  return h;
}

WeightedLaplacian laplace_weighted(const JetEvaluation& jet_u, const ScalarJet& f, const WeightData& weights,
                                   bool certified, bool require_refined) {
  detail::require_order(jet_u, 3, kModule, "laplace_weighted");
  detail::require_weights(jet_u, weights, kModule, "laplace_weighted");
  if (require_refined && !certified)
    throw Error(ErrorKind::UncertifiedWeights, kModule, "laplace_weighted",
                "the refined Laplacian holds only for solutions of the weighted Monge-Ampere equation");
  const Matrix& gi = jet_u.inverse_hess;
  WeightedLaplacian out;
  out.laplacian = gi.cwiseProduct(hessian_of(jet_u, f)).sum();
  const Vector dphi = 0.5 * (jet_u.hess * weights.xi + weights.v);
  out.gradient_dot = dphi.dot(gi * f.grad);
  out.value = out.laplacian - out.gradient_dot;
  if (certified) {
    const double trace = gi.cwiseProduct(f.hess).sum();
    const double refined = trace - 0.5 * weights.xi.dot(f.grad) + 0.5 * weights.v.dot(gi * f.grad);
    out.refined_laplacian = refined;
    out.refined_value = refined - out.gradient_dot;
  }
  return out;
}

}  // namespace toriclab
