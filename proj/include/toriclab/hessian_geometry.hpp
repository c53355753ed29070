#pragma once

#include "toriclab/potential.hpp"

#include <optional>

namespace toriclab {

/// Refined curvature expressions valid when u solves the weighted
/// Monge-Ampere equation with the given weights.
struct RefinedCurvature {
  Vector contracted_christoffel;  // Gamma^k_{ik} = 1/2 (u_ij xi^j - v_i)
  Matrix ricci;
  double scalar = 0.0;
  /// Max deviation of the refined quantities from the general ones.
  double discrepancy = 0.0;
};

/// Levi-Civita data of g = D^2u at one point, indices in the affine frame.
///   christoffel(k, i, j) = Gamma^k_{ij}
///   riemann(i, j, k, l)  = Rm_{ijkl}, with Ric_{ik} = g^{jl} Rm_{ijkl}
struct CurvatureBundle {
  Tensor christoffel;
  Tensor riemann;
  Matrix ricci;
  double scalar = 0.0;
  std::optional<RefinedCurvature> refined;
};

Tensor christoffel(const JetEvaluation& jet);
Tensor riemann(const JetEvaluation& jet);
Matrix ricci(const JetEvaluation& jet);
double scalar_curvature(const JetEvaluation& jet);

/// All of the above. With certified weights the refined forms are filled in
/// and their discrepancy against the general forms recorded.
CurvatureBundle curvature(const JetEvaluation& jet, const std::optional<WeightData>& certified = std::nullopt);

/// Symmetric metric samples g_ij on a uniform grid, row-major like GridSpec.
struct MetricSamples {
  GridSpec spec;
  std::vector<Matrix> metric;

  /// Samples D^2u of a field at every node of `spec`.
  static MetricSamples from_field(const PotentialField& field, const GridSpec& spec);
};

/// Curvature of sampled metric data by the textbook Levi-Civita route:
/// Gamma from finite differences of g, then Rm from Gamma and finite
/// differences of Gamma. Uses no Hessian-structure shortcut.
CurvatureBundle curvature_oracle(const MetricSamples& samples, const Vector& point, int accuracy = 2);

/// (nabla^2 f)_ij = f_ij - Gamma^k_ij f_k.
Matrix hessian_of(const JetEvaluation& jet_u, const ScalarJet& f);

struct WeightedLaplacian {
  double laplacian = 0.0;     // Delta f
  double gradient_dot = 0.0;  // <grad phi, grad f>_g
  double value = 0.0;         // Delta f - <grad phi, grad f>_g
  /// g^{pq} f_pq - 1/2 xi^p f_p + 1/2 g^{pq} v_p f_q, the Laplacian obtained
  /// from the first-order identity; present only for certified weights.
  std::optional<double> refined_laplacian;
  std::optional<double> refined_value;
};

/// Weighted Laplacian Delta_phi f for phi = 1/2 (u_p xi^p + v_q x^q).
/// `certified` selects whether the refined path is also evaluated; it throws
/// UncertifiedWeights when `require_refined` is set without certification.
WeightedLaplacian laplace_weighted(const JetEvaluation& jet_u, const ScalarJet& f, const WeightData& weights,
                                   bool certified, bool require_refined = false);

}  // namespace toriclab
