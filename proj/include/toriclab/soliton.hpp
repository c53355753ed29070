#pragma once

#include "toriclab/hessian_geometry.hpp"
#include "toriclab/potential.hpp"

#include <optional>

namespace toriclab {

/// log det(u_ij) - (-v.x + Du.xi + c).
double ma_residual(const JetEvaluation& jet, const WeightData& weights);

/// g^{qp} u_pqi + v_i - u_iq xi^q; vanishes on exact solutions.
Vector differential_identity_residual(const JetEvaluation& jet, const WeightData& weights);

/// phi = 1/2 (u_p xi^p + v_q x^q) with its coordinate derivatives.
struct WeightFunction {
  double phi = 0.0;
  Vector grad;
  Matrix hess;
};
WeightFunction weight_function(const JetEvaluation& jet, const WeightData& weights);

struct BakryEmery {
  Matrix ric_phi;      // Ric + nabla^2 phi
  Matrix ric_phi_rhs;  // 1/4 g^{pq} g^{kl} u_ipk u_jql
};
BakryEmery bakry_emery(const JetEvaluation& jet, const WeightData& weights);

/// sigma = |u_ijk|^2_g, all indices raised with g^{-1}.
double sigma(const JetEvaluation& jet);

/// sigma with its coordinate gradient and Hessian (needs jet order 5).
ScalarJet sigma_jet(const JetEvaluation& jet);

struct BochnerResult {
  double sigma = 0.0;
  double weighted_laplacian = 0.0;          // Delta sigma - <grad phi, grad sigma>_g
  double refined_weighted_laplacian = 0.0;  // via the refined Laplacian
  double slack = 0.0;                       // weighted_laplacian - sigma^2 / (2n)
};
/// Requires certified weights; throws UncertifiedWeights otherwise.
BochnerResult bochner_check(const JetEvaluation& jet, const std::optional<WeightData>& certified);

/// Everything above at one point. Bochner quantities are filled when the jet
/// has order 5 and the weights are certified.
struct SolitonDiagnostics {
  Vector point;
  double ma_residual = 0.0;
  Vector identity_residual;
  double phi = 0.0;
  Vector grad_phi;
  Matrix hess_phi;  // covariant Hessian nabla^2_g phi
  Matrix ric_phi;
  Matrix ric_phi_rhs;
  double min_eig_ric_phi = 0.0;
  double min_eig_ric_phi_rhs = 0.0;
  double sigma = 0.0;
  std::optional<double> scalar_identity_residual;  // s - 1/4 (sigma - |u_ij xi^j - v_i|^2_g)
  std::optional<BochnerResult> bochner;
};

SolitonDiagnostics diagnose(const JetEvaluation& jet, const WeightData& weights, bool certified);

}  // namespace toriclab
