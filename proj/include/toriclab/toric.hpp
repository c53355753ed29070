#pragma once

#include "toriclab/potential.hpp"

#include <optional>
#include <string>

namespace toriclab {

/// Kähler data on the 2n-dimensional toric model at (x, theta). Coordinates
/// are ordered (x^1..x^n, theta_1..theta_n).
struct ToricMetricSample {
  Vector x;
  Vector theta;
  Matrix G;      // D^2u
  Matrix G_inv;
  Matrix metric;  // blockdiag(G, G^-1)
  /// J on coordinate vectors: column k is J applied to the k-th coordinate
  /// vector. Its transpose acts on coframe coefficients, so J* dtheta_i =
  /// G_ij dx^j and J* dx^i = -G^ij dtheta_j.
  Matrix complex_structure;
  Matrix omega;  // sum dx^i ^ dtheta_i
  Vector moment;  // y = grad u
  double f = 0.0;  // v.x + c
  std::optional<Vector> soliton_residual;  // needs jet order >= 3
};

/// theta defaults to zero; every field is independent of it.
ToricMetricSample assemble_metric(const JetEvaluation& jet, const WeightData& weights,
                                  const std::optional<Vector>& theta = std::nullopt);

/// Coefficients of d(log det G + v.x) - xi^i J* dtheta_i in the basis dx^j.
Vector soliton_residual(const JetEvaluation& jet, const WeightData& weights);

struct RicciFormPotential {
  double log_det = 0.0;
  std::optional<Vector> gradient;  // filled when the jet has order >= 3
};
RicciFormPotential ricci_form_potential(const JetEvaluation& jet);

struct DarbouxVerdict {
  bool pass = false;
  double max_deviation = 0.0;
  double j_squared_deviation = 0.0;  // |J^2 + I|_inf
};
/// Checks that omega is canonical, the torus directions are isotropic,
/// J^2 = -I, J preserves omega and metric = omega J.
DarbouxVerdict darboux_check(const ToricMetricSample& sample, double tol = 1e-12);

struct FlatnessVerdict {
  bool flat = false;
  double variation = 0.0;  // max over samples of |G(p) - G(p_0)|_inf
  std::string verdict;
};
/// Requires certified weights on the field.
FlatnessVerdict flatness_check(const PotentialField& field, const std::vector<Vector>& points, double tol = 1e-12);

}  // namespace toriclab
