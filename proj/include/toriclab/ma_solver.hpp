#pragma once

#include "toriclab/potential.hpp"

#include <optional>
#include <vector>

namespace toriclab {

/// Dirichlet problem for log det D^2u = -v.x + Du.xi + c on a box.
struct MAProblem {
  Vector lower;
  Vector upper;
  double h = 0.0;
  WeightData weights;
  /// Values on every node of grid(); only boundary nodes are read.
  std::vector<double> boundary;
  /// Optional full-grid starting point; boundary entries are overwritten.
  std::optional<std::vector<double>> initial_guess;

  GridSpec grid() const { return GridSpec::covering(lower, upper, h); }

  /// Takes boundary data from a potential sampled on the boundary nodes.
  static MAProblem from_boundary_field(const Vector& lower, const Vector& upper, double h, WeightData weights,
                                       const PotentialField& boundary_field);
};

struct NewtonStep {
  int iteration = 0;
  double residual = 0.0;  // max-norm before the step
  double damping = 1.0;   // accepted step length
  double shift = 0.0;     // Hessian shift in force during the step
};

struct MASolution {
  GridSpec spec;
  std::vector<double> values;
  WeightData weights;
  double residual_norm = 0.0;
  std::vector<NewtonStep> log;
  bool converged = false;

  /// The solved grid as a grid potential carrying the problem weights.
  PotentialField field(int stencil_order = 2) const;
};

/// Damped Newton iteration on F(u) = log det D_h^2 u + v.x - D_h u.xi - c at
/// the interior nodes, central differences throughout. Steps are halved until
/// the max-norm residual decreases and every nodal Hessian stays positive
/// definite (floor 2^-20). A start that is not nodewise convex is admitted
/// through a decreasing Hessian shift, which must reach zero for success.
MASolution solve_dirichlet(const MAProblem& problem, double tol = 1e-10, int max_iter = 50);

/// Max-norm of the discrete residual F at interior nodes. Throws
/// NonConvexIterate when a nodal Hessian is not positive definite.
double discrete_residual_norm(const MAProblem& problem, const std::vector<double>& values);

/// Default starting point: solution of the discrete Poisson problem
/// Delta_h u = n exp((-v.x + c)/n) + q with the problem's boundary data, where
/// q (n >= 2) is the multilinear interpolant that matches the Laplacian the
/// boundary data implies at each box corner.
std::vector<double> default_initial_guess(const MAProblem& problem);

/// Jet of the solved grid at an interior node.
JetEvaluation discrete_jet(const MASolution& solution, const Vector& point, int order = 3);

}  // namespace toriclab
