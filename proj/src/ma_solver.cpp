#include "toriclab/ma_solver.hpp"

#include "toriclab/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <limits>
#include <sstream>

namespace toriclab {

namespace {

constexpr const char* kModule = "ma_solver";
constexpr double kDampingFloor = 1.0 / (1 << 20);

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Interior-node bookkeeping for one problem.
class Discretization {
 public:
  explicit Discretization(const MAProblem& p) : p_(p), spec_(p.grid()) {
    const int n = spec_.dimension();
    strides_.assign(static_cast<std::size_t>(n), 1);
    for (int a = n - 2; a >= 0; --a)
      strides_[static_cast<std::size_t>(a)] =
          strides_[static_cast<std::size_t>(a + 1)] * static_cast<long>(spec_.shape[static_cast<std::size_t>(a + 1)]);
    unknown_of_.assign(spec_.node_count(), -1);
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    for (std::size_t f = 0; f < spec_.node_count(); ++f) {
      bool interior = true;
      for (int a = 0; a < n; ++a) {
        const int i = idx[static_cast<std::size_t>(a)];
        interior = interior && i > 0 && i < spec_.shape[static_cast<std::size_t>(a)] - 1;
      }
      if (interior) {
        unknown_of_[f] = static_cast<int>(interior_.size());
        interior_.push_back(f);
        coords_.push_back(spec_.node(idx));
      }
      for (int a = n - 1; a >= 0; --a) {
        if (++idx[static_cast<std::size_t>(a)] < spec_.shape[static_cast<std::size_t>(a)]) break;
        idx[static_cast<std::size_t>(a)] = 0;
      }
    }
  }

  const GridSpec& spec() const { return spec_; }
  std::size_t unknowns() const { return interior_.size(); }
  std::size_t node_of(std::size_t k) const { return interior_[k]; }
  int unknown_of(std::size_t node) const { return unknown_of_[node]; }
  long stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }

  struct NodeState {
    Matrix hess;
    Vector grad;
    double residual = 0.0;
    Matrix hess_inv;
    double min_eig = 0.0;  // of the unshifted Hessian
    bool convex = true;    // shifted Hessian positive definite
  };

  NodeState node_state(const std::vector<double>& u, std::size_t k, bool need_inverse, double shift) const {
    const int n = spec_.dimension();
    const double h = p_.h;
    const std::size_t f = interior_[k];
    auto at = [&](long offset) { return u[static_cast<std::size_t>(static_cast<long>(f) + offset)]; };
    NodeState s;
    s.hess.resize(n, n);
    s.grad.resize(n);
    for (int a = 0; a < n; ++a) {
      const long sa = stride(a);
      s.hess(a, a) = (at(sa) - 2.0 * at(0) + at(-sa)) / (h * h);
      s.grad[a] = (at(sa) - at(-sa)) / (2.0 * h);
      for (int b = a + 1; b < n; ++b) {
        const long sb = stride(b);
        s.hess(a, b) = s.hess(b, a) = (at(sa + sb) - at(sa - sb) - at(-sa + sb) + at(-sa - sb)) / (4.0 * h * h);
      }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s.hess);
    s.min_eig = eig.eigenvalues().minCoeff();
    const Vector lam = eig.eigenvalues().array() + shift;
    if (!(lam.minCoeff() > kPdTolerance)) {
      s.convex = false;
      return s;
    }
    const WeightData& w = p_.weights;
    s.residual = lam.array().log().sum() + w.v.dot(coords_[k]) - s.grad.dot(w.xi) - w.c;
    if (need_inverse) s.hess_inv = eig.eigenvectors() * lam.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    return s;
  }

  struct Residual {
    Vector values;
    double min_eig = 0.0;  // smallest unshifted nodal eigenvalue
  };

  // Residual of the shifted equation; nullopt if any shifted nodal Hessian is
  // not positive definite.
  std::optional<Residual> residual(const std::vector<double>& u, double shift = 0.0) const {
    Residual r{Vector(static_cast<Eigen::Index>(unknowns())), std::numeric_limits<double>::infinity()};
    for (std::size_t k = 0; k < unknowns(); ++k) {
      const auto s = node_state(u, k, false, shift);
      if (!s.convex) return std::nullopt;
      r.values[static_cast<Eigen::Index>(k)] = s.residual;
      r.min_eig = std::min(r.min_eig, s.min_eig);
    }
    return r;
  }

  double min_eigenvalue(const std::vector<double>& u) const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < unknowns(); ++k) m = std::min(m, node_state(u, k, false, 0.0).min_eig);
    return m;
  }

  SparseMatrix jacobian(const std::vector<double>& u, double shift) const {
    const int n = spec_.dimension();
    const double h = p_.h;
    std::vector<Triplet> trips;
    trips.reserve(unknowns() * static_cast<std::size_t>(1 + 2 * n + 2 * n * (n - 1)));
    for (std::size_t k = 0; k < unknowns(); ++k) {
      const auto s = node_state(u, k, true, shift);
      const long f = static_cast<long>(interior_[k]);
      auto add = [&](long offset, double w) {
        const int col = unknown_of_[static_cast<std::size_t>(f + offset)];
        if (col >= 0) trips.emplace_back(static_cast<int>(k), col, w);
      };
      for (int a = 0; a < n; ++a) {
        const long sa = stride(a);
        const double d = s.hess_inv(a, a) / (h * h);
        const double g = p_.weights.xi[a] / (2.0 * h);
        add(sa, d - g);
        add(-sa, d + g);
        add(0, -2.0 * d);
        for (int b = a + 1; b < n; ++b) {
          const long sb = stride(b);
          const double m = 2.0 * s.hess_inv(a, b) / (4.0 * h * h);
          add(sa + sb, m);
          add(sa - sb, -m);
          add(-sa + sb, -m);
          add(-sa - sb, m);
        }
      }
    }
    SparseMatrix j(static_cast<Eigen::Index>(unknowns()), static_cast<Eigen::Index>(unknowns()));
    j.setFromTriplets(trips.begin(), trips.end());
    return j;
  }

 private:
  const MAProblem& p_;
  GridSpec spec_;
  std::vector<long> strides_;
  std::vector<int> unknown_of_;
  std::vector<std::size_t> interior_;
  std::vector<Vector> coords_;
};

void validate(const MAProblem& p, const char* op) {
  if (p.lower.size() < 1 || p.lower.size() != p.upper.size())
    throw Error(ErrorKind::InvalidParams, kModule, op, "box bounds must share a dimension >= 1");
  if (!p.lower.allFinite() || !p.upper.allFinite())
    throw Error(ErrorKind::InvalidParams, kModule, op, "Dirichlet problems need a bounded box");
  if (!(p.h > 0.0)) throw Error(ErrorKind::InvalidParams, kModule, op, "h must be > 0");
  if (p.weights.v.size() != p.lower.size() || p.weights.xi.size() != p.lower.size())
    throw Error(ErrorKind::InvalidParams, kModule, op, "weight lengths must equal the dimension");
  const GridSpec spec = p.grid();
  if (p.boundary.size() != spec.node_count())
    throw Error(ErrorKind::InvalidParams, kModule, op, "boundary array must cover every grid node");
  if (p.initial_guess && p.initial_guess->size() != spec.node_count())
    throw Error(ErrorKind::InvalidParams, kModule, op, "initial guess must cover every grid node");
  for (double b : p.boundary)
    if (!std::isfinite(b)) throw Error(ErrorKind::InvalidParams, kModule, op, "boundary data must be finite");
}

double infinity_norm(const SparseMatrix& m) {
  Vector rows = Vector::Zero(m.rows());
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) rows[it.row()] += std::abs(it.value());
  return rows.size() ? rows.maxCoeff() : 0.0;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

MAProblem MAProblem::from_boundary_field(const Vector& lower, const Vector& upper, double h, WeightData weights,
                                         const PotentialField& boundary_field) {
  MAProblem p;
  p.lower = lower;
  p.upper = upper;
  p.h = h;
  p.weights = std::move(weights);
  const GridSpec spec = p.grid();
  p.boundary.assign(spec.node_count(), 0.0);
  const int n = spec.dimension();
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  for (std::size_t f = 0; f < spec.node_count(); ++f) {
    bool on_boundary = false;
    for (int a = 0; a < n; ++a) {
      const int i = idx[static_cast<std::size_t>(a)];
      on_boundary = on_boundary || i == 0 || i == spec.shape[static_cast<std::size_t>(a)] - 1;
    }
    if (on_boundary) p.boundary[f] = evaluate_jet(boundary_field, spec.node(idx), 0).value;
    for (int a = n - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < spec.shape[static_cast<std::size_t>(a)]) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
  return p;
}

std::vector<double> default_initial_guess(const MAProblem& problem) {
  validate(problem, "default_initial_guess");
  const Discretization disc(problem);
  const GridSpec& spec = disc.spec();
  const int n = spec.dimension();
  const double h2 = problem.h * problem.h;
  auto source = [&](const Vector& x) { return n * std::exp((-problem.weights.v.dot(x) + problem.weights.c) / n); };
  // For n >= 2 the boundary data fixes the Laplacian at each box corner; a
  // multilinear correction makes the source agree there, which removes the
  // corner singularity of the mixed differences.
  std::vector<double> corner_fix;
  if (n >= 2) {
    corner_fix.assign(std::size_t{1} << n, 0.0);
    for (std::size_t m = 0; m < corner_fix.size(); ++m) {
      std::vector<int> c(static_cast<std::size_t>(n));
      long flat = 0;
      for (int a = 0; a < n; ++a) {
        c[static_cast<std::size_t>(a)] = (m >> a) & 1u ? spec.shape[static_cast<std::size_t>(a)] - 1 : 0;
        flat += c[static_cast<std::size_t>(a)] * disc.stride(a);
      }
      double lap = 0.0;
      for (int a = 0; a < n; ++a) {
        const long s = (m >> a) & 1u ? -disc.stride(a) : disc.stride(a);
        const auto at = [&](long off) { return problem.boundary[static_cast<std::size_t>(flat + off)]; };
        lap += (at(0) - 2.0 * at(s) + at(2 * s)) / h2;
      }
      corner_fix[m] = lap - source(spec.node(c));
    }
  }
  std::vector<Triplet> trips;
  Vector rhs(static_cast<Eigen::Index>(disc.unknowns()));
  for (std::size_t k = 0; k < disc.unknowns(); ++k) {
    const long f = static_cast<long>(disc.node_of(k));
    std::vector<int> idx(static_cast<std::size_t>(n));
    long rem = f;
    for (int a = 0; a < n; ++a) {
      idx[static_cast<std::size_t>(a)] = static_cast<int>(rem / disc.stride(a));
      rem %= disc.stride(a);
    }
    const Vector x = spec.node(idx);
    double b = source(x);
    for (std::size_t m = 0; m < corner_fix.size(); ++m) {
      double w = corner_fix[m];
      for (int a = 0; a < n; ++a) {
        const double t = static_cast<double>(idx[static_cast<std::size_t>(a)]) / (spec.shape[static_cast<std::size_t>(a)] - 1);
        w *= (m >> a) & 1u ? t : 1.0 - t;
      }
      b += w;
    }
    trips.emplace_back(static_cast<int>(k), static_cast<int>(k), -2.0 * n / h2);
    for (int a = 0; a < n; ++a)
      for (long off : {disc.stride(a), -disc.stride(a)}) {
        const auto nb = static_cast<std::size_t>(f + off);
        const int col = disc.unknown_of(nb);
        if (col >= 0) trips.emplace_back(static_cast<int>(k), col, 1.0 / h2);
        else b -= problem.boundary[nb] / h2;
      }
    rhs[static_cast<Eigen::Index>(k)] = b;
  }
  SparseMatrix lap(rhs.size(), rhs.size());
  lap.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<SparseMatrix> lu(lap);
  if (lu.info() != Eigen::Success)
    throw Error(ErrorKind::SingularLinearSystem, kModule, "default_initial_guess", "Poisson factorization failed");
  const Vector sol = lu.solve(rhs);
  std::vector<double> u = problem.boundary;
  for (std::size_t k = 0; k < disc.unknowns(); ++k) u[disc.node_of(k)] = sol[static_cast<Eigen::Index>(k)];
  return u;
}

double discrete_residual_norm(const MAProblem& problem, const std::vector<double>& values) {
  validate(problem, "discrete_residual_norm");
  const Discretization disc(problem);
  const auto r = disc.residual(values);
  if (!r) throw Error(ErrorKind::NonConvexIterate, kModule, "discrete_residual_norm", "a nodal Hessian is not positive definite");
  return r->values.size() ? r->values.cwiseAbs().maxCoeff() : 0.0;
}

MASolution solve_dirichlet(const MAProblem& problem, double tol, int max_iter) {
  validate(problem, "solve_dirichlet");
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidParams, kModule, "solve_dirichlet", "tol must be > 0");
  if (max_iter < 0) throw Error(ErrorKind::InvalidParams, kModule, "solve_dirichlet", "max_iter must be >= 0");
  const Discretization disc(problem);
  if (disc.unknowns() == 0)
    throw Error(ErrorKind::InvalidParams, kModule, "solve_dirichlet", "grid has no interior nodes");

  std::vector<double> u = problem.initial_guess ? *problem.initial_guess : default_initial_guess(problem);
  for (std::size_t f = 0; f < u.size(); ++f)
    if (disc.unknown_of(f) < 0) u[f] = problem.boundary[f];

  // A start that is not nodewise convex is first driven into the convex
  // region by Newton steps on log det(D_h^2 u + shift I); the shift is
  // reduced after every step and dropped once all nodal Hessians are positive
  // definite.
  double shift = 0.0;
  auto r = disc.residual(u);
  if (!r) {
    shift = 2.0 * std::max(kPdTolerance - disc.min_eigenvalue(u), 0.0);
    r = disc.residual(u, shift);
  }

  MASolution sol;
  sol.spec = disc.spec();
  sol.weights = problem.weights;
  for (int it = 0;; ++it) {
    const double norm = r->values.cwiseAbs().maxCoeff();
    if (shift == 0.0 && norm <= tol) {
      sol.residual_norm = norm;
      break;
    }
    if (it >= max_iter)
      throw Error(ErrorKind::MaxIterationsExceeded, kModule, "solve_dirichlet",
                  "residual " + fmt(norm) + (shift > 0.0 ? " (still shifted)" : "") + " after " +
                      std::to_string(max_iter) + " iterations");
    const SparseMatrix jac = disc.jacobian(u, shift);
    Eigen::SparseLU<SparseMatrix> lu;
    lu.analyzePattern(jac);
    lu.factorize(jac);
    if (lu.info() != Eigen::Success)
      throw Error(ErrorKind::SingularLinearSystem, kModule, "solve_dirichlet", "Jacobian factorization failed");
    const Vector& rv = r->values;
    Vector step = lu.solve(-rv);
    // Normwise backward error of the linear solve.
    const double jac_norm = infinity_norm(jac);
    auto backward_error = [&](const Vector& x) {
      return (jac * x + rv).lpNorm<Eigen::Infinity>() / (jac_norm * x.lpNorm<Eigen::Infinity>() + norm);
    };
    for (int refine = 0; refine < 2 && backward_error(step) > 1e-12; ++refine) step -= lu.solve(jac * step + rv);
    if (!step.allFinite() || backward_error(step) > 1e-12)
      throw Error(ErrorKind::SingularLinearSystem, kModule, "solve_dirichlet",
                  "linear solve backward error " + fmt(backward_error(step)));

    bool lost_convexity = false;
    for (double t = 1.0;; t *= 0.5) {
      if (t < kDampingFloor) {
        std::string why = "line search stalled at residual " + fmt(norm);
        if (lost_convexity) why = "every damped step loses positive definiteness";
        if (shift > 0.0) why = "no nodewise convex iterate reached (shift " + fmt(shift) + ")";
        throw Error(ErrorKind::NonConvexIterate, kModule, "solve_dirichlet", why);
      }
      std::vector<double> trial = u;
      for (std::size_t k = 0; k < disc.unknowns(); ++k) trial[disc.node_of(k)] += t * step[static_cast<Eigen::Index>(k)];
      auto rt = disc.residual(trial, shift);
      if (!rt) {
        lost_convexity = true;
        continue;
      }
      if (rt->values.cwiseAbs().maxCoeff() < norm) {
        sol.log.push_back({it + 1, norm, t, shift});
        u = std::move(trial);
        r = std::move(rt);
        break;
      }
    }
    if (shift > 0.0) {
      if (r->min_eig > kPdTolerance) {
        shift = 0.0;
      } else {
        // Give up half of the shifted margin, never more than half the shift.
        shift = std::min(shift, std::max(0.5 * shift, 0.5 * (shift - r->min_eig)));
      }
      r = disc.residual(u, shift);
    }
  }
  sol.values = std::move(u);
  sol.converged = true;
  return sol;
}

PotentialField MASolution::field(int stencil_order) const {
  return make_grid_potential(spec, values, stencil_order, weights);
}

JetEvaluation discrete_jet(const MASolution& solution, const Vector& point, int order) {
  return evaluate_jet(solution.field(order >= 5 ? 4 : 2), point, order);
}

}  // namespace toriclab
