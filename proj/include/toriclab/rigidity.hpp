#pragma once

#include "toriclab/error.hpp"
#include "toriclab/potential.hpp"

#include <optional>
#include <string>
#include <vector>

namespace toriclab {

struct ScanOptions {
  double step = 1e-3;  // arc length between samples
  int max_steps = 2000;
  bool diagnostics = true;  // compute m_phi, sigma, phi and Bochner slack per sample
};

struct ScanSample {
  double r = 0.0;
  Vector x;
  double m_phi = 0.0;
  double laplacian_r = 0.0;
  double sigma = 0.0;
  double phi = 0.0;
  std::optional<double> bochner_slack;  // needs jets of order 5
};

struct RadialScanReport {
  int dimension = 0;
  Vector p0;
  Vector direction;  // unit length in g(p0)
  double step = 0.0;
  std::vector<ScanSample> samples;
  bool monotone = true;       // m_phi non-increasing within 10 step^2
  double max_increase = 0.0;  // largest m_phi(r_{k+1}) - m_phi(r_k)
  double max_radius = 0.0;    // arc length reached
  bool truncated = false;     // stopped before max_steps
  std::optional<ErrorKind> stop_kind;  // LeftDomain or GeodesicIntegrationFailure
  std::string stop_detail;
};

/// Unit-speed geodesic from p0 with initial velocity along `direction`,
/// fourth-order Runge-Kutta in arc length with step-doubling error control
/// inside each step. The distance Laplacian comes from Jacobi fields
/// integrated alongside the geodesic (linearized geodesic flow), and
/// m_phi = Delta r - <grad phi, grad r>. The field must carry certified
/// weights; `weights` define phi.
RadialScanReport radial_scan(const PotentialField& field, const WeightData& weights, const Vector& p0,
                             const Vector& direction, const ScanOptions& options = {});

struct MeanCurvatureBound {
  bool holds = true;
  double c_phi = 0.0;
  double tightest_ratio = 0.0;  // max m_phi / bound over samples
  double worst_excess = 0.0;    // max m_phi - bound (negative when strict)
};
/// m_phi <= (n + 4C - 1)/r at every sample, slack 10 step^2.
MeanCurvatureBound mean_curvature_bound_check(const RadialScanReport& report, double c_phi_bound);

/// max |phi| over the samples of a report.
double max_abs_phi(const RadialScanReport& report);

struct CutoffValue {
  double eta = 0.0;
  double deta = 0.0;
  double d2eta = 0.0;
  double ratio = 0.0;  // (eta')^2 / eta, continuous up to t = R
};
/// eta(t) = R for t <= delta, R (1 - ((t - delta)/(R - delta))^2)^2 after.
CutoffValue cutoff_value(double R, double delta, double t);

struct CutoffProfile {
  double R = 0.0;
  double delta = 0.0;
  std::vector<double> t;
  std::vector<double> eta;
  std::vector<double> deta;
  std::vector<double> d2eta;
  std::vector<double> ratio;
  double max_neg_deta = 0.0;
  double max_abs_d2eta = 0.0;
  double max_ratio = 0.0;
  double c0 = 0.0;  // 1.1 times the largest of the three maxima
  bool certified = false;
};
/// Samples eta on a uniform grid of [0, R]; requires 0 < delta < 1 < R.
CutoffProfile cutoff_eta(double R, double delta, int sample_count = 10000);

struct LiouvilleEntry {
  double R = 0.0;
  bool feasible = false;
  double product = 0.0;  // (sigma(p0) / 2n) R when feasible
  std::optional<ErrorKind> error;  // RadiusInfeasible otherwise
};

struct LiouvilleReport {
  Vector p0;
  double sigma_p0 = 0.0;
  double feasible_radius = 0.0;  // min over the coordinate rays
  bool truncated = false;        // some ray stopped early
  std::vector<RadialScanReport> rays;  // +e_1, -e_1, +e_2, ...
  std::vector<LiouvilleEntry> entries;
  bool bounded = true;  // last feasible product <= 2x the first
};
/// Feasibility of each radius is judged by scans along the coordinate
/// directions; an infeasible radius is reported, not thrown.
LiouvilleReport liouville_scan(const PotentialField& field, const WeightData& weights, const Vector& p0,
                               const std::vector<double>& radii, double step = 1e-2);

/// Max absolute deviation of u from its least-squares quadratic fit.
double quadratic_rigidity_deviation(const PotentialField& field, const std::vector<Vector>& points);

}  // namespace toriclab
