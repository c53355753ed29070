#include "toriclab/rigidity.hpp"

#include "toriclab/soliton.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace toriclab {

namespace {

constexpr const char* kModule = "rigidity";
constexpr int kMaxHalvings = 40;
constexpr double kStepTolerance = 1e-12;
constexpr double kSpeedTolerance = 1e-9;

// Geodesic plus the Jacobi fields that vanish at p0, packed as
// [x, x', J_1, J_1', ..., J_m, J_m'].
class GeodesicFlow {
 public:
  GeodesicFlow(const PotentialField& field, int fields) : field_(field), n_(field.dimension()), m_(fields) {}

  int size() const { return 2 * n_ * (1 + m_); }

  Vector rhs(const Vector& y) const {
    if (!y.allFinite())
      throw Error(ErrorKind::GeodesicIntegrationFailure, kModule, "radial_scan", "state is not finite");
    const int n = n_;
    const auto jet = evaluate_jet(field_, y.head(n), m_ > 0 ? 4 : 3);
    // gamma(k, i, j) = 1/2 g^{kl} u_ijl
    std::vector<double> gamma(static_cast<std::size_t>(n * n * n), 0.0);
    auto G = [&](int k, int i, int j) -> double& { return gamma[static_cast<std::size_t>((k * n + i) * n + j)]; };
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l) G(k, i, j) += 0.5 * jet.inverse_hess(k, l) * jet.third(i, j, l);

    const Vector xd = y.segment(n, n);
    Vector out(size());
    out.head(n) = xd;
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) acc -= G(k, i, j) * xd[i] * xd[j];
      out[n + k] = acc;
    }
    if (m_ == 0) return out;

    // dgamma(k, i, j, m) = g^{ka} (1/2 u_ijam - u_abm gamma^b_ij)
    std::vector<double> dgamma(static_cast<std::size_t>(n * n * n * n), 0.0);
    auto D = [&](int k, int i, int j, int m) -> double& {
      return dgamma[static_cast<std::size_t>(((k * n + i) * n + j) * n + m)];
    };
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int m = 0; m < n; ++m) {
            double acc = 0.0;
            for (int a = 0; a < n; ++a) {
              double inner = 0.5 * jet.fourth(i, j, a, m);
              for (int b = 0; b < n; ++b) inner -= jet.third(a, b, m) * G(b, i, j);
              acc += jet.inverse_hess(k, a) * inner;
            }
            D(k, i, j, m) = acc;
          }
    for (int f = 0; f < m_; ++f) {
      const int base = 2 * n * (1 + f);
      const Vector jv = y.segment(base, n);
      const Vector jd = y.segment(base + n, n);
      out.segment(base, n) = jd;
      for (int k = 0; k < n; ++k) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double dj = 0.0;
            for (int m = 0; m < n; ++m) dj += D(k, i, j, m) * jv[m];
            acc -= dj * xd[i] * xd[j] + 2.0 * G(k, i, j) * xd[i] * jd[j];
          }
        out[base + n + k] = acc;
      }
    }
    return out;
  }

  // The end point must be admissible and the speed still one. The speed test
  // catches curves that touch the domain boundary at a single instant.
  bool unit_speed(const Vector& y) const {
    const int n = n_;
    const auto jet = evaluate_jet(field_, y.head(n), 2);
    const Vector xd = y.segment(n, n);
    return std::abs(xd.dot(jet.hess * xd) - 1.0) <= kSpeedTolerance;
  }

  Vector rk4(const Vector& y, double h) const {
    const Vector k1 = rhs(y);
    const Vector k2 = rhs(y + 0.5 * h * k1);
    const Vector k3 = rhs(y + 0.5 * h * k2);
    const Vector k4 = rhs(y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  // Advances y by up to dt; returns the arc length actually covered. A step
  // is accepted when one RK4 step and two half steps agree; otherwise, or if
  // a stage leaves the domain or hits a degenerate Hessian, it is halved.
  double advance(Vector& y, double dt, int depth, ErrorKind& failure, std::string& detail) const {
    try {
      const Vector whole = rk4(y, dt);
      const Vector halves = rk4(rk4(y, 0.5 * dt), 0.5 * dt);
      const double err = ((whole - halves).array().abs() / (1.0 + halves.array().abs())).maxCoeff();
      if (err <= kStepTolerance && unit_speed(halves)) {
        y = halves;
        return dt;
      }
      failure = ErrorKind::GeodesicIntegrationFailure;
      detail = err <= kStepTolerance ? "speed drifted from one" : "step error control did not converge";
    } catch (const Error& e) {
      failure = e.kind() == ErrorKind::PointOutsideDomain ? ErrorKind::LeftDomain : ErrorKind::GeodesicIntegrationFailure;
      detail = e.what();
    }
    if (depth >= kMaxHalvings) return 0.0;
    const double first = advance(y, 0.5 * dt, depth + 1, failure, detail);
    if (first < 0.5 * dt) return first;
    return first + advance(y, 0.5 * dt, depth + 1, failure, detail);
  }

 private:
  const PotentialField& field_;
  int n_;
  int m_;
};

// Orthonormal basis (in g) of the complement of the unit vector t.
std::vector<Vector> orthonormal_complement(const Matrix& g, const Vector& t) {
  const int n = static_cast<int>(t.size());
  std::vector<Vector> basis{t};
  for (int a = 0; a < n && static_cast<int>(basis.size()) < n; ++a) {
    Vector e = Vector::Unit(n, a);
    for (const auto& b : basis) e -= b.dot(g * e) * b;
    const double len = std::sqrt(e.dot(g * e));
    if (len > 1e-8) basis.push_back(e / len);
  }
  basis.erase(basis.begin());
  return basis;
}

ScanSample make_sample(const PotentialField& field, const WeightData& weights, const Vector& y, int fields, double r) {
  const int n = field.dimension();
  const int order = std::min(5, field.source().max_order());
  const auto jet = evaluate_jet(field, y.head(n), order);
  const Vector xd = y.segment(n, n);
  ScanSample s;
  s.r = r;
  s.x = y.head(n);

  double lap = 0.0;
  if (fields > 0) {
    Matrix w(fields, fields), sm(fields, fields);
    std::vector<Vector> jv(static_cast<std::size_t>(fields)), dj(static_cast<std::size_t>(fields));
    for (int f = 0; f < fields; ++f) {
      const int base = 2 * n * (1 + f);
      jv[static_cast<std::size_t>(f)] = y.segment(base, n);
      Vector cov = y.segment(base + n, n);
      for (int k = 0; k < n; ++k)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            for (int l = 0; l < n; ++l)
              cov[k] += 0.5 * jet.inverse_hess(k, l) * jet.third(a, b, l) * xd[a] * jv[static_cast<std::size_t>(f)][b];
      dj[static_cast<std::size_t>(f)] = cov;
    }
    for (int i = 0; i < fields; ++i)
      for (int k = 0; k < fields; ++k) {
        w(i, k) = jv[static_cast<std::size_t>(i)].dot(jet.hess * jv[static_cast<std::size_t>(k)]);
        sm(i, k) = dj[static_cast<std::size_t>(i)].dot(jet.hess * jv[static_cast<std::size_t>(k)]);
      }
    lap = w.ldlt().solve(sm).trace();
  }
  const WeightFunction phi = weight_function(jet, weights);
  s.laplacian_r = lap;
  s.m_phi = lap - phi.grad.dot(xd);
  s.phi = phi.phi;
  s.sigma = sigma(jet);
  if (order >= 5) s.bochner_slack = bochner_check(jet, weights).slack;
  return s;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

RadialScanReport radial_scan(const PotentialField& field, const WeightData& weights, const Vector& p0,
                             const Vector& direction, const ScanOptions& options) {
  const int n = field.dimension();
  if (!field.weights())
    throw Error(ErrorKind::UncertifiedWeights, kModule, "radial_scan",
                "field " + field.describe() + " carries no certified weights");
  if (weights.v.size() != n || weights.xi.size() != n || p0.size() != n || direction.size() != n)
    throw Error(ErrorKind::InvalidParams, kModule, "radial_scan", "dimension mismatch");
  if (grid_data(field))
    throw Error(ErrorKind::InvalidParams, kModule, "radial_scan", "scans need an analytic field (off-node jets)");
  if (!(options.step > 0.0) || options.max_steps < 1)
    throw Error(ErrorKind::InvalidParams, kModule, "radial_scan", "step must be > 0 and max_steps >= 1");
  const auto jet0 = evaluate_jet(field, p0, 2);
  const double speed = std::sqrt(direction.dot(jet0.hess * direction));
  if (!(speed > 0.0) || !std::isfinite(speed))
    throw Error(ErrorKind::InvalidParams, kModule, "radial_scan", "direction must be nonzero");

  RadialScanReport rep;
  rep.dimension = n;
  rep.p0 = p0;
  rep.direction = direction / speed;
  rep.step = options.step;

  const int fields = options.diagnostics ? n - 1 : 0;
  const GeodesicFlow flow(field, fields);
  Vector y = Vector::Zero(flow.size());
  y.head(n) = p0;
  y.segment(n, n) = rep.direction;
  const auto perp = orthonormal_complement(jet0.hess, rep.direction);
  for (int f = 0; f < fields; ++f) y.segment(2 * n * (1 + f) + n, n) = perp[static_cast<std::size_t>(f)];

  ErrorKind failure = ErrorKind::GeodesicIntegrationFailure;
  std::string detail;
  double r = 0.0;
  for (int k = 1; k <= options.max_steps; ++k) {
    const double moved = flow.advance(y, options.step, 0, failure, detail);
    r += moved;
    if (moved < options.step) {
      rep.truncated = true;
      rep.stop_kind = failure;
      rep.stop_detail = detail;
      break;
    }
    r = k * options.step;
    if (options.diagnostics) rep.samples.push_back(make_sample(field, weights, y, fields, r));
  }
  rep.max_radius = r;

  const double slack = 10.0 * options.step * options.step;
  for (std::size_t k = 1; k < rep.samples.size(); ++k) {
    const double inc = rep.samples[k].m_phi - rep.samples[k - 1].m_phi;
    rep.max_increase = std::max(rep.max_increase, inc);
    if (inc > slack) rep.monotone = false;
  }
  return rep;
}

MeanCurvatureBound mean_curvature_bound_check(const RadialScanReport& report, double c_phi_bound) {
  MeanCurvatureBound b;
  b.c_phi = c_phi_bound;
  b.tightest_ratio = -std::numeric_limits<double>::infinity();
  b.worst_excess = -std::numeric_limits<double>::infinity();
  const double slack = 10.0 * report.step * report.step;
  for (const auto& s : report.samples) {
    const double bound = (report.dimension + 4.0 * c_phi_bound - 1.0) / s.r;
    b.worst_excess = std::max(b.worst_excess, s.m_phi - bound);
    if (bound > 0.0) b.tightest_ratio = std::max(b.tightest_ratio, s.m_phi / bound);
    if (s.m_phi > bound + slack) b.holds = false;
  }
  return b;
}

double max_abs_phi(const RadialScanReport& report) {
  double c = 0.0;
  for (const auto& s : report.samples) c = std::max(c, std::abs(s.phi));
  return c;
}

CutoffValue cutoff_value(double R, double delta, double t) {
  CutoffValue v;
  if (t <= delta) {
    v.eta = R;
    return v;
  }
  const double w = R - delta;
  const double s = (t - delta) / w;
  const double q = 1.0 - s * s;
  v.eta = R * q * q;
  v.deta = -4.0 * R * s * q / w;
  v.d2eta = -4.0 * R * (1.0 - 3.0 * s * s) / (w * w);
  v.ratio = 16.0 * R * s * s / (w * w);
  return v;
}

CutoffProfile cutoff_eta(double R, double delta, int sample_count) {
  if (!(delta > 0.0 && delta < 1.0 && R > 1.0))
    throw Error(ErrorKind::InvalidRange, kModule, "cutoff_eta",
                "need 0 < delta < 1 < R, got R = " + fmt(R) + ", delta = " + fmt(delta));
  if (sample_count < 2) throw Error(ErrorKind::InvalidParams, kModule, "cutoff_eta", "sample_count must be >= 2");
  CutoffProfile p;
  p.R = R;
  p.delta = delta;
  const auto count = static_cast<std::size_t>(sample_count);
  for (auto* v : {&p.t, &p.eta, &p.deta, &p.d2eta, &p.ratio}) v->reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = R * static_cast<double>(i) / static_cast<double>(count - 1);
    const CutoffValue c = cutoff_value(R, delta, t);
    p.t.push_back(t);
    p.eta.push_back(c.eta);
    p.deta.push_back(c.deta);
    p.d2eta.push_back(c.d2eta);
    p.ratio.push_back(c.ratio);
    p.max_neg_deta = std::max(p.max_neg_deta, -c.deta);
    p.max_abs_d2eta = std::max(p.max_abs_d2eta, std::abs(c.d2eta));
    p.max_ratio = std::max(p.max_ratio, c.ratio);
  }
  p.c0 = 1.1 * std::max({p.max_neg_deta, p.max_abs_d2eta, p.max_ratio});
  bool ok = p.eta.front() == R && std::abs(p.eta.back()) <= 1e-12 * R;
  for (std::size_t i = 0; i < count; ++i) {
    ok = ok && -p.deta[i] >= 0.0 && -p.deta[i] < p.c0 && std::abs(p.d2eta[i]) < p.c0 && p.ratio[i] < p.c0;
    if (i > 0) ok = ok && p.eta[i] <= p.eta[i - 1];
  }
  p.certified = ok;
  return p;
}

LiouvilleReport liouville_scan(const PotentialField& field, const WeightData& weights, const Vector& p0,
                               const std::vector<double>& radii, double step) {
  const int n = field.dimension();
  if (radii.empty()) throw Error(ErrorKind::InvalidParams, kModule, "liouville_scan", "no radii given");
  const double r_max = *std::max_element(radii.begin(), radii.end());
  if (!(step > 0.0) || !(r_max > 0.0))
    throw Error(ErrorKind::InvalidParams, kModule, "liouville_scan", "step and radii must be > 0");

  LiouvilleReport rep;
  rep.p0 = p0;
  const int order = std::min(3, field.source().max_order());
  rep.sigma_p0 = sigma(evaluate_jet(field, p0, order));
  ScanOptions opt;
  opt.step = step;
  opt.max_steps = static_cast<int>(std::ceil(r_max / step)) + 1;
  opt.diagnostics = false;
  rep.feasible_radius = std::numeric_limits<double>::infinity();
  for (int a = 0; a < n; ++a)
    for (double sign : {1.0, -1.0}) {
      rep.rays.push_back(radial_scan(field, weights, p0, sign * Vector::Unit(n, a), opt));
      const auto& ray = rep.rays.back();
      if (ray.truncated) {
        rep.truncated = true;
        rep.feasible_radius = std::min(rep.feasible_radius, ray.max_radius);
      }
    }
  if (!rep.truncated) rep.feasible_radius = opt.max_steps * step;

  std::optional<double> first, last;
  for (double R : radii) {
    LiouvilleEntry e;
    e.R = R;
    e.feasible = R > 0.0 && (rep.truncated ? R < rep.feasible_radius : R <= rep.feasible_radius);
    if (e.feasible) {
      e.product = rep.sigma_p0 / (2.0 * n) * R;
      if (!first) first = e.product;
      last = e.product;
    } else {
      e.error = ErrorKind::RadiusInfeasible;
    }
    rep.entries.push_back(e);
  }
  rep.bounded = !first || *last <= 2.0 * *first;
  return rep;
}

double quadratic_rigidity_deviation(const PotentialField& field, const std::vector<Vector>& points) {
  const int n = field.dimension();
  const int terms = (n + 1) * (n + 2) / 2;
  if (static_cast<int>(points.size()) < terms)
    throw Error(ErrorKind::DegenerateSampleSet, kModule, "quadratic_rigidity_deviation",
                "need at least " + std::to_string(terms) + " points, got " + std::to_string(points.size()));
  Matrix a(static_cast<Eigen::Index>(points.size()), terms);
  Vector b(a.rows());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const Vector& x = points[static_cast<std::size_t>(r)];
    if (x.size() != n)
      throw Error(ErrorKind::InvalidParams, kModule, "quadratic_rigidity_deviation", "point dimension mismatch");
    int c = 0;
    a(r, c++) = 1.0;
    for (int i = 0; i < n; ++i) a(r, c++) = x[i];
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) a(r, c++) = x[i] * x[j];
    b[r] = evaluate_jet(field, x, 0).value;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < terms)
    throw Error(ErrorKind::DegenerateSampleSet, kModule, "quadratic_rigidity_deviation",
                "points do not determine a quadratic (rank " + std::to_string(qr.rank()) + ")");
  const Vector coef = qr.solve(b);
  return (a * coef - b).lpNorm<Eigen::Infinity>();
}

}  // namespace toriclab
