#include "toriclab/potential.hpp"

#include "toriclab/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace toriclab {

namespace {

constexpr const char* kModule = "potential";

[[noreturn]] void fail(ErrorKind kind, const char* op, const std::string& detail) {
  throw Error(kind, kModule, op, detail);
}

std::string format_point(const Vector& x) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

// Fills every permutation of each sorted multi-index with the value computed
// for it, so the result is exactly symmetric.
template <class Fn>
Tensor symmetric_tensor(int rank, int dim, Fn&& value_for_counts) {
  Tensor t(rank, dim);
  std::map<std::vector<int>, double> cache;
  t.for_each_index([&](std::span<const int> idx) {
    std::vector<int> counts(static_cast<std::size_t>(dim), 0);
    for (int i : idx) ++counts[static_cast<std::size_t>(i)];
    auto it = cache.find(counts);
    if (it == cache.end()) it = cache.emplace(counts, value_for_counts(counts)).first;
    t.at(idx) = it->second;
  });
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// AffineDomain

AffineDomain AffineDomain::box(Vector lower, Vector upper) {
  if (lower.size() == 0 || lower.size() != upper.size())
    fail(ErrorKind::InvalidParams, "box", "dimension must be >= 1 and bounds must match");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i]) || !(lower[i] < upper[i]))
      fail(ErrorKind::InvalidParams, "box", "empty interval on axis " + std::to_string(i));
  }
  AffineDomain d;
  d.shape_ = Shape::Box;
  d.lower_ = std::move(lower);
  d.upper_ = std::move(upper);
  return d;
}

AffineDomain AffineDomain::whole_space(int dimension) {
  if (dimension < 1) fail(ErrorKind::InvalidParams, "whole_space", "dimension must be >= 1");
  const double inf = std::numeric_limits<double>::infinity();
  return box(Vector::Constant(dimension, -inf), Vector::Constant(dimension, inf));
}

AffineDomain AffineDomain::interval(double lower, double upper) {
  return box(Vector::Constant(1, lower), Vector::Constant(1, upper));
}

AffineDomain AffineDomain::ball(Vector center, double radius) {
  if (center.size() == 0) fail(ErrorKind::InvalidParams, "ball", "dimension must be >= 1");
  if (!(radius > 0.0) || !std::isfinite(radius)) fail(ErrorKind::InvalidParams, "ball", "radius must be > 0");
  AffineDomain d;
  d.shape_ = Shape::Ball;
  d.center_ = center;
  d.radius_ = radius;
  d.lower_ = center.array() - radius;
  d.upper_ = center.array() + radius;
  return d;
}

bool AffineDomain::contains(const Vector& x) const {
  if (x.size() != lower_.size() || !x.allFinite()) return false;
  if (shape_ == Shape::Ball) return (x - center_).norm() < radius_;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!(x[i] > lower_[i] && x[i] < upper_[i])) return false;
  return true;
}

AffineDomain AffineDomain::product(const AffineDomain& other) const {
  if (!is_box() || !other.is_box()) fail(ErrorKind::InvalidParams, "product", "products require box domains");
  Vector lo(dimension() + other.dimension());
  Vector hi(lo.size());
  lo << lower_, other.lower_;
  hi << upper_, other.upper_;
  return box(lo, hi);
}

AffineDomain AffineDomain::intersect(const AffineDomain& other) const {
  if (dimension() != other.dimension())
    fail(ErrorKind::InvalidParams, "intersect", "dimension mismatch");
  if (is_box() && other.is_box()) return box(lower_.cwiseMax(other.lower_), upper_.cwiseMin(other.upper_));
  const AffineDomain& b = is_box() ? other : *this;
  const AffineDomain& x = is_box() ? *this : other;
  if (!x.is_box()) fail(ErrorKind::InvalidParams, "intersect", "ball/ball intersection is not supported");
  if ((x.lower_.array() <= b.lower_.array()).all() && (x.upper_.array() >= b.upper_.array()).all()) return b;
  fail(ErrorKind::InvalidParams, "intersect", "box does not contain the ball");
}

// ---------------------------------------------------------------------------
// WeightData

WeightData WeightData::zero(int dimension) { return {Vector::Zero(dimension), Vector::Zero(dimension), 0.0}; }

WeightData WeightData::concat(const WeightData& a, const WeightData& b) {
  WeightData w;
  w.v.resize(a.v.size() + b.v.size());
  w.xi.resize(w.v.size());
  w.v << a.v, b.v;
  w.xi << a.xi, b.xi;
  w.c = a.c + b.c;
  return w;
}

// ---------------------------------------------------------------------------
// PotentialField

void PotentialSource::validate_point(const Vector&, int) const {}

PotentialField::PotentialField(AffineDomain domain, std::shared_ptr<const PotentialSource> source,
                               Representation representation, std::optional<WeightData> weights)
    : domain_(std::move(domain)),
      source_(std::move(source)),
      representation_(representation),
      weights_(std::move(weights)) {
  if (!source_ || source_->dimension() != domain_.dimension())
    fail(ErrorKind::InvalidParams, "PotentialField", "source dimension does not match the domain");
  if (weights_ && (weights_->v.size() != domain_.dimension() || weights_->xi.size() != domain_.dimension()))
    fail(ErrorKind::InvalidParams, "PotentialField", "weight lengths must equal the domain dimension");
}

PotentialField PotentialField::with_weights(std::optional<WeightData> weights) const {
  return PotentialField(domain_, source_, representation_, std::move(weights));
}

// ---------------------------------------------------------------------------
// Analytic families

namespace {

class QuadraticSource final : public PotentialSource {
 public:
  QuadraticSource(Matrix a, Vector b) : a_(std::move(a)), b_(std::move(b)) {}
  int dimension() const override { return static_cast<int>(b_.size()); }
  int max_order() const override { return kMaxJetOrder; }
  std::vector<Tensor> derivatives(const Vector& x, int order) const override {
    const int n = dimension();
    std::vector<Tensor> out;
    Tensor t0(0, n);
    t0() = 0.5 * x.dot(a_ * x) + b_.dot(x);
    out.push_back(std::move(t0));
    if (order >= 1) {
      Tensor t1(1, n);
      Vector g = a_ * x + b_;
      for (int i = 0; i < n; ++i) t1(i) = g[i];
      out.push_back(std::move(t1));
    }
    if (order >= 2) {
      Tensor t2(2, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t2(i, j) = a_(i, j);
      out.push_back(std::move(t2));
    }
    for (int k = 3; k <= order; ++k) out.emplace_back(k, n);
    return out;
  }
  std::string describe() const override { return "quadratic(n=" + std::to_string(dimension()) + ")"; }

 private:
  Matrix a_;
  Vector b_;
};

// One-dimensional family given by its derivative ladder u, u', ..., u^(5).
class OneDimSource : public PotentialSource {
 public:
  int dimension() const override { return 1; }
  int max_order() const override { return kMaxJetOrder; }
  std::vector<Tensor> derivatives(const Vector& x, int order) const override {
    const auto ladder = derivative_ladder(x[0]);
    std::vector<Tensor> out;
    for (int k = 0; k <= order; ++k) {
      Tensor t(k, 1);
      t.data()[0] = ladder[static_cast<std::size_t>(k)];
      out.push_back(std::move(t));
    }
    return out;
  }

 protected:
  virtual std::array<double, kMaxJetOrder + 1> derivative_ladder(double x) const = 0;
};

class Exp1dSource final : public OneDimSource {
 public:
  Exp1dSource(double v, double scale) : v_(v), scale_(scale) {}
  std::string describe() const override {
    std::ostringstream os;
    os << "exp1d(v=" << v_ << ", scale=" << scale_ << ")";
    return os.str();
  }

 protected:
  std::array<double, kMaxJetOrder + 1> derivative_ladder(double x) const override {
    std::array<double, kMaxJetOrder + 1> d{};
    double term = scale_ * std::exp(-v_ * x);
    for (auto& dk : d) {
      dk = term;
      term *= -v_;
    }
    return d;
  }

 private:
  double v_;
  double scale_;
};

class XLogX1dSource final : public OneDimSource {
 public:
  explicit XLogX1dSource(double k) : k_(k) {}
  std::string describe() const override {
    std::ostringstream os;
    os << "xlogx1d(K=" << k_ << ")";
    return os.str();
  }

 protected:
  std::array<double, kMaxJetOrder + 1> derivative_ladder(double x) const override {
    const double s = x + k_;
    const double l = std::log(s);
    return {s * l - x, l, 1.0 / s, -1.0 / (s * s), 2.0 / (s * s * s), -6.0 / (s * s * s * s)};
  }

 private:
  double k_;
};

class ProductSource final : public PotentialSource {
 public:
  explicit ProductSource(std::vector<std::shared_ptr<const PotentialSource>> factors)
      : factors_(std::move(factors)) {
    for (const auto& f : factors_) {
      offsets_.push_back(dim_);
      dim_ += f->dimension();
      max_order_ = std::min(max_order_, f->max_order());
    }
  }
  int dimension() const override { return dim_; }
  int max_order() const override { return max_order_; }
  void validate_point(const Vector& x, int order) const override {
    for (std::size_t f = 0; f < factors_.size(); ++f)
      factors_[f]->validate_point(x.segment(offsets_[f], factors_[f]->dimension()), order);
  }
  std::vector<Tensor> derivatives(const Vector& x, int order) const override {
    std::vector<Tensor> out;
    for (int k = 0; k <= order; ++k) out.emplace_back(k, dim_);
    for (std::size_t f = 0; f < factors_.size(); ++f) {
      const int off = offsets_[f];
      const auto block = factors_[f]->derivatives(x.segment(off, factors_[f]->dimension()), order);
      out[0]() += block[0]();
      for (int k = 1; k <= order; ++k) {
        block[static_cast<std::size_t>(k)].for_each_index([&](std::span<const int> idx) {
          std::vector<int> shifted(idx.begin(), idx.end());
          for (int& i : shifted) i += off;
          out[static_cast<std::size_t>(k)].at(shifted) = block[static_cast<std::size_t>(k)].at(idx);
        });
      }
    }
    return out;
  }
  std::string describe() const override {
    std::string s = "product(";
    for (std::size_t f = 0; f < factors_.size(); ++f) s += (f ? ", " : "") + factors_[f]->describe();
    return s + ")";
  }

 private:
  std::vector<std::shared_ptr<const PotentialSource>> factors_;
  std::vector<int> offsets_;
  int dim_ = 0;
  int max_order_ = kMaxJetOrder;
};

class PolynomialSource final : public PotentialSource {
 public:
  PolynomialSource(int dim, std::vector<Monomial> terms) : dim_(dim), terms_(std::move(terms)) {}
  int dimension() const override { return dim_; }
  int max_order() const override { return kMaxJetOrder; }
  std::vector<Tensor> derivatives(const Vector& x, int order) const override {
    std::vector<Tensor> out;
    for (int k = 0; k <= order; ++k) {
      out.push_back(symmetric_tensor(k, dim_, [&](const std::vector<int>& counts) {
        double total = 0.0;
        for (const auto& term : terms_) {
          double val = term.coef;
          for (int a = 0; a < dim_ && val != 0.0; ++a) {
            const int e = term.exponents[static_cast<std::size_t>(a)];
            const int d = counts[static_cast<std::size_t>(a)];
            if (d > e) {
              val = 0.0;
              break;
            }
            for (int j = 0; j < d; ++j) val *= static_cast<double>(e - j);
            val *= std::pow(x[a], e - d);
          }
          total += val;
        }
        return total;
      }));
    }
    return out;
  }
  std::string describe() const override {
    return "polynomial(n=" + std::to_string(dim_) + ", terms=" + std::to_string(terms_.size()) + ")";
  }

 private:
  int dim_;
  std::vector<Monomial> terms_;
};

class SumSource final : public PotentialSource {
 public:
  explicit SumSource(std::vector<std::shared_ptr<const PotentialSource>> terms) : terms_(std::move(terms)) {
    for (const auto& t : terms_) max_order_ = std::min(max_order_, t->max_order());
  }
  int dimension() const override { return terms_.front()->dimension(); }
  int max_order() const override { return max_order_; }
  void validate_point(const Vector& x, int order) const override {
    for (const auto& t : terms_) t->validate_point(x, order);
  }
  std::vector<Tensor> derivatives(const Vector& x, int order) const override {
    auto out = terms_.front()->derivatives(x, order);
    for (std::size_t t = 1; t < terms_.size(); ++t) {
      const auto add = terms_[t]->derivatives(x, order);
      for (std::size_t k = 0; k < out.size(); ++k) {
        auto dst = out[k].data();
        auto src = add[k].data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      }
    }
    return out;
  }
  std::string describe() const override {
    std::string s = "sum(";
    for (std::size_t t = 0; t < terms_.size(); ++t) s += (t ? ", " : "") + terms_[t]->describe();
    return s + ")";
  }

 private:
  std::vector<std::shared_ptr<const PotentialSource>> terms_;
  int max_order_ = kMaxJetOrder;
};

}  // namespace

PotentialField make_quadratic(const Matrix& a, const Vector& b) {
  const auto n = a.rows();
  if (n < 1 || a.cols() != n || b.size() != n)
    fail(ErrorKind::InvalidParams, "quadratic", "A must be n x n and b of length n");
  if (!a.allFinite() || !b.allFinite()) fail(ErrorKind::InvalidParams, "quadratic", "non-finite parameters");
  if (max_abs(a - a.transpose()) > 1e-14 * std::max(1.0, max_abs(a)))
    fail(ErrorKind::InvalidParams, "quadratic", "A must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  if (eig.eigenvalues().minCoeff() <= kPdTolerance)
    fail(ErrorKind::InvalidParams, "quadratic", "A must be positive definite");
  WeightData w = WeightData::zero(static_cast<int>(n));
  w.c = eig.eigenvalues().array().log().sum();
  return PotentialField(AffineDomain::whole_space(static_cast<int>(n)), std::make_shared<QuadraticSource>(a, b),
                        Representation::Analytic, w);
}

PotentialField make_quadratic(const Matrix& a) { return make_quadratic(a, Vector::Zero(a.rows())); }

PotentialField make_exp1d(double v, double scale) {
  if (!std::isfinite(v) || v == 0.0) fail(ErrorKind::InvalidParams, "exp1d", "v must be finite and nonzero");
  if (!std::isfinite(scale) || !(scale > 0.0)) fail(ErrorKind::InvalidParams, "exp1d", "scale must be > 0");
  WeightData w{Vector::Constant(1, v), Vector::Zero(1), std::log(scale * v * v)};
  return PotentialField(AffineDomain::whole_space(1), std::make_shared<Exp1dSource>(v, scale),
                        Representation::Analytic, w);
}

PotentialField make_xlogx1d(double k) {
  if (!std::isfinite(k)) fail(ErrorKind::InvalidParams, "xlogx1d", "K must be finite");
  WeightData w{Vector::Zero(1), Vector::Constant(1, -1.0), 0.0};
  return PotentialField(AffineDomain::interval(-k, std::numeric_limits<double>::infinity()),
                        std::make_shared<XLogX1dSource>(k), Representation::Analytic, w);
}

PotentialField make_product(std::span<const PotentialField> factors) {
  if (factors.empty()) fail(ErrorKind::InvalidParams, "product", "need at least one factor");
  std::vector<std::shared_ptr<const PotentialSource>> sources;
  std::optional<AffineDomain> domain;
  std::optional<WeightData> weights = factors.front().weights();
  bool analytic = true;
  for (const auto& f : factors) {
    sources.push_back(f.source_ptr());
    domain = domain ? domain->product(f.domain()) : f.domain();
    analytic = analytic && f.is_analytic();
  }
  for (std::size_t i = 1; i < factors.size() && weights; ++i) {
    if (!factors[i].weights()) weights.reset();
    else weights = WeightData::concat(*weights, *factors[i].weights());
  }
  return PotentialField(*domain, std::make_shared<ProductSource>(std::move(sources)),
                        analytic ? Representation::Analytic : Representation::Grid, weights);
}

PotentialField make_polynomial(int dimension, std::vector<Monomial> terms, std::optional<AffineDomain> domain) {
  if (dimension < 1) fail(ErrorKind::InvalidParams, "polynomial", "dimension must be >= 1");
  for (const auto& t : terms) {
    if (static_cast<int>(t.exponents.size()) != dimension)
      fail(ErrorKind::InvalidParams, "polynomial", "exponent list length must equal the dimension");
    for (int e : t.exponents)
      if (e < 0) fail(ErrorKind::InvalidParams, "polynomial", "exponents must be non-negative");
    if (!std::isfinite(t.coef)) fail(ErrorKind::InvalidParams, "polynomial", "non-finite coefficient");
  }
  AffineDomain d = domain ? *domain : AffineDomain::whole_space(dimension);
  if (d.dimension() != dimension) fail(ErrorKind::InvalidParams, "polynomial", "domain dimension mismatch");
  return PotentialField(d, std::make_shared<PolynomialSource>(dimension, std::move(terms)), Representation::Analytic);
}

PotentialField make_sum(std::span<const PotentialField> terms) {
  if (terms.empty()) fail(ErrorKind::InvalidParams, "sum", "need at least one term");
  std::vector<std::shared_ptr<const PotentialSource>> sources;
  AffineDomain domain = terms.front().domain();
  bool analytic = true;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].dimension() != terms.front().dimension())
      fail(ErrorKind::InvalidParams, "sum", "all terms must share the dimension");
    if (i > 0) domain = domain.intersect(terms[i].domain());
    sources.push_back(terms[i].source_ptr());
    analytic = analytic && terms[i].is_analytic();
  }
  return PotentialField(domain, std::make_shared<SumSource>(std::move(sources)),
                        analytic ? Representation::Analytic : Representation::Grid);
}

PotentialField builtin_family(const std::string& name, std::span<const double> params) {
  if (name == "quadratic") {
    if (params.empty()) fail(ErrorKind::InvalidParams, "builtin_family", "quadratic needs [n, A, b]");
    const double nd = params[0];
    if (!(nd >= 1.0) || nd != std::floor(nd)) fail(ErrorKind::InvalidParams, "builtin_family", "bad dimension");
    const int n = static_cast<int>(nd);
    const std::size_t na = static_cast<std::size_t>(n * n);
    if (params.size() != 1 + na && params.size() != 1 + na + static_cast<std::size_t>(n))
      fail(ErrorKind::InvalidParams, "builtin_family", "quadratic expects n, n*n entries of A and optionally n of b");
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = params[1 + static_cast<std::size_t>(i * n + j)];
    Vector b = Vector::Zero(n);
    if (params.size() > 1 + na)
      for (int i = 0; i < n; ++i) b[i] = params[1 + na + static_cast<std::size_t>(i)];
    return make_quadratic(a, b);
  }
  if (name == "exp1d") {
    if (params.empty() || params.size() > 2) fail(ErrorKind::InvalidParams, "builtin_family", "exp1d expects [v, scale]");
    return make_exp1d(params[0], params.size() == 2 ? params[1] : 1.0);
  }
  if (name == "xlogx1d") {
    if (params.size() != 1) fail(ErrorKind::InvalidParams, "builtin_family", "xlogx1d expects [K]");
    return make_xlogx1d(params[0]);
  }
  fail(ErrorKind::InvalidParams, "builtin_family", "unknown family '" + name + "'");
}

// ---------------------------------------------------------------------------
// Grids

std::size_t GridSpec::node_count() const {
  std::size_t c = 1;
  for (int s : shape) c *= static_cast<std::size_t>(s);
  return c;
}

std::size_t GridSpec::flat_index(std::span<const int> index) const {
  std::size_t f = 0;
  for (std::size_t a = 0; a < shape.size(); ++a)
    f = f * static_cast<std::size_t>(shape[a]) + static_cast<std::size_t>(index[a]);
  return f;
}

Vector GridSpec::node(std::span<const int> index) const {
  Vector x(dimension());
  for (int a = 0; a < dimension(); ++a) x[a] = origin[a] + spacing[a] * index[static_cast<std::size_t>(a)];
  return x;
}

std::optional<std::vector<int>> GridSpec::locate(const Vector& x) const {
  if (x.size() != dimension()) return std::nullopt;
  std::vector<int> idx(shape.size());
  for (int a = 0; a < dimension(); ++a) {
    const double t = (x[a] - origin[a]) / spacing[a];
    const double r = std::round(t);
    if (std::abs(t - r) > 1e-8 || r < 0 || r > shape[static_cast<std::size_t>(a)] - 1) return std::nullopt;
    idx[static_cast<std::size_t>(a)] = static_cast<int>(r);
  }
  return idx;
}

AffineDomain GridSpec::domain() const {
  Vector hi(dimension());
  for (int a = 0; a < dimension(); ++a) hi[a] = origin[a] + spacing[a] * (shape[static_cast<std::size_t>(a)] - 1);
  return AffineDomain::box(origin, hi);
}

GridSpec GridSpec::covering(const Vector& lower, const Vector& upper, double h) {
  if (lower.size() != upper.size() || !(h > 0.0)) fail(ErrorKind::InvalidParams, "GridSpec", "bad covering request");
  GridSpec spec;
  spec.origin = lower;
  spec.spacing = Vector::Constant(lower.size(), h);
  for (Eigen::Index a = 0; a < lower.size(); ++a) {
    const double cells = (upper[a] - lower[a]) / h;
    const double r = std::round(cells);
    if (std::abs(cells - r) > 1e-9 * std::max(1.0, r) || r < 2)
      fail(ErrorKind::InvalidParams, "GridSpec", "extent on axis " + std::to_string(a) + " is not a multiple of h");
    spec.shape.push_back(static_cast<int>(r) + 1);
  }
  return spec;
}

void GridSpec::validate() const {
  const auto n = static_cast<Eigen::Index>(shape.size());
  if (n < 1 || origin.size() != n || spacing.size() != n)
    fail(ErrorKind::InvalidParams, "GridSpec", "shape, origin and spacing must share the dimension");
  for (Eigen::Index a = 0; a < n; ++a) {
    if (shape[static_cast<std::size_t>(a)] < 2) fail(ErrorKind::InvalidParams, "GridSpec", "need >= 2 nodes per axis");
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]) || !std::isfinite(origin[a]))
      fail(ErrorKind::InvalidParams, "GridSpec", "spacing must be positive and finite");
  }
}

int stencil_radius(int derivative, int accuracy) {
  if (derivative == 0) return 0;
  return (derivative + 1) / 2 + accuracy / 2 - 1;
}

const std::vector<double>& central_stencil(int derivative, int accuracy) {
  if (derivative < 0 || derivative > kMaxJetOrder || (accuracy != 2 && accuracy != 4))
    fail(ErrorKind::OrderUnsupported, "central_stencil", "derivative 0..5 with accuracy 2 or 4");
  // Moment conditions sum_j c_j j^m = m! delta_{m,d} solved once in long double.
  static const auto table = [] {
    std::array<std::array<std::vector<double>, 2>, kMaxJetOrder + 1> t;
    for (int d = 0; d <= kMaxJetOrder; ++d) {
      for (int p : {2, 4}) {
        const int r = stencil_radius(d, p);
        const int m = 2 * r + 1;
        std::vector<std::vector<long double>> a(static_cast<std::size_t>(m), std::vector<long double>(m + 1, 0.0L));
        for (int row = 0; row < m; ++row) {
          for (int col = 0; col < m; ++col) a[row][col] = std::pow(static_cast<long double>(col - r), row);
          long double fact = 1.0L;
          for (int j = 2; j <= d; ++j) fact *= j;
          a[row][m] = row == d ? fact : 0.0L;
        }
        for (int col = 0; col < m; ++col) {
          int piv = col;
          for (int row = col + 1; row < m; ++row)
            if (std::fabs(a[row][col]) > std::fabs(a[piv][col])) piv = row;
          std::swap(a[col], a[piv]);
          for (int row = 0; row < m; ++row) {
            if (row == col) continue;
            const long double f = a[row][col] / a[col][col];
            for (int k = col; k <= m; ++k) a[row][k] -= f * a[col][k];
          }
        }
        std::vector<double> c(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) c[j] = static_cast<double>(a[j][m] / a[j][j]);
        t[d][p == 2 ? 0 : 1] = std::move(c);
      }
    }
    return t;
  }();
  return table[static_cast<std::size_t>(derivative)][accuracy == 2 ? 0 : 1];
}

namespace {

class GridSource final : public PotentialSource {
 public:
  explicit GridSource(GridData data) : data_(std::move(data)) {}

  int dimension() const override { return data_.spec.dimension(); }
  int max_order() const override { return data_.stencil_order == 4 ? 5 : 4; }

  void validate_point(const Vector& x, int order) const override {
    const auto idx = data_.spec.locate(x);
    if (!idx) fail(ErrorKind::PointOffGrid, "evaluate_jet", "point " + format_point(x) + " is not a grid node");
    const int r = stencil_radius(order, data_.stencil_order);
    for (int a = 0; a < dimension(); ++a) {
      const int i = (*idx)[static_cast<std::size_t>(a)];
      if (i - r < 0 || i + r > data_.spec.shape[static_cast<std::size_t>(a)] - 1)
        fail(ErrorKind::InsufficientMargin, "evaluate_jet",
             "point " + format_point(x) + " lacks a stencil margin of " + std::to_string(r) + " nodes");
    }
  }

  std::vector<Tensor> derivatives(const Vector& x, int order) const override {
    const auto idx = *data_.spec.locate(x);
    std::vector<Tensor> out;
    for (int k = 0; k <= order; ++k)
      out.push_back(symmetric_tensor(k, dimension(), [&](const std::vector<int>& counts) {
        return apply_stencil(idx, counts);
      }));
    return out;
  }

  std::string describe() const override {
    std::string s = "grid(";
    for (std::size_t a = 0; a < data_.spec.shape.size(); ++a) s += (a ? "x" : "") + std::to_string(data_.spec.shape[a]);
    return s + ", order " + std::to_string(data_.stencil_order) + ")";
  }

  const GridData& data() const { return data_; }

 private:
  double apply_stencil(const std::vector<int>& center, const std::vector<int>& counts) const {
    const int n = dimension();
    std::vector<int> node = center;
    double scale = 1.0;
    for (int a = 0; a < n; ++a) scale *= std::pow(data_.spec.spacing[a], counts[static_cast<std::size_t>(a)]);
    // Recursive tensor-product sum over axes.
    std::function<double(int)> rec = [&](int axis) -> double {
      if (axis == n) return data_.values[data_.spec.flat_index(node)];
      const int d = counts[static_cast<std::size_t>(axis)];
      if (d == 0) return rec(axis + 1);
      const auto& c = central_stencil(d, data_.stencil_order);
      const int r = stencil_radius(d, data_.stencil_order);
      double s = 0.0;
      for (int o = -r; o <= r; ++o) {
        const double w = c[static_cast<std::size_t>(o + r)];
        if (w == 0.0) continue;
        node[static_cast<std::size_t>(axis)] = center[static_cast<std::size_t>(axis)] + o;
        s += w * rec(axis + 1);
      }
      node[static_cast<std::size_t>(axis)] = center[static_cast<std::size_t>(axis)];
      return s;
    };
    return rec(0) / scale;
  }

  GridData data_;
};

}  // namespace

PotentialField make_grid_potential(GridSpec spec, std::vector<double> values, int stencil_order,
                                   std::optional<WeightData> weights) {
  spec.validate();
  if (stencil_order != 2 && stencil_order != 4)
    fail(ErrorKind::InvalidParams, "make_grid_potential", "stencil order must be 2 or 4");
  if (values.size() != spec.node_count())
    fail(ErrorKind::InvalidParams, "make_grid_potential", "value count does not match the grid shape");
  for (double v : values)
    if (!std::isfinite(v)) fail(ErrorKind::InvalidParams, "make_grid_potential", "non-finite grid value");
  AffineDomain domain = spec.domain();
  return PotentialField(domain, std::make_shared<GridSource>(GridData{std::move(spec), std::move(values), stencil_order}),
                        Representation::Grid, std::move(weights));
}

PotentialField sample_onto_grid(const PotentialField& field, const GridSpec& spec, int stencil_order) {
  spec.validate();
  if (spec.dimension() != field.dimension())
    fail(ErrorKind::InvalidParams, "sample_onto_grid", "grid dimension does not match the field");
  std::vector<double> values(spec.node_count());
  std::vector<int> idx(static_cast<std::size_t>(spec.dimension()), 0);
  for (std::size_t f = 0; f < values.size(); ++f) {
    const Vector x = spec.node(idx);
    if (!field.domain().contains(x))
      fail(ErrorKind::PointOutsideDomain, "sample_onto_grid", "grid node " + format_point(x) + " is outside the field domain");
    field.source().validate_point(x, 0);
    values[f] = field.source().derivatives(x, 0)[0]();
    for (int a = spec.dimension() - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < spec.shape[static_cast<std::size_t>(a)]) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
  return make_grid_potential(spec, std::move(values), stencil_order, field.weights());
}

const GridData* grid_data(const PotentialField& field) {
  const auto* g = dynamic_cast<const GridSource*>(&field.source());
  return g ? &g->data() : nullptr;
}

// ---------------------------------------------------------------------------
// Jets

JetEvaluation evaluate_jet(const PotentialField& field, const Vector& point, int order) {
  const int n = field.dimension();
  if (point.size() != n)
    fail(ErrorKind::InvalidParams, "evaluate_jet", "point has dimension " + std::to_string(point.size()) +
                                                       ", field has " + std::to_string(n));
  if (order < 0 || order > kMaxJetOrder || order > field.source().max_order())
    fail(ErrorKind::OrderUnsupported, "evaluate_jet",
         "order " + std::to_string(order) + " not supported by " + field.describe());
  if (!field.domain().contains(point))
    fail(ErrorKind::PointOutsideDomain, "evaluate_jet", "point " + format_point(point) + " is not interior");
  field.source().validate_point(point, order);

  auto d = field.source().derivatives(point, order);
  JetEvaluation jet;
  jet.point = point;
  jet.order = order;
  jet.value = d[0]();
  if (order >= 1) {
    jet.grad.resize(n);
    for (int i = 0; i < n; ++i) jet.grad[i] = d[1](i);
  }
  if (order >= 2) {
    jet.hess.resize(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) jet.hess(i, j) = d[2](i, j);
    jet.hess = 0.5 * (jet.hess + jet.hess.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(jet.hess);
    const double min_eig = eig.eigenvalues().minCoeff();
    if (!(min_eig > kPdTolerance)) {
      std::ostringstream os;
      os.precision(17);
      os << "smallest Hessian eigenvalue " << min_eig << " at " << format_point(point);
      fail(ErrorKind::HessianNotPositiveDefinite, "evaluate_jet", os.str());
    }
    const Matrix& q = eig.eigenvectors();
    jet.inverse_hess = q * eig.eigenvalues().cwiseInverse().asDiagonal() * q.transpose();
    jet.log_det = eig.eigenvalues().array().log().sum();
  }
  if (order >= 3) jet.third = std::move(d[3]);
  if (order >= 4) jet.fourth = std::move(d[4]);
  if (order >= 5) jet.fifth = std::move(d[5]);
  return jet;
}

Vector moment_coordinates(const PotentialField& field, const Vector& point) {
  return evaluate_jet(field, point, 1).grad;
}

std::vector<Vector> sample_interior(const AffineDomain& domain, int count, std::uint64_t seed, double half_width,
                                    double margin_fraction) {
  const int n = domain.dimension();
  Vector lo(n), hi(n);
  for (int a = 0; a < n; ++a) {
    const double l = domain.lower()[a];
    const double u = domain.upper()[a];
    if (std::isfinite(l) && std::isfinite(u)) {
      lo[a] = l;
      hi[a] = u;
    } else if (std::isfinite(l)) {
      lo[a] = l;
      hi[a] = l + 2.0 * half_width;
    } else if (std::isfinite(u)) {
      lo[a] = u - 2.0 * half_width;
      hi[a] = u;
    } else {
      lo[a] = -half_width;
      hi[a] = half_width;
    }
    const double pad = margin_fraction * (hi[a] - lo[a]);
    lo[a] += pad;
    hi[a] -= pad;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vector> pts;
  pts.reserve(static_cast<std::size_t>(count));
  const double shrink = 1.0 - margin_fraction;
  while (static_cast<int>(pts.size()) < count) {
    Vector x(n);
    for (int a = 0; a < n; ++a) x[a] = lo[a] + (hi[a] - lo[a]) * unit(rng);
    if (domain.shape() == AffineDomain::Shape::Ball && (x - domain.center()).norm() >= shrink * domain.radius())
      continue;
    if (domain.contains(x)) pts.push_back(std::move(x));
  }
  return pts;
}

}  // namespace toriclab
