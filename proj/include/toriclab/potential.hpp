#pragma once

#include "toriclab/tensor.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace toriclab {

/// Smallest Hessian eigenvalue accepted as strictly convex.
inline constexpr double kPdTolerance = 1e-10;
inline constexpr int kMaxJetOrder = 5;

/// Open convex subset of R^n: an axis-aligned box (bounds may be infinite)
/// or a Euclidean ball.
class AffineDomain {
 public:
  enum class Shape { Box, Ball };

  static AffineDomain box(Vector lower, Vector upper);
  static AffineDomain whole_space(int dimension);
  static AffineDomain interval(double lower, double upper);
  static AffineDomain ball(Vector center, double radius);

  int dimension() const noexcept { return static_cast<int>(lower_.size()); }
  Shape shape() const noexcept { return shape_; }
  bool is_box() const noexcept { return shape_ == Shape::Box; }

  const Vector& lower() const noexcept { return lower_; }
  const Vector& upper() const noexcept { return upper_; }
  const Vector& center() const noexcept { return center_; }
  double radius() const noexcept { return radius_; }

  /// Strict membership; boundary points are outside.
  bool contains(const Vector& x) const;

  /// Cartesian product, coordinates of `other` appended. Boxes only.
  AffineDomain product(const AffineDomain& other) const;
  /// Intersection; supported for box/box and for a ball against a box
  /// containing it.
  AffineDomain intersect(const AffineDomain& other) const;

 private:
  AffineDomain() = default;

  Shape shape_ = Shape::Box;
  Vector lower_;
  Vector upper_;
  Vector center_;
  double radius_ = 0.0;
};

/// Soliton data (v, xi, c) of log det D^2u = -v.x + Du.xi + c.
struct WeightData {
  Vector v;
  Vector xi;
  double c = 0.0;

  int dimension() const noexcept { return static_cast<int>(v.size()); }
  static WeightData zero(int dimension);
  /// Concatenates components and adds the constants.
  static WeightData concat(const WeightData& a, const WeightData& b);
};

/// Derivatives of u at a point up to `order`, plus g = D^2u, its inverse and
/// log det. Higher tensors are empty when not requested.
struct JetEvaluation {
  Vector point;
  int order = 0;
  double value = 0.0;
  Vector grad;
  Matrix hess;
  Matrix inverse_hess;
  double log_det = 0.0;
  Tensor third;
  Tensor fourth;
  Tensor fifth;

  int dimension() const noexcept { return static_cast<int>(point.size()); }
};

/// Value, gradient and Hessian of an auxiliary scalar field in the affine
/// coordinates.
struct ScalarJet {
  double value = 0.0;
  Vector grad;
  Matrix hess;
};

/// Backend that produces coordinate derivative tensors of a potential.
class PotentialSource {
 public:
  virtual ~PotentialSource() = default;

  virtual int dimension() const = 0;
  virtual int max_order() const = 0;
  /// Throws if `x` cannot be evaluated at `order` beyond plain domain
  /// membership (grid alignment, stencil margin).
  virtual void validate_point(const Vector& x, int order) const;
  /// Tensors of rank 0..order at `x`.
  virtual std::vector<Tensor> derivatives(const Vector& x, int order) const = 0;
  virtual std::string describe() const = 0;
};

enum class Representation { Analytic, Grid };

/// Strictly convex potential on an affine domain. Immutable; copies share the
/// backend.
class PotentialField {
 public:
  PotentialField(AffineDomain domain, std::shared_ptr<const PotentialSource> source,
                 Representation representation, std::optional<WeightData> weights = std::nullopt);

  const AffineDomain& domain() const noexcept { return domain_; }
  int dimension() const noexcept { return domain_.dimension(); }
  Representation representation() const noexcept { return representation_; }
  bool is_analytic() const noexcept { return representation_ == Representation::Analytic; }
  const PotentialSource& source() const noexcept { return *source_; }
  const std::shared_ptr<const PotentialSource>& source_ptr() const noexcept { return source_; }

  /// Weights (v, xi, c) for which u is known to solve the weighted
  /// Monge-Ampere equation, when certified.
  const std::optional<WeightData>& weights() const noexcept { return weights_; }
  PotentialField with_weights(std::optional<WeightData> weights) const;

  std::string describe() const { return source_->describe(); }

 private:
  AffineDomain domain_;
  std::shared_ptr<const PotentialSource> source_;
  Representation representation_;
  std::optional<WeightData> weights_;
};

// Built-in analytic families. Each certified family solves the weighted
// Monge-Ampere equation exactly with the attached weights.

/// u = 1/2 x^T A x + b.x on R^n; weights (0, 0, log det A).
PotentialField make_quadratic(const Matrix& a, const Vector& b);
PotentialField make_quadratic(const Matrix& a);
/// u = scale * exp(-v x) on R; weights (v, 0, log(scale v^2)).
PotentialField make_exp1d(double v, double scale = 1.0);
/// u = (x+K) ln(x+K) - x on x > -K; weights (0, -1, 0).
PotentialField make_xlogx1d(double k);
/// u(x_1, ..., x_m) = sum_i u_i(x_i) with each factor on its own coordinate
/// block. Certified iff every factor is.
PotentialField make_product(std::span<const PotentialField> factors);

/// One monomial coef * prod x_i^{exponents_i}.
struct Monomial {
  double coef = 0.0;
  std::vector<int> exponents;
};
/// Polynomial potential on the given domain (default R^n). Not certified.
PotentialField make_polynomial(int dimension, std::vector<Monomial> terms,
                               std::optional<AffineDomain> domain = std::nullopt);
/// Pointwise sum u_1 + u_2 + ... on the intersection of the domains. Not
/// certified.
PotentialField make_sum(std::span<const PotentialField> terms);

/// Numeric-parameter front end:
///   quadratic  [n, A (n*n row-major), b (n, optional)]
///   exp1d      [v, scale (optional, default 1)]
///   xlogx1d    [K]
PotentialField builtin_family(const std::string& name, std::span<const double> params);

/// Uniform rectangular grid; values are stored row-major, last axis fastest.
struct GridSpec {
  std::vector<int> shape;
  Vector origin;
  Vector spacing;

  int dimension() const noexcept { return static_cast<int>(shape.size()); }
  std::size_t node_count() const;
  std::size_t flat_index(std::span<const int> index) const;
  Vector node(std::span<const int> index) const;
  /// Node index of `x` if it lies on a node within 1e-8 of the spacing.
  std::optional<std::vector<int>> locate(const Vector& x) const;
  /// Open box spanned by the grid.
  AffineDomain domain() const;
  /// Builds the grid covering [lower, upper] with spacing h per axis.
  static GridSpec covering(const Vector& lower, const Vector& upper, double h);
  void validate() const;
};

/// Central-difference weights for the `derivative`-th derivative with the
/// given accuracy order (2 or 4), at offsets -r..r, unscaled by h.
const std::vector<double>& central_stencil(int derivative, int accuracy);
int stencil_radius(int derivative, int accuracy);

/// Grid-backed potential; derivatives by tensor products of central stencils.
/// Jets are available at grid nodes with enough margin for the stencil.
PotentialField make_grid_potential(GridSpec spec, std::vector<double> values, int stencil_order = 2,
                                   std::optional<WeightData> weights = std::nullopt);
/// Samples `field` at every node of `spec` (all nodes must lie in the
/// field's domain) and keeps the field's certified weights.
PotentialField sample_onto_grid(const PotentialField& field, const GridSpec& spec, int stencil_order = 2);

/// Grid data behind a grid field, or nullptr for analytic fields.
struct GridData {
  GridSpec spec;
  std::vector<double> values;
  int stencil_order = 2;
};
const GridData* grid_data(const PotentialField& field);

JetEvaluation evaluate_jet(const PotentialField& field, const Vector& point, int order);
/// Legendre coordinates y = Du at the point.
Vector moment_coordinates(const PotentialField& field, const Vector& point);

/// Seeded uniform samples inside the domain, clipped to [-half_width,
/// half_width] on unbounded axes and pulled in from the boundary by
/// `margin_fraction` of each axis extent.
std::vector<Vector> sample_interior(const AffineDomain& domain, int count, std::uint64_t seed,
                                    double half_width = 1.0, double margin_fraction = 0.05);

}  // namespace toriclab
