#include "toriclab/io.hpp"

#include "toriclab/error.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace toriclab {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const char* op, const std::string& detail) {
  throw Error(ErrorKind::ConfigError, "io", op, detail);
}

[[noreturn]] void io_error(const char* op, const std::string& detail) {
  throw Error(ErrorKind::IoError, "io", op, detail);
}

const Json& member(const Json& j, const std::string& key, const char* op) {
  if (!j.is_object()) config_error(op, "expected an object holding '" + key + "'");
  const auto it = j.find(key);
  if (it == j.end()) config_error(op, "missing key '" + key + "'");
  return *it;
}

double number(const Json& j, const std::string& key, const char* op) {
  if (!j.is_number()) config_error(op, "'" + key + "' must be a number");
  return j.get<double>();
}

double number_or(const Json& j, const std::string& key, double fallback, const char* op) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : number(*it, key, op);
}

int integer(const Json& j, const std::string& key, const char* op) {
  if (!j.is_number_integer()) config_error(op, "'" + key + "' must be an integer");
  return j.get<int>();
}

std::string string_member(const Json& j, const std::string& key, const char* op) {
  const Json& s = member(j, key, op);
  if (!s.is_string()) config_error(op, "'" + key + "' must be a string");
  return s.get<std::string>();
}

// Bounds may use null for an infinite end.
Vector bound_vector(const Json& j, const std::string& key, double infinity) {
  if (!j.is_array()) config_error("domain_from_json", "'" + key + "' must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].is_null()) {
      v[static_cast<Eigen::Index>(i)] = infinity;
    } else {
      v[static_cast<Eigen::Index>(i)] = number(j[i], key, "domain_from_json");
    }
  }
  return v;
}

std::vector<int> int_array(const Json& j, const std::string& key, const char* op) {
  if (!j.is_array()) config_error(op, "'" + key + "' must be an array");
  std::vector<int> out;
  for (const auto& e : j) out.push_back(integer(e, key, op));
  return out;
}

void write_f64_le(std::ostream& out, const std::vector<double>& values) {
  for (double x : values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
    out.write(bytes, 8);
  }
}

std::vector<double> read_f64_le(std::istream& in, std::size_t count) {
  std::vector<double> values(count);
  unsigned char bytes[8];
  for (std::size_t i = 0; i < count; ++i) {
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) io_error("read_grid_file", "value array is shorter than the shape");
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | bytes[b];
    values[i] = std::bit_cast<double>(bits);
  }
  if (in.peek() != std::char_traits<char>::eof()) io_error("read_grid_file", "value array is longer than the shape");
  return values;
}

bool same_grid(const GridSpec& a, const GridSpec& b) {
  if (a.shape != b.shape) return false;
  for (int i = 0; i < a.dimension(); ++i) {
    const double tol = 1e-12 * std::max(1.0, std::abs(a.spacing[i]) * a.shape[static_cast<std::size_t>(i)]);
    if (std::abs(a.origin[i] - b.origin[i]) > tol || std::abs(a.spacing[i] - b.spacing[i]) > tol) return false;
  }
  return true;
}

std::vector<double> eval_on_nodes(const PotentialField& field, const GridSpec& spec, bool boundary_only) {
  std::vector<double> out(spec.node_count(), 0.0);
  const int n = spec.dimension();
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  for (std::size_t f = 0; f < spec.node_count(); ++f) {
    bool on_boundary = false;
    for (int a = 0; a < n; ++a) {
      const int i = idx[static_cast<std::size_t>(a)];
      on_boundary = on_boundary || i == 0 || i == spec.shape[static_cast<std::size_t>(a)] - 1;
    }
    if (on_boundary || !boundary_only) out[f] = evaluate_jet(field, spec.node(idx), 0).value;
    for (int a = n - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < spec.shape[static_cast<std::size_t>(a)]) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
  return out;
}

// Full-grid values from {"grid": file}, {"values": [...]} or a field spec.
std::vector<double> node_values(const Json& j, const GridSpec& spec, const fs::path& base_dir, bool boundary_only,
                                const char* what) {
  if (j.is_object() && j.contains("values")) {
    const Json& vals = j["values"];
    if (!vals.is_array() || vals.size() != spec.node_count())
      config_error("problem_from_json", std::string(what) + ".values must hold one number per grid node (" +
                                            std::to_string(spec.node_count()) + ")");
    std::vector<double> out;
    for (const auto& e : vals) out.push_back(number(e, what, "problem_from_json"));
    return out;
  }
  if (j.is_object() && j.contains("grid")) {
    const fs::path header = base_dir / string_member(j, "grid", "problem_from_json");
    GridFile g = read_grid_file(header);
    if (same_grid(g.grid.spec, spec)) return std::move(g.grid.values);
  }
  return eval_on_nodes(field_from_json(j, base_dir), spec, boundary_only);
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid files

GridFile read_grid_file(const fs::path& header) {
  const Json j = read_json_file(header);
  const char* op = "read_grid_file";
  GridFile out;
  GridSpec& spec = out.grid.spec;
  spec.shape = int_array(member(j, "shape", op), "shape", op);
  const int n = static_cast<int>(spec.shape.size());
  spec.origin = vector_from_json(member(j, "origin", op), "origin", n);
  spec.spacing = vector_from_json(member(j, "spacing", op), "spacing", n);
  try {
    spec.validate();
  } catch (const Error& e) {
    config_error(op, "invalid grid header: " + e.detail());
  }
  out.grid.stencil_order = j.contains("stencil_order") ? integer(j["stencil_order"], "stencil_order", op) : 2;
  if (out.grid.stencil_order != 2 && out.grid.stencil_order != 4) config_error(op, "stencil_order must be 2 or 4");
  if (j.contains("weights")) out.weights = weights_from_json(j["weights"], n);

  const fs::path data = header.parent_path() / string_member(j, "data", op);
  std::ifstream in(data, std::ios::binary);
  if (!in) io_error(op, "cannot open value array " + data.string());
  out.grid.values = read_f64_le(in, spec.node_count());
  return out;
}

void write_grid_file(const fs::path& header, const GridData& grid, const std::optional<WeightData>& weights,
                     const std::string& data_name) {
  if (grid.values.size() != grid.spec.node_count())
    throw Error(ErrorKind::InvalidParams, "io", "write_grid_file", "value count does not match the shape");
  const std::string name = data_name.empty() ? header.stem().string() + ".bin" : data_name;
  Json j;
  j["shape"] = grid.spec.shape;
  j["origin"] = vector_json(grid.spec.origin);
  j["spacing"] = vector_json(grid.spec.spacing);
  j["stencil_order"] = grid.stencil_order;
  j["data"] = name;
  if (weights) j["weights"] = *weights;
  write_text_file(header, dump_json(j));

  const fs::path data = header.parent_path() / name;
  std::ofstream out(data, std::ios::binary | std::ios::trunc);
  if (!out) io_error("write_grid_file", "cannot open " + data.string());
  write_f64_le(out, grid.values);
  if (!out) io_error("write_grid_file", "write failed for " + data.string());
}

PotentialField load_grid_potential(const fs::path& header) {
  GridFile g = read_grid_file(header);
  return make_grid_potential(std::move(g.grid.spec), std::move(g.grid.values), g.grid.stencil_order, g.weights);
}

// ---------------------------------------------------------------------------
// Config decoding

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) config_error("read_json_file", "cannot open " + path.string());
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    config_error("read_json_file", path.string() + ": " + e.what());
  }
}

Vector vector_from_json(const Json& j, const std::string& key, int expected_size) {
  if (!j.is_array()) config_error("vector_from_json", "'" + key + "' must be an array of numbers");
  if (expected_size >= 0 && j.size() != static_cast<std::size_t>(expected_size))
    config_error("vector_from_json",
                 "'" + key + "' must have " + std::to_string(expected_size) + " entries, got " + std::to_string(j.size()));
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], key, "vector_from_json");
  return v;
}

Matrix matrix_from_json(const Json& j, const std::string& key) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    config_error("matrix_from_json", "'" + key + "' must be an array of rows");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vector row = vector_from_json(j[r], key, static_cast<int>(cols));
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

AffineDomain domain_from_json(const Json& j) {
  const char* op = "domain_from_json";
  const double inf = std::numeric_limits<double>::infinity();
  try {
    if (j.is_object() && j.contains("box")) {
      const Json& b = j["box"];
      return AffineDomain::box(bound_vector(member(b, "lower", op), "lower", -inf),
                               bound_vector(member(b, "upper", op), "upper", inf));
    }
    if (j.is_object() && j.contains("ball")) {
      const Json& b = j["ball"];
      return AffineDomain::ball(vector_from_json(member(b, "center", op), "center"),
                                number(member(b, "radius", op), "radius", op));
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    config_error(op, e.what());
  }
  config_error(op, "domain must be {\"box\": ...} or {\"ball\": ...}");
}

WeightData weights_from_json(const Json& j, int dimension) {
  const char* op = "weights_from_json";
  if (!j.is_object()) config_error(op, "weights must be an object with v, xi, c");
  WeightData w = WeightData::zero(dimension);
  if (j.contains("v")) w.v = vector_from_json(j["v"], "v", dimension);
  if (j.contains("xi")) w.xi = vector_from_json(j["xi"], "xi", dimension);
  w.c = number_or(j, "c", 0.0, op);
  return w;
}

std::vector<Vector> points_from_json(const Json& j, int dimension) {
  if (!j.is_array()) config_error("points_from_json", "points must be an array of coordinate arrays");
  std::vector<Vector> pts;
  for (const auto& p : j) pts.push_back(vector_from_json(p, "points", dimension));
  return pts;
}

PotentialField field_from_json(const Json& j, const fs::path& base_dir) {
  const char* op = "field_from_json";
  if (!j.is_object()) config_error(op, "field spec must be an object");
  if (j.contains("grid")) return load_grid_potential(base_dir / string_member(j, "grid", op));
  const std::string family = string_member(j, "family", op);
  try {
    if (family == "quadratic") {
      const Matrix a = matrix_from_json(member(j, "A", op), "A");
      const Vector b = j.contains("b") ? vector_from_json(j["b"], "b", static_cast<int>(a.rows()))
                                       : Vector::Zero(a.rows());
      return make_quadratic(a, b);
    }
    if (family == "exp1d") return make_exp1d(number(member(j, "v", op), "v", op), number_or(j, "scale", 1.0, op));
    if (family == "xlogx1d") return make_xlogx1d(number(member(j, "K", op), "K", op));
    if (family == "product" || family == "sum") {
      const Json& parts = member(j, family == "product" ? "factors" : "terms", op);
      if (!parts.is_array() || parts.empty()) config_error(op, family + " needs a nonempty array of field specs");
      std::vector<PotentialField> fields;
      for (const auto& p : parts) fields.push_back(field_from_json(p, base_dir));
      return family == "product" ? make_product(fields) : make_sum(fields);
    }
    if (family == "polynomial") {
      const int n = integer(member(j, "dimension", op), "dimension", op);
      std::vector<Monomial> terms;
      for (const auto& t : member(j, "terms", op)) {
        terms.push_back(Monomial{number(member(t, "coef", op), "coef", op),
                                 int_array(member(t, "exponents", op), "exponents", op)});
      }
      std::optional<AffineDomain> domain;
      if (j.contains("domain")) domain = domain_from_json(j["domain"]);
      return make_polynomial(n, std::move(terms), std::move(domain));
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InvalidParams) throw;
    config_error(op, family + ": " + e.what());
  }
  config_error(op, "unknown family '" + family + "'");
}

ProblemConfig problem_from_json(const Json& j, const fs::path& base_dir) {
  const char* op = "problem_from_json";
  ProblemConfig cfg;
  MAProblem& p = cfg.problem;
  p.lower = vector_from_json(member(j, "lower", op), "lower");
  const int n = static_cast<int>(p.lower.size());
  p.upper = vector_from_json(member(j, "upper", op), "upper", n);
  p.h = number(member(j, "h", op), "h", op);
  p.weights = weights_from_json(member(j, "weights", op), n);
  cfg.tol = number_or(j, "tol", cfg.tol, op);
  if (j.contains("max_iter")) cfg.max_iter = integer(j["max_iter"], "max_iter", op);
  GridSpec spec;
  try {
    spec = p.grid();
  } catch (const Error& e) {
    config_error(op, e.what());
  }
  p.boundary = node_values(member(j, "boundary", op), spec, base_dir, true, "boundary");
  if (j.contains("initial_guess")) p.initial_guess = node_values(j["initial_guess"], spec, base_dir, false, "initial_guess");
  return cfg;
}

// ---------------------------------------------------------------------------
// Encoding

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json matrix_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return Json{{"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}};
}

Json tensor_json(const Tensor& t) {
  return Json{{"shape", std::vector<int>(static_cast<std::size_t>(t.rank()), t.dim())},
              {"data", std::vector<double>(t.data().begin(), t.data().end())}};
}

namespace {
template <class T>
Json optional_json(const std::optional<T>& x) {
  return x ? Json(*x) : Json(nullptr);
}
}  // namespace

void to_json(Json& j, const AffineDomain& d) {
  if (d.is_box()) {
    auto bound = [](const Vector& v) {
      Json a = Json::array();
      for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(std::isfinite(v[i]) ? Json(v[i]) : Json(nullptr));
      return a;
    };
    j = Json{{"box", {{"lower", bound(d.lower())}, {"upper", bound(d.upper())}}}};
  } else {
    j = Json{{"ball", {{"center", vector_json(d.center())}, {"radius", d.radius()}}}};
  }
}

void to_json(Json& j, const WeightData& w) {
  j = Json{{"v", vector_json(w.v)}, {"xi", vector_json(w.xi)}, {"c", w.c}};
}

void to_json(Json& j, const GridSpec& s) {
  j = Json{{"shape", s.shape}, {"origin", vector_json(s.origin)}, {"spacing", vector_json(s.spacing)}};
}

void to_json(Json& j, const JetEvaluation& jet) {
  j = Json{{"point", vector_json(jet.point)}, {"order", jet.order},       {"value", jet.value},
           {"grad", vector_json(jet.grad)},   {"hess", matrix_json(jet.hess)}, {"log_det", jet.log_det}};
  if (!jet.third.empty()) j["third"] = tensor_json(jet.third);
  if (!jet.fourth.empty()) j["fourth"] = tensor_json(jet.fourth);
  if (!jet.fifth.empty()) j["fifth"] = tensor_json(jet.fifth);
}

void to_json(Json& j, const CurvatureBundle& c) {
  j = Json{{"christoffel", tensor_json(c.christoffel)},
           {"riemann", tensor_json(c.riemann)},
           {"ricci", matrix_json(c.ricci)},
           {"scalar", c.scalar}};
  if (c.refined) {
    j["refined"] = Json{{"contracted_christoffel", vector_json(c.refined->contracted_christoffel)},
                        {"ricci", matrix_json(c.refined->ricci)},
                        {"scalar", c.refined->scalar},
                        {"discrepancy", c.refined->discrepancy}};
  } else {
    j["refined"] = nullptr;
  }
}

void to_json(Json& j, const BochnerResult& b) {
  j = Json{{"sigma", b.sigma},
           {"weighted_laplacian", b.weighted_laplacian},
           {"refined_weighted_laplacian", b.refined_weighted_laplacian},
           {"slack", b.slack}};
}

void to_json(Json& j, const SolitonDiagnostics& d) {
  j = Json{{"point", vector_json(d.point)},
           {"ma_residual", d.ma_residual},
           {"identity_residual", vector_json(d.identity_residual)},
           {"phi", d.phi},
           {"grad_phi", vector_json(d.grad_phi)},
           {"hess_phi", matrix_json(d.hess_phi)},
           {"ric_phi", matrix_json(d.ric_phi)},
           {"ric_phi_rhs", matrix_json(d.ric_phi_rhs)},
           {"min_eig_ric_phi", d.min_eig_ric_phi},
           {"min_eig_ric_phi_rhs", d.min_eig_ric_phi_rhs},
           {"sigma", d.sigma},
           {"scalar_identity_residual", optional_json(d.scalar_identity_residual)},
           {"bochner", optional_json(d.bochner)}};
}

void to_json(Json& j, const ToricMetricSample& s) {
  j = Json{{"x", vector_json(s.x)},
           {"theta", vector_json(s.theta)},
           {"G", matrix_json(s.G)},
           {"G_inv", matrix_json(s.G_inv)},
           {"metric", matrix_json(s.metric)},
           {"complex_structure", matrix_json(s.complex_structure)},
           {"omega", matrix_json(s.omega)},
           {"moment", vector_json(s.moment)},
           {"f", s.f},
           {"soliton_residual", s.soliton_residual ? vector_json(*s.soliton_residual) : Json(nullptr)}};
}

void to_json(Json& j, const DarbouxVerdict& v) {
  j = Json{{"pass", v.pass}, {"max_deviation", v.max_deviation}, {"j_squared_deviation", v.j_squared_deviation}};
}

void to_json(Json& j, const FlatnessVerdict& v) {
  j = Json{{"flat", v.flat}, {"variation", v.variation}, {"verdict", v.verdict}};
}

void to_json(Json& j, const NewtonStep& s) {
  j = Json{{"iteration", s.iteration}, {"residual", s.residual}, {"damping", s.damping}, {"shift", s.shift}};
}

void to_json(Json& j, const MASolution& s) {
  j = Json{{"grid", s.spec},          {"weights", s.weights}, {"residual_norm", s.residual_norm},
           {"converged", s.converged}, {"iterations", s.log.size()}, {"log", s.log}};
}

void to_json(Json& j, const ScanSample& s) {
  j = Json{{"r", s.r},
           {"x", vector_json(s.x)},
           {"m_phi", s.m_phi},
           {"laplacian_r", s.laplacian_r},
           {"sigma", s.sigma},
           {"phi", s.phi},
           {"bochner_slack", optional_json(s.bochner_slack)}};
}

void to_json(Json& j, const RadialScanReport& r) {
  j = Json{{"dimension", r.dimension},
           {"p0", vector_json(r.p0)},
           {"direction", vector_json(r.direction)},
           {"step", r.step},
           {"monotone", r.monotone},
           {"max_increase", r.max_increase},
           {"max_radius", r.max_radius},
           {"truncated", r.truncated},
           {"stop_kind", r.stop_kind ? Json(std::string(to_string(*r.stop_kind))) : Json(nullptr)},
           {"stop_detail", r.stop_detail},
           {"samples", r.samples}};
}

void to_json(Json& j, const MeanCurvatureBound& b) {
  j = Json{{"holds", b.holds},
           {"c_phi", b.c_phi},
           {"tightest_ratio", b.tightest_ratio},
           {"worst_excess", b.worst_excess}};
}

void to_json(Json& j, const CutoffProfile& p) {
  j = Json{{"R", p.R},
           {"delta", p.delta},
           {"max_neg_deta", p.max_neg_deta},
           {"max_abs_d2eta", p.max_abs_d2eta},
           {"max_ratio", p.max_ratio},
           {"c0", p.c0},
           {"certified", p.certified}};
}

void to_json(Json& j, const LiouvilleEntry& e) {
  j = Json{{"R", e.R},
           {"feasible", e.feasible},
           {"product", e.feasible ? Json(e.product) : Json(nullptr)},
           {"error", e.error ? Json(std::string(to_string(*e.error))) : Json(nullptr)}};
}

void to_json(Json& j, const LiouvilleReport& r) {
  Json rays = Json::array();
  for (const auto& ray : r.rays) {
    rays.push_back(Json{{"direction", vector_json(ray.direction)},
                        {"max_radius", ray.max_radius},
                        {"truncated", ray.truncated},
                        {"stop_kind", ray.stop_kind ? Json(std::string(to_string(*ray.stop_kind))) : Json(nullptr)}});
  }
  j = Json{{"p0", vector_json(r.p0)},
           {"sigma_p0", r.sigma_p0},
           {"feasible_radius", r.feasible_radius},
           {"truncated", r.truncated},
           {"bounded", r.bounded},
           {"rays", std::move(rays)},
           {"entries", r.entries}};
}

void to_json(Json& j, const Error& e) {
  j = Json{{"kind", std::string(to_string(e.kind()))},
           {"module", e.module()},
           {"operation", e.operation()},
           {"detail", e.detail()}};
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw Error(ErrorKind::InvalidParams, "io", "CsvTable", "header must not be empty");
}

void CsvTable::add_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double x : values) cells.push_back(format_double(x));
  add_text_row(std::move(cells));
}

void CsvTable::add_text_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size())
    throw Error(ErrorKind::InvalidParams, "io", "CsvTable::add_row",
                "row has " + std::to_string(cells.size()) + " cells, header has " + std::to_string(header_.size()));
  rows_.push_back(std::move(cells));
}

void CsvTable::write(std::ostream& out) const {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
}

std::string CsvTable::str() const {
  std::ostringstream os;
  write(os);
  return os.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) io_error("write_text_file", "cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) io_error("write_text_file", "cannot open " + path.string());
  out << text;
  if (!out) io_error("write_text_file", "write failed for " + path.string());
}

}  // namespace toriclab
