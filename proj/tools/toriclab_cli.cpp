// toriclab command line: one JSON config in, CSV/JSON tables and a
// report.json out.
//
//   toriclab config.json [--out DIR] [--seed N] [--format csv|json]
//
// Exit status 0 on success, 1 when a computation fails, 2 when the config
// or the requested inputs are invalid.

#include "toriclab/error.hpp"
#include "toriclab/hessian_geometry.hpp"
#include "toriclab/io.hpp"
#include "toriclab/ma_solver.hpp"
#include "toriclab/potential.hpp"
#include "toriclab/rigidity.hpp"
#include "toriclab/soliton.hpp"
#include "toriclab/toric.hpp"

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

using namespace toriclab;
namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void config_error(const std::string& op, const std::string& detail) {
  throw Error(ErrorKind::ConfigError, "cli", op, detail);
}

struct RunConfig {
  std::string command;
  std::string mode;  // scan only
  Json raw;
  fs::path base_dir;
  fs::path out_dir;
  std::string format = "csv";
  std::string prefix;
  std::uint64_t seed = 0;
  int order = 3;

  std::optional<PotentialField> field;
  WeightData weights;
  bool certified = false;
  std::vector<Vector> points;
};

struct Artifacts {
  std::vector<std::string> files;
  Json summary = Json::object();
};

double min_eig(const Matrix& m) { return Eigen::SelfAdjointEigenSolver<Matrix>(m).eigenvalues().minCoeff(); }

std::vector<std::string> coord_columns(int n, const std::string& stem = "x") {
  std::vector<std::string> cols;
  for (int i = 1; i <= n; ++i) cols.push_back(stem + std::to_string(i));
  return cols;
}

std::vector<double> coords(const Vector& x) { return std::vector<double>(x.data(), x.data() + x.size()); }

std::string get_string(const Json& j, const std::string& key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) config_error("parse_config", "'" + key + "' must be a string");
  return j[key].get<std::string>();
}

double get_number(const Json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) config_error("parse_config", "'" + key + "' must be a number");
  return j[key].get<double>();
}

int get_int(const Json& j, const std::string& key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) config_error("parse_config", "'" + key + "' must be an integer");
  return j[key].get<int>();
}

// Portable seeded draws: raw 64-bit engine output only.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}
  std::size_t index(std::size_t bound) { return static_cast<std::size_t>(rng_() % bound); }
  double gaussian() {
    const double u1 = (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::mt19937_64 rng_;
};

// Grid fields only have jets at nodes; sample among the nodes with enough
// stencil margin.
std::vector<Vector> sample_grid_nodes(const PotentialField& field, int count, int order, std::uint64_t seed) {
  const GridData* g = grid_data(field);
  const GridSpec& spec = g->spec;
  std::vector<Vector> usable;
  std::vector<int> idx(spec.shape.size(), 0);
  for (std::size_t f = 0; f < spec.node_count(); ++f) {
    const Vector x = spec.node(idx);
    try {
      if (field.domain().contains(x)) {
        field.source().validate_point(x, order);
        usable.push_back(x);
      }
    } catch (const Error&) {
    }
    for (int a = spec.dimension() - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < spec.shape[static_cast<std::size_t>(a)]) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
  if (usable.empty()) config_error("sample", "grid has no node with enough margin for jet order " + std::to_string(order));
  Sampler s(seed);
  const std::size_t take = std::min(usable.size(), static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < take; ++i) std::swap(usable[i], usable[i + s.index(usable.size() - i)]);
  usable.resize(take);
  return usable;
}

std::vector<Vector> resolve_points(const RunConfig& cfg) {
  const PotentialField& field = *cfg.field;
  const int n = field.dimension();
  if (cfg.raw.contains("points")) return points_from_json(cfg.raw["points"], n);
  const Json s = cfg.raw.value("sample", Json::object());
  const int count = get_int(s, "count", 100);
  if (count < 1) config_error("sample", "count must be >= 1");
  if (field.representation() == Representation::Grid) return sample_grid_nodes(field, count, cfg.order, cfg.seed);
  return sample_interior(field.domain(), count, cfg.seed, get_number(s, "half_width", 1.0),
                         get_number(s, "margin", 0.05));
}

// Points named by the user must be evaluable; otherwise the request itself is
// invalid.
void validate_point(const PotentialField& field, const Vector& x, int order) {
  if (x.size() != field.dimension()) config_error("validate_point", "point has the wrong dimension");
  if (!field.domain().contains(x)) {
    std::string s;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += (i ? ", " : "") + format_double(x[i]);
    throw Error(ErrorKind::PointOutsideDomain, "cli", "validate_point", "x = (" + s + ") is not an interior point");
  }
  field.source().validate_point(x, order);
}

int default_order(const std::string& command, const PotentialField* field) {
  if (command == "jet" || command == "curvature" || command == "reconstruct") return 3;
  if (command == "verify" || command == "scan") return field ? std::min(5, field->source().max_order()) : 5;
  return 3;
}

// Fills `cfg` in order, so a failure still leaves whatever was resolved (the
// output directory in particular) for the report.
void prepare(RunConfig& cfg, const fs::path& config_path, const std::optional<std::string>& out,
             const std::optional<std::uint64_t>& seed, const std::optional<std::string>& format) {
  if (out) cfg.out_dir = *out;
  cfg.raw = read_json_file(config_path);
  if (!cfg.raw.is_object()) config_error("parse_config", "config must be a JSON object");
  cfg.base_dir = config_path.parent_path();
  cfg.command = get_string(cfg.raw, "command", "");
  static const std::vector<std::string> commands{"jet", "curvature", "verify", "solve", "reconstruct", "scan"};
  if (std::find(commands.begin(), commands.end(), cfg.command) == commands.end())
    config_error("parse_config", "command must be one of jet, curvature, verify, solve, reconstruct, scan");
  if (cfg.command == "scan") {
    cfg.mode = get_string(cfg.raw.value("scan", Json::object()), "mode", "radial");
    if (cfg.mode != "radial" && cfg.mode != "liouville" && cfg.mode != "rigidity" && cfg.mode != "cutoff")
      config_error("parse_config", "scan.mode must be radial, liouville, rigidity or cutoff");
  }

  const Json output = cfg.raw.value("output", Json::object());
  if (!out) cfg.out_dir = cfg.base_dir / get_string(output, "dir", "out");
  cfg.format = format ? *format : get_string(output, "format", "csv");
  if (cfg.format != "csv" && cfg.format != "json") config_error("parse_config", "format must be csv or json");
  cfg.prefix = get_string(output, "prefix", cfg.mode.empty() ? cfg.command : cfg.command + "_" + cfg.mode);
  if (seed) {
    cfg.seed = *seed;
  } else if (cfg.raw.contains("seed")) {
    if (!cfg.raw["seed"].is_number_unsigned()) config_error("parse_config", "seed must be a non-negative integer");
    cfg.seed = cfg.raw["seed"].get<std::uint64_t>();
  }

  const bool needs_field = cfg.command != "solve" && cfg.mode != "cutoff";
  if (cfg.raw.contains("field") != needs_field)
    config_error("parse_config", needs_field ? "exactly one field spec is required" : "this command takes no field");
  if (!needs_field) return;

  cfg.field = field_from_json(cfg.raw["field"], cfg.base_dir);
  const int n = cfg.field->dimension();
  if (cfg.raw.contains("weights")) {
    cfg.weights = weights_from_json(cfg.raw["weights"], n);
    const auto& fw = cfg.field->weights();
    cfg.certified = fw && fw->v == cfg.weights.v && fw->xi == cfg.weights.xi && fw->c == cfg.weights.c;
  } else if (cfg.field->weights()) {
    cfg.weights = *cfg.field->weights();
    cfg.certified = true;
  } else {
    cfg.weights = WeightData::zero(n);
  }
  cfg.order = get_int(cfg.raw, "order", default_order(cfg.command, &*cfg.field));
  if (cfg.order < 0 || cfg.order > kMaxJetOrder) config_error("parse_config", "order must lie in 0..5");
  if ((cfg.command == "curvature" || cfg.command == "verify") && cfg.order < 3)
    config_error("parse_config", cfg.command + " needs order >= 3");

  if (cfg.command == "scan" && cfg.mode != "rigidity") {
    const Vector p0 = vector_from_json(cfg.raw["scan"].contains("p0") ? cfg.raw["scan"]["p0"] : Json(nullptr), "scan.p0", n);
    validate_point(*cfg.field, p0, 0);
    cfg.points = {p0};
  } else {
    cfg.points = resolve_points(cfg);
    for (const auto& p : cfg.points) validate_point(*cfg.field, p, cfg.order);
  }
}

// ---------------------------------------------------------------------------
// Commands

void emit(const RunConfig& cfg, Artifacts& art, const std::string& name, const std::string& text) {
  write_text_file(cfg.out_dir / name, text);
  art.files.push_back(name);
}

void run_jet(const RunConfig& cfg, Artifacts& art) {
  const int n = cfg.field->dimension();
  auto header = coord_columns(n);
  header.push_back("value");
  for (const auto& c : coord_columns(n, "du")) header.push_back(c);
  header.insert(header.end(), {"log_det", "min_eig_hess"});
  CsvTable table(header);
  Json records = Json::array();
  for (const auto& p : cfg.points) {
    const JetEvaluation jet = evaluate_jet(*cfg.field, p, cfg.order);
    auto row = coords(p);
    row.push_back(jet.value);
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(cfg.order >= 1 ? jet.grad[i] : kNaN);
    row.push_back(cfg.order >= 2 ? jet.log_det : kNaN);
    row.push_back(cfg.order >= 2 ? min_eig(jet.hess) : kNaN);
    table.add_row(row);
    records.push_back(jet);
  }
  art.summary["points"] = cfg.points.size();
  if (cfg.format == "csv") emit(cfg, art, cfg.prefix + ".csv", table.str());
  else emit(cfg, art, cfg.prefix + ".json", dump_json(Json{{"jets", records}}));
}

void run_curvature(const RunConfig& cfg, Artifacts& art) {
  const int n = cfg.field->dimension();
  auto header = coord_columns(n);
  header.push_back("scalar");
  for (int i = 1; i <= n; ++i)
    for (int k = i; k <= n; ++k) header.push_back("ric" + std::to_string(i) + std::to_string(k));
  header.insert(header.end(), {"min_eig_ricci", "refined_discrepancy"});
  CsvTable table(header);
  Json records = Json::array();
  double worst_discrepancy = 0.0;
  for (const auto& p : cfg.points) {
    const JetEvaluation jet = evaluate_jet(*cfg.field, p, cfg.order);
    const CurvatureBundle c =
        curvature(jet, cfg.certified ? std::optional<WeightData>(cfg.weights) : std::nullopt);
    auto row = coords(p);
    row.push_back(c.scalar);
    for (int i = 0; i < n; ++i)
      for (int k = i; k < n; ++k) row.push_back(c.ricci(i, k));
    row.push_back(min_eig(c.ricci));
    row.push_back(c.refined ? c.refined->discrepancy : kNaN);
    if (c.refined) worst_discrepancy = std::max(worst_discrepancy, c.refined->discrepancy);
    table.add_row(row);
    records.push_back(Json{{"point", vector_json(p)}, {"curvature", c}});
  }
  art.summary["points"] = cfg.points.size();
  art.summary["max_refined_discrepancy"] = cfg.certified ? Json(worst_discrepancy) : Json(nullptr);
  if (cfg.format == "csv") emit(cfg, art, cfg.prefix + ".csv", table.str());
  else emit(cfg, art, cfg.prefix + ".json", dump_json(Json{{"records", records}}));
}

void run_verify(const RunConfig& cfg, Artifacts& art) {
  auto header = coord_columns(cfg.field->dimension());
  header.insert(header.end(), {"ma_residual", "sigma", "min_eig_ric_phi", "bochner_slack"});
  CsvTable table(header);
  Json records = Json::array();
  double max_ma = 0.0, max_identity = 0.0, min_ric = std::numeric_limits<double>::infinity();
  std::optional<double> min_slack;
  for (const auto& p : cfg.points) {
    const SolitonDiagnostics d = diagnose(evaluate_jet(*cfg.field, p, cfg.order), cfg.weights, cfg.certified);
    auto row = coords(p);
    row.insert(row.end(), {d.ma_residual, d.sigma, d.min_eig_ric_phi, d.bochner ? d.bochner->slack : kNaN});
    table.add_row(row);
    records.push_back(d);
    max_ma = std::max(max_ma, std::abs(d.ma_residual));
    max_identity = std::max(max_identity, d.identity_residual.cwiseAbs().maxCoeff());
    min_ric = std::min(min_ric, d.min_eig_ric_phi);
    if (d.bochner) min_slack = std::min(min_slack.value_or(d.bochner->slack), d.bochner->slack);
  }
  art.summary["points"] = cfg.points.size();
  art.summary["certified"] = cfg.certified;
  art.summary["max_abs_ma_residual"] = max_ma;
  art.summary["max_abs_identity_residual"] = max_identity;
  art.summary["min_eig_ric_phi"] = min_ric;
  art.summary["min_bochner_slack"] = min_slack ? Json(*min_slack) : Json(nullptr);
  if (cfg.format == "csv") emit(cfg, art, cfg.prefix + ".csv", table.str());
  else emit(cfg, art, cfg.prefix + ".json", dump_json(Json{{"diagnostics", records}}));
}

void run_reconstruct(const RunConfig& cfg, Artifacts& art) {
  const int n = cfg.field->dimension();
  std::optional<Vector> theta;
  if (cfg.raw.contains("theta")) theta = vector_from_json(cfg.raw["theta"], "theta", n);
  auto header = coord_columns(n);
  header.push_back("logdetG");
  for (const auto& c : coord_columns(n, "residual")) header.push_back(c);
  header.push_back("min_eig_metric");
  CsvTable table(header);
  Json records = Json::array();
  double max_res = 0.0, max_dev = 0.0;
  bool all_pass = true;
  for (const auto& p : cfg.points) {
    const JetEvaluation jet = evaluate_jet(*cfg.field, p, cfg.order);
    const ToricMetricSample s = assemble_metric(jet, cfg.weights, theta);
    const DarbouxVerdict v = darboux_check(s);
    auto row = coords(p);
    row.push_back(jet.log_det);
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(s.soliton_residual ? (*s.soliton_residual)[i] : kNaN);
    row.push_back(min_eig(s.metric));
    table.add_row(row);
    records.push_back(Json{{"sample", s}, {"darboux", v}});
    if (s.soliton_residual) max_res = std::max(max_res, s.soliton_residual->cwiseAbs().maxCoeff());
    max_dev = std::max(max_dev, v.max_deviation);
    all_pass = all_pass && v.pass;
  }
  art.summary["points"] = cfg.points.size();
  art.summary["max_abs_soliton_residual"] = max_res;
  art.summary["darboux_pass"] = all_pass;
  art.summary["max_darboux_deviation"] = max_dev;
  if (cfg.field->weights()) {
    const FlatnessVerdict f = flatness_check(*cfg.field, cfg.points);
    art.summary["flatness"] = f;
  }
  if (cfg.format == "csv") emit(cfg, art, cfg.prefix + ".csv", table.str());
  else emit(cfg, art, cfg.prefix + ".json", dump_json(Json{{"samples", records}}));
}

void run_solve(const RunConfig& cfg, Artifacts& art) {
  if (!cfg.raw.contains("solver")) config_error("parse_config", "solve needs a 'solver' block");
  const Json& sj = cfg.raw["solver"];
  ProblemConfig pc = problem_from_json(sj, cfg.base_dir);
  std::optional<PotentialField> exact;
  if (sj.contains("exact")) exact = field_from_json(sj["exact"], cfg.base_dir);

  const MASolution sol = solve_dirichlet(pc.problem, pc.tol, pc.max_iter);
  write_grid_file(cfg.out_dir / (cfg.prefix + "_solution.json"), GridData{sol.spec, sol.values, 2}, sol.weights);
  art.files.push_back(cfg.prefix + "_solution.json");
  art.files.push_back(cfg.prefix + "_solution.bin");

  CsvTable log({"iteration", "residual", "damping", "shift"});
  for (const auto& s : sol.log) log.add_row({double(s.iteration), s.residual, s.damping, s.shift});
  log.add_row({double(sol.log.size()), sol.residual_norm, kNaN, kNaN});

  const int n = sol.spec.dimension();
  auto header = coord_columns(n);
  header.insert(header.end(), {"u", "exact", "error"});
  CsvTable errors(header);
  Json error_rows = Json::array();
  double max_err = 0.0;
  if (exact) {
    std::vector<int> idx(sol.spec.shape.size(), 0);
    for (std::size_t f = 0; f < sol.spec.node_count(); ++f) {
      const Vector x = sol.spec.node(idx);
      const double ue = evaluate_jet(*exact, x, 0).value;
      const double err = sol.values[f] - ue;
      max_err = std::max(max_err, std::abs(err));
      auto row = coords(x);
      row.insert(row.end(), {sol.values[f], ue, err});
      errors.add_row(row);
      error_rows.push_back(Json{{"x", vector_json(x)}, {"u", sol.values[f]}, {"exact", ue}, {"error", err}});
      for (int a = n - 1; a >= 0; --a) {
        if (++idx[static_cast<std::size_t>(a)] < sol.spec.shape[static_cast<std::size_t>(a)]) break;
        idx[static_cast<std::size_t>(a)] = 0;
      }
    }
  }
  art.summary["converged"] = sol.converged;
  art.summary["iterations"] = sol.log.size();
  art.summary["residual_norm"] = sol.residual_norm;
  art.summary["max_abs_error"] = exact ? Json(max_err) : Json(nullptr);
  if (cfg.format == "csv") {
    emit(cfg, art, cfg.prefix + "_log.csv", log.str());
    if (exact) emit(cfg, art, cfg.prefix + "_error.csv", errors.str());
  } else {
    Json j = sol;
    j["errors"] = exact ? error_rows : Json(nullptr);
    emit(cfg, art, cfg.prefix + ".json", dump_json(j));
  }
}

std::vector<Vector> scan_directions(const RunConfig& cfg, const Json& sj) {
  const int n = cfg.field->dimension();
  if (sj.contains("directions")) {
    auto dirs = points_from_json(sj["directions"], n);
    for (const auto& d : dirs)
      if (!(d.norm() > 0.0)) config_error("parse_config", "scan directions must be nonzero");
    return dirs;
  }
  const int k = get_int(sj, "random_directions", 8);
  if (k < 1) config_error("parse_config", "random_directions must be >= 1");
  Sampler s(cfg.seed);
  std::vector<Vector> dirs;
  for (int i = 0; i < k; ++i) {
    Vector d(n);
    for (int a = 0; a < n; ++a) d[a] = s.gaussian();
    dirs.push_back(d / d.norm());
  }
  return dirs;
}

void run_radial(const RunConfig& cfg, const Json& sj, Artifacts& art) {
  ScanOptions opt;
  opt.step = get_number(sj, "step", opt.step);
  opt.max_steps = get_int(sj, "max_steps", opt.max_steps);
  const std::optional<double> c_given = sj.contains("C") ? std::optional<double>(get_number(sj, "C", 0.0)) : std::nullopt;
  CsvTable table({"ray", "r", "m_phi", "sigma", "bochner_slack"});
  Json rays = Json::array();
  bool monotone = true, bound = true, truncated = false;
  int ray = 0;
  for (const auto& d : scan_directions(cfg, sj)) {
    const RadialScanReport r = radial_scan(*cfg.field, cfg.weights, cfg.points.front(), d, opt);
    const MeanCurvatureBound b = mean_curvature_bound_check(r, c_given.value_or(max_abs_phi(r)));
    for (const auto& s : r.samples)
      table.add_row({double(ray), s.r, s.m_phi, s.sigma, s.bochner_slack.value_or(kNaN)});
    Json jr = r;
    jr["bound"] = b;
    rays.push_back(std::move(jr));
    monotone = monotone && r.monotone;
    bound = bound && b.holds;
    truncated = truncated || r.truncated;
    ++ray;
  }
  art.summary["rays"] = ray;
  art.summary["monotone"] = monotone;
  art.summary["bound_holds"] = bound;
  art.summary["truncated"] = truncated;
  if (cfg.format == "csv") emit(cfg, art, cfg.prefix + ".csv", table.str());
  else emit(cfg, art, cfg.prefix + ".json", dump_json(Json{{"rays", rays}}));
}

void run_liouville(const RunConfig& cfg, const Json& sj, Artifacts& art) {
  std::vector<double> radii{1.5, 2.0, 4.0, 8.0, 16.0};
  if (sj.contains("radii")) {
    const Vector r = vector_from_json(sj["radii"], "scan.radii");
    radii.assign(r.data(), r.data() + r.size());
  }
  const LiouvilleReport rep = liouville_scan(*cfg.field, cfg.weights, cfg.points.front(), radii, get_number(sj, "step", 1e-2));
  CsvTable table({"R", "feasible", "product"});
  for (const auto& e : rep.entries) table.add_row({e.R, e.feasible ? 1.0 : 0.0, e.feasible ? e.product : kNaN});
  art.summary["sigma_p0"] = rep.sigma_p0;
  art.summary["feasible_radius"] = rep.feasible_radius;
  art.summary["bounded"] = rep.bounded;
  art.summary["truncated"] = rep.truncated;
  if (cfg.format == "csv") emit(cfg, art, cfg.prefix + ".csv", table.str());
  else emit(cfg, art, cfg.prefix + ".json", dump_json(Json(rep)));
}

void run_rigidity(const RunConfig& cfg, Artifacts& art) {
  CsvTable table([&] {
    auto h = coord_columns(cfg.field->dimension());
    h.insert(h.end(), {"u", "sigma"});
    return h;
  }());
  double max_sigma = 0.0;
  Json records = Json::array();
  for (const auto& p : cfg.points) {
    const JetEvaluation jet = evaluate_jet(*cfg.field, p, 3);
    const double s = sigma(jet);
    max_sigma = std::max(max_sigma, s);
    auto row = coords(p);
    row.insert(row.end(), {jet.value, s});
    table.add_row(row);
    records.push_back(Json{{"x", vector_json(p)}, {"u", jet.value}, {"sigma", s}});
  }
  const double dev = quadratic_rigidity_deviation(*cfg.field, cfg.points);
  art.summary["points"] = cfg.points.size();
  art.summary["quadratic_deviation"] = dev;
  art.summary["max_sigma"] = max_sigma;
  if (cfg.format == "csv") emit(cfg, art, cfg.prefix + ".csv", table.str());
  else emit(cfg, art, cfg.prefix + ".json", dump_json(Json{{"samples", records}}));
}

void run_cutoff(const RunConfig& cfg, const Json& sj, Artifacts& art) {
  const CutoffProfile p =
      cutoff_eta(get_number(sj, "R", 2.0), get_number(sj, "delta", 0.5), get_int(sj, "samples", 1000));
  CsvTable table({"t", "eta", "deta", "d2eta", "ratio"});
  for (std::size_t i = 0; i < p.t.size(); ++i) table.add_row({p.t[i], p.eta[i], p.deta[i], p.d2eta[i], p.ratio[i]});
  art.summary["profile"] = p;
  if (cfg.format == "csv") emit(cfg, art, cfg.prefix + ".csv", table.str());
  else {
    Json j = p;
    j["t"] = p.t;
    j["eta"] = p.eta;
    j["deta"] = p.deta;
    j["d2eta"] = p.d2eta;
    j["ratio"] = p.ratio;
    emit(cfg, art, cfg.prefix + ".json", dump_json(j));
  }
}

void execute(const RunConfig& cfg, Artifacts& art) {
  if (cfg.command == "jet") return run_jet(cfg, art);
  if (cfg.command == "curvature") return run_curvature(cfg, art);
  if (cfg.command == "verify") return run_verify(cfg, art);
  if (cfg.command == "reconstruct") return run_reconstruct(cfg, art);
  if (cfg.command == "solve") return run_solve(cfg, art);
  const Json sj = cfg.raw.value("scan", Json::object());
  if (cfg.mode == "radial") return run_radial(cfg, sj, art);
  if (cfg.mode == "liouville") return run_liouville(cfg, sj, art);
  if (cfg.mode == "rigidity") return run_rigidity(cfg, art);
  return run_cutoff(cfg, sj, art);
}

void write_report(const fs::path& dir, const std::string& command, int code, const Json& error, const Artifacts& art) {
  const Json report{{"command", command},
                    {"status", code == 0 ? "ok" : "error"},
                    {"exit_code", code},
                    {"error", error},
                    {"artifacts", art.files},
                    {"summary", art.summary}};
  try {
    write_text_file(dir / "report.json", dump_json(report));
  } catch (const Error& e) {
    std::cerr << "toriclab: " << e.what() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted Monge-Ampere / toric soliton toolkit"};
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> format;
  app.add_option("config", config, "JSON run config")->required();
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "seed for point and direction sampling");
  app.add_option("--format", format, "table format")->check(CLI::IsMember({"csv", "json"}));
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  RunConfig cfg;
  Artifacts art;
  try {
    prepare(cfg, config, out, seed, format);
  } catch (const Error& e) {
    std::cerr << "toriclab: " << e.what() << "\n";
    if (!cfg.out_dir.empty()) write_report(cfg.out_dir, cfg.command, 2, Json(e), art);
    return 2;
  }
  try {
    execute(cfg, art);
  } catch (const Error& e) {
    std::cerr << "toriclab: " << e.what() << "\n";
    const int code = e.kind() == ErrorKind::ConfigError || e.kind() == ErrorKind::IoError ? 2 : 1;
    write_report(cfg.out_dir, cfg.command, code, Json(e), art);
    return code;
  } catch (const std::exception& e) {
    std::cerr << "toriclab: " << e.what() << "\n";
    write_report(cfg.out_dir, cfg.command, 1, Json{{"kind", "Internal"}, {"detail", e.what()}}, art);
    return 1;
  }
  write_report(cfg.out_dir, cfg.command, 0, nullptr, art);
  return 0;
}
