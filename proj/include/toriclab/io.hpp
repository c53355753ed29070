#pragma once

#include "toriclab/error.hpp"
#include "toriclab/hessian_geometry.hpp"
#include "toriclab/ma_solver.hpp"
#include "toriclab/potential.hpp"
#include "toriclab/rigidity.hpp"
#include "toriclab/soliton.hpp"
#include "toriclab/toric.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace toriclab {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Grid files: a JSON header
//   {"shape": [...], "origin": [...], "spacing": [...], "stencil_order": 2,
//    "data": "values.bin", "weights": {"v": [...], "xi": [...], "c": 0}}
// next to a raw little-endian float64 array in row-major order. "data" is
// resolved relative to the header; "weights" is optional.

struct GridFile {
  GridData grid;
  std::optional<WeightData> weights;
};

GridFile read_grid_file(const std::filesystem::path& header);
/// Writes the header and the value array; `data_name` defaults to the header
/// stem with extension .bin.
void write_grid_file(const std::filesystem::path& header, const GridData& grid,
                     const std::optional<WeightData>& weights = std::nullopt,
                     const std::string& data_name = {});
PotentialField load_grid_potential(const std::filesystem::path& header);

// ---------------------------------------------------------------------------
// Config decoding. Failures raise ConfigError naming the offending key.

Json read_json_file(const std::filesystem::path& path);

/// Array of numbers of the expected size (any size when negative).
Vector vector_from_json(const Json& j, const std::string& key, int expected_size = -1);
/// Nested rows [[a, b], [c, d]].
Matrix matrix_from_json(const Json& j, const std::string& key);
/// {"box": {"lower": [...], "upper": [...]}} with null for an infinite bound,
/// or {"ball": {"center": [...], "radius": r}}.
AffineDomain domain_from_json(const Json& j);
/// {"v": [...], "xi": [...], "c": number}; missing v or xi are zero.
WeightData weights_from_json(const Json& j, int dimension);
/// Points as an array of coordinate arrays.
std::vector<Vector> points_from_json(const Json& j, int dimension);

/// Field specs:
///   {"family": "quadratic", "A": [[...]], "b": [...]}
///   {"family": "exp1d", "v": 1, "scale": 1}
///   {"family": "xlogx1d", "K": 1}
///   {"family": "product", "factors": [spec, ...]}
///   {"family": "polynomial", "dimension": n,
///    "terms": [{"coef": a, "exponents": [...]}, ...], "domain": {...}}
///   {"family": "sum", "terms": [spec, ...]}
///   {"grid": "header.json"}
/// Relative grid paths resolve against `base_dir`.
PotentialField field_from_json(const Json& j, const std::filesystem::path& base_dir = {});

struct ProblemConfig {
  MAProblem problem;
  double tol = 1e-10;
  int max_iter = 50;
};
/// {"lower", "upper", "h", "weights", "boundary": field spec, "tol",
///  "max_iter", "initial_guess": field spec}. A grid boundary whose spec
/// matches the problem grid is read node for node; any other field is
/// evaluated at the boundary nodes.
ProblemConfig problem_from_json(const Json& j, const std::filesystem::path& base_dir = {});

// ---------------------------------------------------------------------------
// Encoding. Matrices and tensors are {"shape": [...], "data": [...]} with the
// last index fastest; vectors are plain arrays.

Json vector_json(const Vector& v);
Json matrix_json(const Matrix& m);
Json tensor_json(const Tensor& t);

void to_json(Json& j, const AffineDomain& d);
void to_json(Json& j, const WeightData& w);
void to_json(Json& j, const GridSpec& s);
void to_json(Json& j, const JetEvaluation& jet);
void to_json(Json& j, const CurvatureBundle& c);
void to_json(Json& j, const BochnerResult& b);
void to_json(Json& j, const SolitonDiagnostics& d);
void to_json(Json& j, const ToricMetricSample& s);
void to_json(Json& j, const DarbouxVerdict& v);
void to_json(Json& j, const FlatnessVerdict& v);
void to_json(Json& j, const NewtonStep& s);
/// Log and summary only; the values go to a grid file.
void to_json(Json& j, const MASolution& s);
void to_json(Json& j, const ScanSample& s);
void to_json(Json& j, const RadialScanReport& r);
void to_json(Json& j, const MeanCurvatureBound& b);
void to_json(Json& j, const CutoffProfile& p);
void to_json(Json& j, const LiouvilleEntry& e);
void to_json(Json& j, const LiouvilleReport& r);
void to_json(Json& j, const Error& e);

/// Two-space indented JSON with a trailing newline.
std::string dump_json(const Json& j);

// ---------------------------------------------------------------------------
// CSV: header row, '.' decimal separator, 17 significant digits.

/// General notation with 17 significant digits, independent of the locale;
/// non-finite values print as nan, inf, -inf.
std::string format_double(double x);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  const std::vector<std::string>& header() const noexcept { return header_; }
  std::size_t rows() const noexcept { return rows_.size(); }

  void add_row(const std::vector<double>& values);
  /// Cells already formatted; must match the header width.
  void add_text_row(std::vector<std::string> cells);

  void write(std::ostream& out) const;
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Writes `text` to `path`, creating parent directories. Raises IoError.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace toriclab
