#include <doctest.h>

#include "test_support.hpp"
#include "toriclab/io.hpp"

#include <cstdlib>
#include <fstream>
#include <random>

using namespace toriclab;
using namespace toriclab::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("toriclab_test_io_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::IoError;
}

}  // namespace

TEST_CASE("format_double round-trips with 17 significant digits") {
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1e23) == "9.9999999999999992e+22");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> ex(-200, 200);
  for (int i = 0; i < 2000; ++i) {
    const double x = std::ldexp(mant(rng), ex(rng));
    const std::string s = format_double(x);
    CHECK(s.find(',') == std::string::npos);
    CHECK(std::strtod(s.c_str(), nullptr) == x);
  }
}

TEST_CASE("csv table") {
  CsvTable t({"x", "y"});
  t.add_row({0.5, 1.0 / 3.0});
  t.add_text_row({"1", "nan"});
  CHECK(t.rows() == 2);
  CHECK(t.str() == "x,y\n0.5,0.33333333333333331\n1,nan\n");
  CHECK_THROWS_AS(t.add_row({1.0}), Error);
  CHECK_THROWS_AS(CsvTable({}), Error);
}

TEST_CASE("grid file round trip") {
  const fs::path dir = scratch_dir("grid");
  const auto base = product_family({make_exp1d(1.0), make_xlogx1d(1.0)});
  GridSpec spec{{9, 7}, vec({-0.5, 0.0}), vec({0.125, 0.125})};
  const auto field = sample_onto_grid(base, spec, 4);
  const GridData* g = grid_data(field);
  REQUIRE(g != nullptr);
  write_grid_file(dir / "u.json", *g, field.weights());

  CHECK(fs::file_size(dir / "u.bin") == 8 * spec.node_count());
  const Json header = read_json_file(dir / "u.json");
  CHECK(header["data"] == "u.bin");
  CHECK(header["shape"] == Json::array({9, 7}));

  const GridFile back = read_grid_file(dir / "u.json");
  CHECK(back.grid.spec.shape == spec.shape);
  CHECK(back.grid.spec.origin == spec.origin);
  CHECK(back.grid.spec.spacing == spec.spacing);
  CHECK(back.grid.stencil_order == 4);
  CHECK(back.grid.values == g->values);
  REQUIRE(back.weights);
  CHECK(back.weights->v == base.weights()->v);
  CHECK(back.weights->xi == base.weights()->xi);
  CHECK(back.weights->c == base.weights()->c);

  const auto loaded = load_grid_potential(dir / "u.json");
  const Vector p = vec({0.0, 0.375});
  const auto a = evaluate_jet(field, p, 3);
  const auto b = evaluate_jet(loaded, p, 3);
  CHECK(a.hess == b.hess);
  CHECK(max_abs_diff(a.third, b.third) == 0.0);
}

TEST_CASE("grid value array is little-endian float64, row-major") {
  const fs::path dir = scratch_dir("endian");
  GridData g{GridSpec{{2, 2}, vec({0.0, 0.0}), vec({1.0, 1.0})}, {1.0, 2.0, -0.5, 0.25}, 2};
  write_grid_file(dir / "g.json", g, std::nullopt, "values.f64");
  std::ifstream in(dir / "values.f64", std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() == 32);
  // 1.0 = 0x3ff0000000000000, 2.0 = 0x4000000000000000
  CHECK(bytes[7] == 0x3f);
  CHECK(bytes[6] == 0xf0);
  CHECK(bytes[0] == 0x00);
  CHECK(bytes[15] == 0x40);
  const GridFile back = read_grid_file(dir / "g.json");
  CHECK(back.grid.values == g.values);
  CHECK_FALSE(back.weights);

  {
    std::ofstream trunc(dir / "values.f64", std::ios::binary | std::ios::trunc);
    trunc.write(reinterpret_cast<const char*>(bytes.data()), 24);
  }
  CHECK(kind_of([&] { read_grid_file(dir / "g.json"); }) == ErrorKind::IoError);
  fs::remove(dir / "values.f64");
  CHECK(kind_of([&] { read_grid_file(dir / "g.json"); }) == ErrorKind::IoError);
}

TEST_CASE("field specs build the same fields as the constructors") {
  const Vector p2 = vec({0.2, 0.4});
  auto same = [](const PotentialField& a, const PotentialField& b, const Vector& p) {
    const auto ja = evaluate_jet(a, p, 3);
    const auto jb = evaluate_jet(b, p, 3);
    CHECK(ja.value == jb.value);
    CHECK(ja.hess == jb.hess);
    CHECK(max_abs_diff(ja.third, jb.third) == 0.0);
    CHECK(a.weights().has_value() == b.weights().has_value());
  };
  Matrix a(2, 2);
  a << 2.0, 0.4, 0.4, 1.0;
  same(field_from_json(Json::parse(R"({"family":"quadratic","A":[[2,0.4],[0.4,1]],"b":[0.3,-0.1]})")),
       make_quadratic(a, vec({0.3, -0.1})), p2);
  same(field_from_json(Json::parse(R"({"family":"exp1d","v":-2,"scale":0.3})")), make_exp1d(-2.0, 0.3), vec({0.1}));
  same(field_from_json(Json::parse(R"({"family":"xlogx1d","K":1})")), make_xlogx1d(1.0), vec({0.1}));
  same(field_from_json(Json::parse(
           R"({"family":"product","factors":[{"family":"exp1d","v":1},{"family":"xlogx1d","K":1}]})")),
       product_family({make_exp1d(1.0), make_xlogx1d(1.0)}), p2);
  same(field_from_json(Json::parse(R"({"family":"polynomial","dimension":2,
          "terms":[{"coef":0.5,"exponents":[2,0]},{"coef":0.5,"exponents":[0,2]},{"coef":0.08333333333333333,"exponents":[4,0]},
                   {"coef":0.125,"exponents":[2,2]},{"coef":0.1,"exponents":[1,3]}]})")),
       quartic_2d(), p2);

  const auto s = field_from_json(Json::parse(R"({"family":"sum","terms":[
      {"family":"product","factors":[{"family":"exp1d","v":1},{"family":"xlogx1d","K":1}]},
      {"family":"polynomial","dimension":2,"terms":[{"coef":0.01,"exponents":[3,0]}],
       "domain":{"box":{"lower":[-1,null],"upper":[1,null]}}}]})"));
  CHECK_FALSE(s.weights());
  CHECK(s.domain().contains(vec({0.5, 3.0})));
  CHECK_FALSE(s.domain().contains(vec({0.5, -1.5})));
  CHECK_FALSE(s.domain().contains(vec({1.5, 0.0})));
}

TEST_CASE("grid field spec resolves relative to the base directory") {
  const fs::path dir = scratch_dir("gridspec");
  GridSpec spec{{11}, vec({-1.0}), vec({0.2})};
  const auto f = sample_onto_grid(make_exp1d(1.0), spec);
  write_grid_file(dir / "sub" / "e.json", *grid_data(f), f.weights());
  const auto loaded = field_from_json(Json::parse(R"({"grid":"sub/e.json"})"), dir);
  CHECK(loaded.representation() == Representation::Grid);
  CHECK(evaluate_jet(loaded, vec({0.0}), 2).hess == evaluate_jet(f, vec({0.0}), 2).hess);
}

TEST_CASE("config errors") {
  auto cfg = [](const char* text) { return kind_of([&] { field_from_json(Json::parse(text)); }); };
  CHECK(cfg(R"({"family":"banana"})") == ErrorKind::ConfigError);
  CHECK(cfg(R"({"family":"exp1d"})") == ErrorKind::ConfigError);
  CHECK(cfg(R"({"family":"exp1d","v":0})") == ErrorKind::ConfigError);
  CHECK(cfg(R"({"family":"exp1d","v":"one"})") == ErrorKind::ConfigError);
  CHECK(cfg(R"({"family":"quadratic","A":[[1,0],[0]]})") == ErrorKind::ConfigError);
  CHECK(cfg(R"({"family":"product","factors":[]})") == ErrorKind::ConfigError);
  CHECK(cfg(R"([1,2])") == ErrorKind::ConfigError);
  CHECK(cfg(R"({"grid":"/nonexistent/u.json"})") == ErrorKind::ConfigError);
  CHECK(kind_of([] { weights_from_json(Json::parse(R"({"v":[1,2]})"), 1); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { domain_from_json(Json::parse(R"({"box":{"lower":[1],"upper":[0]}})")); }) ==
        ErrorKind::ConfigError);
  CHECK(kind_of([] { points_from_json(Json::parse(R"([[0,1],[2]])"), 2); }) == ErrorKind::ConfigError);

  const fs::path dir = scratch_dir("badjson");
  write_text_file(dir / "bad.json", "{\"family\": ");
  CHECK(kind_of([&] { read_json_file(dir / "bad.json"); }) == ErrorKind::ConfigError);
  write_text_file(dir / "comment.json", "// note\n{\"a\": 1}\n");
  CHECK(read_json_file(dir / "comment.json")["a"] == 1);
}

TEST_CASE("problem config matches the direct construction") {
  const Json j = Json::parse(R"({"lower":[-1],"upper":[1],"h":0.0625,
      "weights":{"v":[1],"xi":[0],"c":0},"boundary":{"family":"exp1d","v":1},"tol":1e-11,"max_iter":30})");
  const ProblemConfig cfg = problem_from_json(j);
  const auto e = make_exp1d(1.0);
  const MAProblem direct = MAProblem::from_boundary_field(vec({-1.0}), vec({1.0}), 0.0625, *e.weights(), e);
  CHECK(cfg.problem.boundary == direct.boundary);
  CHECK(cfg.tol == 1e-11);
  CHECK(cfg.max_iter == 30);
  CHECK_FALSE(cfg.problem.initial_guess);

  const fs::path dir = scratch_dir("problem");
  GridData g{cfg.problem.grid(), direct.boundary, 2};
  write_grid_file(dir / "b.json", g);
  Json jg = j;
  jg["boundary"] = Json{{"grid", "b.json"}};
  CHECK(problem_from_json(jg, dir).problem.boundary == direct.boundary);

  Json jv = j;
  jv["boundary"] = Json{{"values", direct.boundary}};
  jv["initial_guess"] = Json{{"family", "quadratic"}, {"A", {{2.0}}}};
  const auto pv = problem_from_json(jv);
  CHECK(pv.problem.boundary == direct.boundary);
  REQUIRE(pv.problem.initial_guess);
  CHECK((*pv.problem.initial_guess)[16] == 0.0);
  CHECK((*pv.problem.initial_guess)[0] == doctest::Approx(1.0));

  jv["boundary"] = Json{{"values", {1.0, 2.0}}};
  CHECK(kind_of([&] { problem_from_json(jv); }) == ErrorKind::ConfigError);
  Json jh = j;
  jh["h"] = -1.0;
  CHECK(kind_of([&] { problem_from_json(jh); }) == ErrorKind::ConfigError);
}

TEST_CASE("encodings") {
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const Json jm = matrix_json(m);
  CHECK(jm["shape"] == Json::array({2, 3}));
  CHECK(jm["data"] == Json::array({1.0, 2.0, 3.0, 4.0, 5.0, 6.0}));

  const auto q = quartic_2d();
  const auto jet = evaluate_jet(q, vec({0.1, -0.2}), 3);
  const auto bundle = curvature(jet);
  const Json jb = bundle;
  CHECK(jb["riemann"]["shape"] == Json::array({2, 2, 2, 2}));
  CHECK(jb["riemann"]["data"].size() == 16);
  CHECK(jb["christoffel"]["data"][1 * 4 + 0 * 2 + 1].get<double>() == bundle.christoffel(1, 0, 1));
  CHECK(jb["refined"].is_null());
  CHECK(jb["scalar"].get<double>() == bundle.scalar);

  const Json jj = jet;
  CHECK(jj["third"]["shape"] == Json::array({2, 2, 2}));
  CHECK_FALSE(jj.contains("fourth"));

  const auto e = make_exp1d(1.0);
  const Json jd = diagnose(evaluate_jet(e, vec({0.0}), 5), *e.weights(), true);
  CHECK(jd["bochner"]["slack"].get<double>() == doctest::Approx(0.5));

  const Error err(ErrorKind::PointOutsideDomain, "potential", "evaluate_jet", "x = (2)");
  const Json je = err;
  CHECK(je["kind"] == "PointOutsideDomain");
  CHECK(je["module"] == "potential");
  CHECK(je["operation"] == "evaluate_jet");
  CHECK(je["detail"] == "x = (2)");

  const auto report = radial_scan(make_quadratic(Matrix::Identity(2, 2)), WeightData::zero(2), vec({0.0, 0.0}),
                                  vec({1.0, 0.0}), ScanOptions{0.1, 5, true});
  const Json jr = report;
  CHECK(jr["samples"].size() == report.samples.size());
  CHECK(jr["stop_kind"].is_null());

  const Json dom = AffineDomain::whole_space(2);
  CHECK(dom["box"]["lower"][0].is_null());
  CHECK(domain_from_json(dom).contains(vec({1e300, -1e300})));

  CHECK(dump_json(Json{{"a", 1}}) == "{\n  \"a\": 1\n}\n");
}
