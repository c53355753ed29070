#include "toriclab/error.hpp"
#include "toriclab/hessian_geometry.hpp"
#include "toriclab/io.hpp"
#include "toriclab/ma_solver.hpp"
#include "toriclab/potential.hpp"
#include "toriclab/rigidity.hpp"
#include "toriclab/soliton.hpp"
#include "toriclab/toric.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace toriclab;

namespace {

py::array_t<double> tensor_array(const Tensor& t) {
  if (t.empty()) return py::array_t<double>();
  std::vector<py::ssize_t> shape(static_cast<std::size_t>(t.rank()), t.dim());
  py::array_t<double> a(shape);
  std::copy(t.data().begin(), t.data().end(), a.mutable_data());
  return a;
}

// Report structs go through their JSON encoding so Python sees plain dicts.
template <class T>
py::object as_dict(const T& value) {
  static py::handle loads = py::object(py::module_::import("json").attr("loads")).release();
  return loads(Json(value).dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hessian geometry of weighted Monge-Ampere solitons";

  static py::handle error_type = py::exception<Error>(m, "ToricLabError", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = error_type(e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      exc.attr("module") = e.module();
      exc.attr("operation") = e.operation();
      exc.attr("detail") = e.detail();
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<AffineDomain>(m, "AffineDomain")
      .def_static("box", &AffineDomain::box, py::arg("lower"), py::arg("upper"))
      .def_static("ball", &AffineDomain::ball, py::arg("center"), py::arg("radius"))
      .def_static("whole_space", &AffineDomain::whole_space)
      .def_property_readonly("dimension", &AffineDomain::dimension)
      .def_property_readonly("lower", &AffineDomain::lower)
      .def_property_readonly("upper", &AffineDomain::upper)
      .def("contains", &AffineDomain::contains);

  py::class_<WeightData>(m, "WeightData")
      .def(py::init([](Vector v, Vector xi, double c) { return WeightData{std::move(v), std::move(xi), c}; }),
           py::arg("v"), py::arg("xi"), py::arg("c") = 0.0)
      .def_readwrite("v", &WeightData::v)
      .def_readwrite("xi", &WeightData::xi)
      .def_readwrite("c", &WeightData::c)
      .def("__repr__", [](const WeightData& w) { return "WeightData(" + Json(w).dump() + ")"; });

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init([](std::vector<int> shape, Vector origin, Vector spacing) {
             GridSpec s{std::move(shape), std::move(origin), std::move(spacing)};
             s.validate();
             return s;
           }),
           py::arg("shape"), py::arg("origin"), py::arg("spacing"))
      .def_static("covering", &GridSpec::covering, py::arg("lower"), py::arg("upper"), py::arg("h"))
      .def_readonly("shape", &GridSpec::shape)
      .def_readonly("origin", &GridSpec::origin)
      .def_readonly("spacing", &GridSpec::spacing)
      .def("node", [](const GridSpec& s, std::vector<int> idx) { return s.node(idx); });

  py::class_<PotentialField>(m, "PotentialField")
      .def_property_readonly("dimension", &PotentialField::dimension)
      .def_property_readonly("domain", &PotentialField::domain)
      .def_property_readonly("weights", &PotentialField::weights)
      .def_property_readonly("is_analytic", &PotentialField::is_analytic)
      .def("with_weights", &PotentialField::with_weights)
      .def("describe", &PotentialField::describe)
      .def("__repr__", [](const PotentialField& f) { return "<PotentialField " + f.describe() + ">"; });

  m.def("make_quadratic", py::overload_cast<const Matrix&, const Vector&>(&make_quadratic), py::arg("A"), py::arg("b"));
  m.def("make_quadratic", py::overload_cast<const Matrix&>(&make_quadratic), py::arg("A"));
  m.def("make_exp1d", &make_exp1d, py::arg("v"), py::arg("scale") = 1.0);
  m.def("make_xlogx1d", &make_xlogx1d, py::arg("K"));
  m.def("make_product", [](const std::vector<PotentialField>& fs) { return make_product(fs); });
  m.def("make_sum", [](const std::vector<PotentialField>& fs) { return make_sum(fs); });
  m.def(
      "make_polynomial",
      [](int n, const std::vector<std::pair<double, std::vector<int>>>& terms, std::optional<AffineDomain> domain) {
        std::vector<Monomial> ms;
        for (const auto& [c, e] : terms) ms.push_back(Monomial{c, e});
        return make_polynomial(n, std::move(ms), std::move(domain));
      },
      py::arg("dimension"), py::arg("terms"), py::arg("domain") = std::nullopt,
      "terms: list of (coefficient, exponents)");
  m.def("make_grid_potential", &make_grid_potential, py::arg("spec"), py::arg("values"), py::arg("stencil_order") = 2,
        py::arg("weights") = std::nullopt);
  m.def("sample_onto_grid", &sample_onto_grid, py::arg("field"), py::arg("spec"), py::arg("stencil_order") = 2);
  m.def(
      "field_from_json",
      [](const std::string& text, const std::filesystem::path& base_dir) {
        return field_from_json(Json::parse(text), base_dir);
      },
      py::arg("spec"), py::arg("base_dir") = std::filesystem::path{});
  m.def("load_grid_potential", &load_grid_potential);
  m.def("sample_interior", &sample_interior, py::arg("domain"), py::arg("count"), py::arg("seed"),
        py::arg("half_width") = 1.0, py::arg("margin_fraction") = 0.05);

  py::class_<JetEvaluation>(m, "JetEvaluation")
      .def_readonly("point", &JetEvaluation::point)
      .def_readonly("order", &JetEvaluation::order)
      .def_readonly("value", &JetEvaluation::value)
      .def_readonly("grad", &JetEvaluation::grad)
      .def_readonly("hess", &JetEvaluation::hess)
      .def_readonly("inverse_hess", &JetEvaluation::inverse_hess)
      .def_readonly("log_det", &JetEvaluation::log_det)
      .def_property_readonly("third", [](const JetEvaluation& j) { return tensor_array(j.third); })
      .def_property_readonly("fourth", [](const JetEvaluation& j) { return tensor_array(j.fourth); })
      .def_property_readonly("fifth", [](const JetEvaluation& j) { return tensor_array(j.fifth); });
  m.def("evaluate_jet", &evaluate_jet, py::arg("field"), py::arg("point"), py::arg("order") = 3);

  py::class_<CurvatureBundle>(m, "CurvatureBundle")
      .def_property_readonly("christoffel", [](const CurvatureBundle& c) { return tensor_array(c.christoffel); })
      .def_property_readonly("riemann", [](const CurvatureBundle& c) { return tensor_array(c.riemann); })
      .def_readonly("ricci", &CurvatureBundle::ricci)
      .def_readonly("scalar", &CurvatureBundle::scalar)
      .def_property_readonly("refined_discrepancy", [](const CurvatureBundle& c) {
        return c.refined ? std::optional<double>(c.refined->discrepancy) : std::nullopt;
      })
      .def("to_dict", [](const CurvatureBundle& c) { return as_dict(c); });
  m.def("curvature", &curvature, py::arg("jet"), py::arg("certified") = std::nullopt);

  m.def("ma_residual", &ma_residual);
  m.def("differential_identity_residual", &differential_identity_residual);
  m.def("sigma", &sigma);
  m.def(
      "diagnose", [](const JetEvaluation& jet, const WeightData& w, bool certified) {
        return as_dict(diagnose(jet, w, certified));
      },
      py::arg("jet"), py::arg("weights"), py::arg("certified"));

  m.def(
      "assemble_metric",
      [](const JetEvaluation& jet, const WeightData& w, std::optional<Vector> theta) {
        return as_dict(assemble_metric(jet, w, theta));
      },
      py::arg("jet"), py::arg("weights"), py::arg("theta") = std::nullopt);
  m.def("soliton_residual", &soliton_residual);
  m.def(
      "darboux_check",
      [](const JetEvaluation& jet, const WeightData& w) { return as_dict(darboux_check(assemble_metric(jet, w))); },
      py::arg("jet"), py::arg("weights"));
  m.def(
      "flatness_check",
      [](const PotentialField& f, const std::vector<Vector>& pts, double tol) {
        return as_dict(flatness_check(f, pts, tol));
      },
      py::arg("field"), py::arg("points"), py::arg("tol") = 1e-12);

  m.def(
      "solve_dirichlet",
      [](const Vector& lower, const Vector& upper, double h, const WeightData& w, const PotentialField& boundary,
         double tol, int max_iter) {
        const MASolution s = solve_dirichlet(MAProblem::from_boundary_field(lower, upper, h, w, boundary), tol, max_iter);
        py::dict out = as_dict(s);
        py::array_t<double> values(std::vector<py::ssize_t>(s.spec.shape.begin(), s.spec.shape.end()));
        std::copy(s.values.begin(), s.values.end(), values.mutable_data());
        out["values"] = values;
        out["field"] = s.field();
        return out;
      },
      py::arg("lower"), py::arg("upper"), py::arg("h"), py::arg("weights"), py::arg("boundary"),
      py::arg("tol") = 1e-10, py::arg("max_iter") = 50);

  m.def(
      "radial_scan",
      [](const PotentialField& f, const WeightData& w, const Vector& p0, const Vector& d, double step, int max_steps,
         bool diagnostics) { return as_dict(radial_scan(f, w, p0, d, ScanOptions{step, max_steps, diagnostics})); },
      py::arg("field"), py::arg("weights"), py::arg("p0"), py::arg("direction"), py::arg("step") = 1e-3,
      py::arg("max_steps") = 2000, py::arg("diagnostics") = true);
  m.def(
      "liouville_scan",
      [](const PotentialField& f, const WeightData& w, const Vector& p0, const std::vector<double>& radii,
         double step) { return as_dict(liouville_scan(f, w, p0, radii, step)); },
      py::arg("field"), py::arg("weights"), py::arg("p0"), py::arg("radii"), py::arg("step") = 1e-2);
  m.def(
      "cutoff_eta", [](double R, double delta, int samples) { return as_dict(cutoff_eta(R, delta, samples)); },
      py::arg("R"), py::arg("delta"), py::arg("sample_count") = 10000);
  m.def("quadratic_rigidity_deviation", &quadratic_rigidity_deviation);
}
