#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qmlab/error.hpp"
#include "qmlab/hamflow.hpp"
#include "qmlab/hypgeo.hpp"
#include "qmlab/io.hpp"
#include "qmlab/mesh.hpp"
#include "qmlab/reeb.hpp"
#include "qmlab/symplinalg.hpp"

namespace py = pybind11;
using namespace qmlab;
using io::Json;

namespace {

py::dict estimate_dict(double value, double std_error, double deterministic) {
  py::dict d;
  d["value"] = value;
  d["std_error"] = std_error;
  d["deterministic_error"] = deterministic;
  return d;
}

symp::SpPath make_path(const std::vector<double>& times, const std::vector<Eigen::MatrixXd>& mats) {
  std::vector<symp::SpMatrix> samples;
  samples.reserve(mats.size());
  for (const auto& m : mats) samples.emplace_back(m);
  return symp::SpPath(times, std::move(samples));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "qmlab native core";

  auto base_validation = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
  py::register_exception<EvaluationError>(m, "EvaluationError", PyExc_RuntimeError);
  (void)base_validation;

  m.def("det2", [](const Eigen::MatrixXd& columns) { return symp::LagrangianFrame(columns).det2(); },
        py::arg("columns"), "det(X + iY)^2 of the Lagrangian spanned by the 2n x n column matrix.");

  m.def(
      "phi_homog",
      [](const std::vector<double>& times, const std::vector<Eigen::MatrixXd>& matrices, int p) {
        const auto path = make_path(times, matrices);
        const auto b = symp::phi_homog(path, p, symp::LagrangianFrame::real_subspace(path.n()));
        return py::make_tuple(b.value, b.error_bound);
      },
      py::arg("times"), py::arg("matrices"), py::arg("p"));

  m.def(
      "phi_rotation_loop",
      [](int n, int samples, int p) {
        const auto b = symp::phi_homog(symp::SpPath::rotation_loop(n, samples), p,
                                       symp::LagrangianFrame::real_subspace(n));
        return py::make_tuple(b.value, b.error_bound);
      },
      py::arg("n") = 1, py::arg("samples") = 65, py::arg("p") = 64);

  m.def(
      "calabi",
      [](const std::string& scenario_json) {
        const auto sc = io::scenario_from_json(Json::parse(scenario_json));
        py::gil_scoped_release release;
        return flow::calabi(sc, {sc.form.kind, nullptr});
      },
      py::arg("scenario_json"));

  m.def(
      "tau",
      [](const std::string& scenario_json, int p, int n_samples, std::uint64_t seed, int jobs) {
        const auto sc = io::scenario_from_json(Json::parse(scenario_json));
        flow::TauResult t;
        {
          py::gil_scoped_release release;
          t = flow::tau_ball(sc, p, n_samples, seed, jobs);
        }
        auto d = estimate_dict(t.value, t.std_error, t.deterministic_error);
        d["volume"] = t.volume;
        return d;
      },
      py::arg("scenario_json"), py::arg("p"), py::arg("n_samples"), py::arg("seed"), py::arg("jobs") = 1);

  m.def(
      "cal_s",
      [](const std::string& isotopy_json, int p, int n_points, int fiber_samples, std::uint64_t seed, int jobs) {
        const auto iso = io::disk_isotopy_from_json(Json::parse(isotopy_json));
        hyp::Estimate e;
        {
          py::gil_scoped_release release;
          e = hyp::cal_s_estimate(iso, p, n_points, fiber_samples, seed, jobs);
        }
        return estimate_dict(e.value, e.std_error, e.deterministic_error);
      },
      py::arg("isotopy_json"), py::arg("p"), py::arg("n_points"), py::arg("fiber_samples") = 8, py::arg("seed"),
      py::arg("jobs") = 1);

  m.def(
      "reeb_summary",
      [](int genus, double cell, std::int64_t seed) {
        auto mesh = mesh::polygonize(mesh::standard_surface(genus, cell));
        if (mesh.genus >= 2) mesh::normalize_hyperbolic(mesh);
        const auto f = seed < 0 ? mesh::tilted_height(mesh)
                                : mesh::random_smooth_field(mesh, static_cast<std::uint64_t>(seed));
        const auto g = reeb::build_reeb(mesh, f);
        py::dict d;
        d["genus"] = mesh.genus;
        d["nodes"] = g.nodes.size();
        d["arcs"] = g.arcs.size();
        d["euler_sum"] = g.euler_sum();
        if (mesh.genus >= 1) d["trivalent"] = reeb::trivalent_vertices(reeb::prune(g)).size();
        if (mesh.genus >= 2)
          d["reduced_integral_height"] =
              reeb::reduced_integral(g, reeb::GraphHamiltonian::of_height(g, [](double t) { return t; }));
        return d;
      },
      py::arg("genus"), py::arg("cell") = 0.07, py::arg("seed") = -1,
      "Reeb graph of the generated genus-g surface under the tilted height (seed < 0) or a random field.");

  m.def("hyperbolic_distance", &hyp::hyperbolic_distance, py::arg("z0"), py::arg("z1"));
  m.def("geodesic_triangle_area", &hyp::geodesic_triangle_area, py::arg("a"), py::arg("b"), py::arg("c"));
}
