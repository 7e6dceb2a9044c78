#include <map>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "capsroute/energy.hpp"
#include "capsroute/experiments.hpp"
#include "capsroute/instance_io.hpp"
#include "capsroute/routing.hpp"
#include "capsroute/scalar_math.hpp"

namespace py = pybind11;
using namespace capsroute;

namespace {

RoutingConfig make_config(std::size_t iterations, std::optional<double> stop_tolerance,
                          bool record_full_state) {
  RoutingConfig c;
  c.iterations = iterations;
  c.stop_tolerance = stop_tolerance;
  c.record_full_state = record_full_state;
  return c;
}

std::map<std::string, std::vector<double>> series_dict(const ExperimentReport& r) {
  std::map<std::string, std::vector<double>> out;
  for (const NamedSeries& s : r.series) out[s.name] = s.values;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dynamic routing between capsules as nonlinear gradient descent";

  py::register_exception<Error>(m, "CapsrouteError", PyExc_ValueError);

  py::class_<PredictionSet>(m, "PredictionSet")
      .def_static("from_matrices", &PredictionSet::from_matrices, py::arg("predictions"),
                  "Build from one D_j x M matrix per output capsule.")
      .def_static("zeros", &PredictionSet::zeros, py::arg("num_input"), py::arg("dims"))
      .def_property_readonly("num_input", &PredictionSet::num_input)
      .def_property_readonly("num_output", &PredictionSet::num_output)
      .def_property_readonly("dims", &PredictionSet::dims)
      .def("prediction", &PredictionSet::prediction, py::arg("j"))
      .def("__eq__", &PredictionSet::operator==)
      .def("__repr__", [](const PredictionSet& p) {
        return "PredictionSet(num_input=" + std::to_string(p.num_input()) +
               ", num_output=" + std::to_string(p.num_output()) + ")";
      });

  py::class_<GapReport>(m, "GapReport")
      .def_readonly("value", &GapReport::value)
      .def_readonly("tolerance", &GapReport::tolerance)
      .def_readonly("passed", &GapReport::passed)
      .def_readonly("context", &GapReport::context)
      .def("__bool__", [](const GapReport& g) { return g.passed; })
      .def("__repr__", [](const GapReport& g) {
        return "GapReport(value=" + std::to_string(g.value) +
               ", passed=" + (g.passed ? "True" : "False") + ")";
      });

  // Scalar helpers.
  m.def("psi", &psi, py::arg("z"));
  m.def("psi_prime", &psi_prime, py::arg("z"));
  m.def("psi_second", &psi_second, py::arg("z"));
  m.def("log_sum_exp", &log_sum_exp, py::arg("x"));
  m.def("softmax", &softmax, py::arg("x"));
  m.def("neg_entropy", &neg_entropy, py::arg("y"));
  m.def("squash", &squash, py::arg("s"));

  // Energies. Couplings and logits travel as plain arrays.
  m.def("big_psi", py::overload_cast<const PredictionSet&, const Matrix&>(&big_psi),
        py::arg("preds"), py::arg("coupling"));
  m.def("grad_big_psi", py::overload_cast<const PredictionSet&, const Matrix&>(&grad_big_psi),
        py::arg("preds"), py::arg("coupling"));
  m.def("big_phi", py::overload_cast<const Matrix&>(&big_phi), py::arg("logits"));
  m.def(
      "grad_big_phi", [](const Matrix& b) { return grad_big_phi(b).values(); }, py::arg("logits"));
  m.def("big_phi_star", py::overload_cast<const Matrix&>(&big_phi_star), py::arg("coupling"));
  m.def("fenchel_gap", &fenchel_gap, py::arg("x"), py::arg("y"), py::arg("equality_case") = false);
  m.def(
      "lyapunov_gap",
      [](const PredictionSet& p, const Matrix& prev, const Matrix& next, double tol) {
        return lyapunov_gap(p, CouplingMatrix(prev), CouplingMatrix(next), tol);
      },
      py::arg("preds"), py::arg("prev"), py::arg("next"), py::arg("tolerance") = kLyapunovTolerance);

  py::class_<RoutingRecord>(m, "RoutingRecord")
      .def_readonly("iteration", &RoutingRecord::iteration)
      .def_property_readonly("logits",
                             [](const RoutingRecord& r) -> std::optional<Matrix> {
                               if (!r.logits) return std::nullopt;
                               return r.logits->values();
                             })
      .def_property_readonly("coupling",
                             [](const RoutingRecord& r) { return r.coupling.values(); })
      .def_property_readonly("outputs",
                             [](const RoutingRecord& r) -> std::optional<std::vector<Vector>> {
                               if (!r.outputs) return std::nullopt;
                               return r.outputs->outputs();
                             })
      .def_readonly("net_input_norms", &RoutingRecord::net_input_norms)
      .def_readonly("total_energy", &RoutingRecord::total_energy)
      .def_readonly("per_capsule_energy", &RoutingRecord::per_capsule_energy)
      .def_readonly("lyapunov_gap", &RoutingRecord::lyapunov_gap);

  py::class_<RoutingTrajectory>(m, "RoutingTrajectory")
      .def("__len__", &RoutingTrajectory::size)
      .def(
          "__getitem__",
          [](const RoutingTrajectory& t, std::size_t r) { return t[r]; }, py::arg("r"))
      .def_property_readonly("records", &RoutingTrajectory::records);

  const auto route_doc = "Route for `iterations` steps; records cover r = 0..K.";
  m.def(
      "route_scalar",
      [](const PredictionSet& p, std::size_t k, std::optional<double> tol, bool full) {
        return route_scalar(p, make_config(k, tol, full));
      },
      py::arg("preds"), py::arg("iterations") = 3, py::arg("stop_tolerance") = std::nullopt,
      py::arg("record_full_state") = true, route_doc);
  m.def(
      "route_matrix",
      [](const PredictionSet& p, std::size_t k, std::optional<double> tol, bool full) {
        return route_matrix(p, make_config(k, tol, full));
      },
      py::arg("preds"), py::arg("iterations") = 3, py::arg("stop_tolerance") = std::nullopt,
      py::arg("record_full_state") = true, route_doc);
  m.def("compare_trajectories", &compare_trajectories, py::arg("a"), py::arg("b"),
        py::arg("tolerance") = kEquivalenceTolerance);

  // Generators, experiments and instance files.
  m.def("gen_random_instance", &gen_random_instance, py::arg("num_input"), py::arg("num_output"),
        py::arg("dim"), py::arg("scale") = 1.0, py::arg("seed") = 0);
  m.def("gen_ring_instance", &gen_ring_instance, py::arg("num_input"),
        py::arg("radii") = std::vector<double>{0.0, 1.0, 1.0, 1.0}, py::arg("noise") = 0.1,
        py::arg("seed") = 0);

  py::class_<PolarizationMetrics>(m, "PolarizationMetrics")
      .def_readonly("row_entropy_mean", &PolarizationMetrics::row_entropy_mean)
      .def_readonly("max_coupling", &PolarizationMetrics::max_coupling)
      .def_readonly("max_coupling_mean", &PolarizationMetrics::max_coupling_mean);
  m.def("polarization_metrics", &polarization_metrics, py::arg("trajectory"));

  py::class_<ExperimentReport>(m, "ExperimentReport")
      .def_readonly("name", &ExperimentReport::name)
      .def_readonly("trajectory", &ExperimentReport::trajectory)
      .def_property_readonly("series", &series_dict)
      .def_property_readonly("final_outputs",
                             [](const ExperimentReport& r) { return r.final_outputs.outputs(); })
      .def_readonly("collapsed_capsules", &ExperimentReport::collapsed_capsules)
      .def_readonly("suppressed_capsules", &ExperimentReport::suppressed_capsules)
      .def_readonly("unit_capsules", &ExperimentReport::unit_capsules)
      .def_readonly("min_lyapunov_gap", &ExperimentReport::min_lyapunov_gap)
      .def_readonly("agreement_nondecreasing", &ExperimentReport::agreement_nondecreasing);
  m.def(
      "run_numerical_experiment",
      [](const PredictionSet& p, std::size_t k) { return run_numerical_experiment(p, k); },
      py::arg("preds"), py::arg("iterations") = 20);
  m.def(
      "run_distribution_experiment",
      [](const PredictionSet& p, std::size_t k) { return run_distribution_experiment(p, k); },
      py::arg("preds"), py::arg("iterations") = 20);

  m.def("instance_to_json", &instance_to_json, py::arg("preds"));
  m.def("instance_from_json", &instance_from_json, py::arg("text"));
  m.def("load_instance", &load_instance, py::arg("path"));
  m.def("save_instance", &save_instance, py::arg("preds"), py::arg("path"));
  m.def("content_digest", &content_digest, py::arg("text"));
}
