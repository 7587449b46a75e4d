#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fovtopo/error.hpp"
#include "fovtopo/extended.hpp"
#include "fovtopo/fov.hpp"
#include "fovtopo/graph.hpp"
#include "fovtopo/io.hpp"
#include "fovtopo/sim.hpp"

namespace py = pybind11;
using namespace fovtopo;

namespace {

DirectedGraph make_graph(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<Edge> e;
  e.reserve(edges.size());
  for (const auto& [t, h] : edges) e.push_back({t, h});
  return DirectedGraph(n, std::move(e));
}

py::dict certificate_dict(const StabilityCertificate& c) {
  py::dict d;
  d["psd"] = c.psd;
  d["min_eig_sym"] = c.min_eig_sym;
  d["edge_laplacian_invertible"] = c.edge_laplacian_invertible;
  d["tolerance_used"] = c.tolerance_used;
  return d;
}

py::dict approximation_dict(const FovApproximation& a) {
  py::list offsets;
  for (const auto& o : a.offsets) {
    offsets.append(py::make_tuple(o.rotation, o.translation.x(), o.translation.y()));
  }
  py::dict d;
  d["rho1"] = a.inclusion_radius;
  d["rho2"] = std::vector<double>(a.exclusion_radii.begin(), a.exclusion_radii.end());
  d["offsets"] = offsets;
  return d;
}

py::dict quality_dict(const ApproximationQuality& q) {
  py::dict d;
  d["iou"] = q.iou;
  d["false_positive_area"] = q.false_positive_area;
  d["false_negative_area"] = q.false_negative_area;
  d["grid_resolution"] = q.grid_resolution;
  return d;
}

}  // namespace

PYBIND11_MODULE(_fovtopo, m) {
  m.doc() = "Directed limited field-of-view topology control";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidGraphError>(m, "InvalidGraphError", base.ptr());
  py::register_exception<EmptyGraphError>(m, "EmptyGraphError", base.ptr());
  py::register_exception<UnsupportedGeometryError>(m, "UnsupportedGeometryError", base.ptr());
  py::register_exception<ResolutionError>(m, "ResolutionError", base.ptr());
  py::register_exception<LemmaPreconditionError>(m, "LemmaPreconditionError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  py::class_<DirectedGraph>(m, "DirectedGraph")
      .def(py::init(&make_graph), py::arg("n"), py::arg("edges"))
      .def_property_readonly("n", &DirectedGraph::vertex_count)
      .def_property_readonly("edges", [](const DirectedGraph& g) {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (const auto& e : g.edges()) out.emplace_back(e.tail, e.head);
        return out;
      })
      .def("__len__", &DirectedGraph::edge_count)
      .def("__repr__", [](const DirectedGraph& g) {
        return "DirectedGraph(n=" + std::to_string(g.vertex_count()) +
               ", edges=" + std::to_string(g.edge_count()) + ")";
      });

  m.def("incidence_matrix", &incidence_matrix);
  m.def("outgoing_incidence_matrix", &outgoing_incidence_matrix);
  m.def("laplacians", [](const DirectedGraph& g) {
    auto l = laplacians(g);
    return py::make_tuple(l.undirected, l.directed);
  });
  m.def("edge_laplacians", [](const DirectedGraph& g) {
    auto l = edge_laplacians(g);
    return py::make_tuple(l.undirected, l.directed);
  });
  m.def("structural_lyapunov_matrix", &structural_lyapunov_matrix);
  m.def(
      "certify_stability",
      [](const DirectedGraph& g, std::optional<double> tol) {
        return certificate_dict(tol ? certify_stability(g, *tol) : certify_stability(g));
      },
      py::arg("graph"), py::arg("tol") = py::none());
  m.def("is_forest", &is_forest);

  m.def("extended_structural_matrix", &extended_structural_matrix, py::arg("graph"),
        py::arg("points_per_slot") = kDefaultPointsPerSlot);
  m.def(
      "lemma_identity_residual",
      [](const DirectedGraph& g, std::vector<double> weights, std::size_t p) {
        return lemma_identity_residual(g, p, weights);
      },
      py::arg("graph"), py::arg("edge_weights"), py::arg("points_per_slot") = kDefaultPointsPerSlot);
  m.def(
      "psd_propagation",
      [](const DirectedGraph& g, std::size_t p) {
        const auto r = psd_propagation(g, p);
        py::dict d;
        d["base_psd"] = r.base_psd;
        d["base_min_eig_sym"] = r.base_min_eig_sym;
        d["extended_min_eig_sym"] = r.extended_min_eig_sym;
        d["tolerance"] = r.tolerance;
        d["extended_psd"] = r.extended_psd;
        return d;
      },
      py::arg("graph"), py::arg("points_per_slot") = kDefaultPointsPerSlot);

  m.def(
      "default_approximation",
      [](double heading, double central_angle, double range) {
        return approximation_dict(default_approximation(FovSector{heading, central_angle, range}));
      },
      py::arg("heading"), py::arg("central_angle"), py::arg("range"));
  m.def(
      "fit_fov",
      [](double heading, double central_angle, double range, double grid_res, int budget) {
        const FovSector s{heading, central_angle, range};
        s.validate();
        const auto fitted = fit_approximation(s, grid_res, budget);
        py::dict d;
        d["approximation"] = approximation_dict(fitted);
        d["quality"] = quality_dict(approximation_quality(s, fitted, grid_res));
        d["default_quality"] =
            quality_dict(approximation_quality(s, default_approximation(s), grid_res));
        return d;
      },
      py::arg("heading") = 0.0, py::arg("central_angle"), py::arg("range"),
      py::arg("grid_res") = kDefaultGridResolution, py::arg("budget") = 200);

  m.def(
      "simulate",
      [](const std::string& scenario_json, std::optional<std::uint64_t> seed) {
        auto cfg = io::parse_scenario(scenario_json);
        if (seed) cfg.noise.seed = *seed;
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_scenario(cfg);
        }
        std::ostringstream csv, events;
        io::write_trajectory_csv(csv, r.log);
        io::write_events_jsonl(events, r.events);
        py::dict d;
        d["summary"] = io::summary_json(r.summary, energy_trace(r.log), cfg);
        d["trajectory_csv"] = csv.str();
        d["events_jsonl"] = events.str();
        return d;
      },
      py::arg("scenario_json"), py::arg("seed") = py::none(),
      "Runs a scenario given as JSON text; returns the summary, CSV and JSONL logs as text.");
}
