#include "commands.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <numbers>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "fovtopo/error.hpp"
#include "fovtopo/extended.hpp"
#include "fovtopo/fov.hpp"
#include "fovtopo/graph.hpp"
#include "fovtopo/io.hpp"
#include "fovtopo/sim.hpp"

namespace fovtopo::cli {

namespace {

namespace fs = std::filesystem;
using io::format_real;

/// Signals a domain failure whose report has already been written.
struct DomainFailure {};

class Log {
public:
  Log(std::ostream& err, LogLevel level) : err_(err), level_(level) {}
  void info(const std::string& msg) const {
    if (level_ != LogLevel::Quiet) err_ << "fovtopo: " << msg << '\n';
  }
  void debug(const std::string& msg) const {
    if (level_ == LogLevel::Debug) err_ << "fovtopo [debug]: " << msg << '\n';
  }
  void error(const std::string& msg) const { err_ << "fovtopo: error: " << msg << '\n'; }

private:
  std::ostream& err_;
  LogLevel level_;
};

DirectedGraph load_graph(const std::string& path) {
  return io::parse_graph(io::read_file(path));
}

int cmd_certify(const std::string& path, std::optional<double> tol, bool require_psd,
                std::ostream& out, const Log& log) {
  const auto g = load_graph(path);
  log.debug("graph with " + std::to_string(g.vertex_count()) + " vertices and " +
            std::to_string(g.edge_count()) + " edges");
  const auto cert = tol ? certify_stability(g, *tol) : certify_stability(g);
  out << io::certificate_json(cert) << '\n';
  if (require_psd && !cert.psd) {
    log.info("structural matrix is not positive semidefinite (min eigenvalue " +
             format_real(cert.min_eig_sym) + ")");
    return kExitDomainFailure;
  }
  return kExitOk;
}

int cmd_fit_fov(double heading, double central_angle, double range, double grid_res, int budget,
                std::ostream& out, const Log& log) {
  const FovSector s{heading, central_angle, range};
  s.validate();
  if (!(grid_res > 0.0)) throw ResolutionError("--grid-res must be positive");
  if (budget < 1) throw std::invalid_argument("--budget must be at least 1");
  const auto seed = default_approximation(s);
  const auto seed_q = approximation_quality(s, seed, grid_res);
  const auto fitted = fit_approximation(s, grid_res, budget);
  const auto q = approximation_quality(s, fitted, grid_res);
  log.debug("default IoU " + format_real(seed_q.iou) + ", fitted IoU " + format_real(q.iou));
  out << "{\n\"approximation\": " << io::approximation_json(fitted)
      << ",\n\"quality\": " << io::quality_json(q)
      << ",\n\"default_quality\": " << io::quality_json(seed_q) << "\n}\n";
  return kExitOk;
}

int cmd_extended_check(const std::string& path, std::size_t points, std::ostream& out,
                       const Log& log) {
  const auto g = load_graph(path);
  if (g.edge_count() == 0) throw EmptyGraphError("the extended system needs at least one edge");
  if (points == 0) throw std::invalid_argument("--P must be at least 1");

  const Matrix sb = extended_structural_matrix(g, points);
  const Matrix expected =
      kron(structural_lyapunov_matrix(g), Matrix::Ones(static_cast<Eigen::Index>(points * g.edge_count()),
                                                        static_cast<Eigen::Index>(points * g.edge_count())));
  const double factorization = (sb - expected).cwiseAbs().maxCoeff();

  nlohmann::ordered_json lemma;
  if (auto cycle = find_undirected_cycle(g)) {
    lemma["applicable"] = false;
    lemma["reason"] = "edge Laplacian is singular: the underlying undirected graph has a cycle";
    lemma["cycle_edges"] = *cycle;
    log.info("weight-flip identity skipped: graph is not a forest");
  } else {
    const std::vector<double> unit(g.edge_count(), 1.0);
    lemma["applicable"] = true;
    lemma["residual"] = lemma_identity_residual(g, points, unit);
  }
  const auto prop = psd_propagation(g, points);
  nlohmann::ordered_json report;
  report["points_per_slot"] = points;
  report["factorization_residual"] = factorization;
  report["lemma"] = lemma;
  report["psd_propagation"] = {{"base_psd", prop.base_psd},
                               {"base_min_eig_sym", prop.base_min_eig_sym},
                               {"extended_min_eig_sym", prop.extended_min_eig_sym},
                               {"tolerance", prop.tolerance},
                               {"extended_psd", prop.extended_psd}};
  out << report.dump(2) << '\n';
  return kExitOk;
}

struct SimulationOutput {
  std::string summary;
  bool completed = false;
};

SimulationOutput simulate_into(const ScenarioConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  const auto result = run_scenario(cfg);
  {
    std::ofstream csv(dir / "trajectory.csv", std::ios::binary | std::ios::trunc);
    io::write_trajectory_csv(csv, result.log);
  }
  {
    std::ofstream ev(dir / "events.jsonl", std::ios::binary | std::ios::trunc);
    io::write_events_jsonl(ev, result.events);
  }
  SimulationOutput o;
  o.summary = io::summary_json(result.summary, energy_trace(result.log), cfg);
  o.completed = result.summary.completed;
  std::ofstream(dir / "summary.json", std::ios::binary | std::ios::trunc) << o.summary;
  return o;
}

int cmd_simulate(const std::string& path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed, std::size_t sweep, std::ostream& out,
                 const Log& log) {
  ScenarioConfig cfg = io::load_scenario(path);
  if (seed) cfg.noise.seed = *seed;
  if (sweep == 0) {
    const auto o = simulate_into(cfg, out_dir);
    out << o.summary;
    if (!o.completed) {
      log.info("run stopped early on a terminal event; see " +
               (fs::path(out_dir) / "events.jsonl").string());
      return kExitDomainFailure;
    }
    return kExitOk;
  }

  // Independent seeds, each in its own directory.
  std::vector<std::future<SimulationOutput>> jobs;
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<SimulationOutput> results(sweep);
  for (std::size_t begin = 0; begin < sweep; begin += workers) {
    jobs.clear();
    const std::size_t end = std::min(sweep, begin + workers);
    for (std::size_t k = begin; k < end; ++k) {
      ScenarioConfig c = cfg;
      c.noise.seed = cfg.noise.seed + k;
      const fs::path dir = fs::path(out_dir) / ("seed_" + std::to_string(c.noise.seed));
      jobs.push_back(std::async(std::launch::async, [c, dir] { return simulate_into(c, dir); }));
    }
    for (std::size_t k = begin; k < end; ++k) results[k] = jobs[k - begin].get();
  }
  bool all = true;
  out << "[\n";
  for (std::size_t k = 0; k < sweep; ++k) {
    out << results[k].summary << (k + 1 < sweep ? ",\n" : "\n");
    all = all && results[k].completed;
    log.debug("seed " + std::to_string(cfg.noise.seed + k) +
              (results[k].completed ? " completed" : " stopped early"));
  }
  out << "]\n";
  return all ? kExitOk : kExitDomainFailure;
}

}  // namespace

LogLevel log_level_from_env() {
  const char* v = std::getenv("FOV_TOPO_LOG");
  if (v == nullptr) return LogLevel::Info;
  const std::string s(v);
  if (s == "quiet") return LogLevel::Quiet;
  if (s == "debug") return LogLevel::Debug;
  return LogLevel::Info;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        LogLevel level) {
  const Log log(err, level);
  CLI::App app{"Directed limited field-of-view topology control toolkit", "fovtopo"};
  app.require_subcommand(1);

  std::string graph_path;
  std::optional<double> tol;
  bool require_psd = false;
  auto* certify = app.add_subcommand("certify", "Stability certificate of a directed graph");
  certify->add_option("graph", graph_path, "Graph JSON file")->required();
  certify->add_option("--tol", tol, "PSD tolerance (default scales with the matrix norm)");
  certify->add_flag("--require-psd", require_psd, "Exit with status 1 when the graph is not PSD");

  double heading = 0.0;
  double central_angle = std::numbers::pi / 2;
  double range = 10.0;
  double grid_res = kDefaultGridResolution;
  int budget = 200;
  auto* fit = app.add_subcommand("fit-fov", "Fit the virtual-point approximation of a sector");
  fit->add_option("--heading", heading, "Sector boresight in the body frame (rad)")->capture_default_str();
  fit->add_option("--central-angle", central_angle, "Full opening angle (rad)")->capture_default_str();
  fit->add_option("--range", range, "Sector radius (m)")->capture_default_str();
  fit->add_option("--grid-res", grid_res, "Quality grid cell size (m)")->capture_default_str();
  fit->add_option("--budget", budget, "IoU evaluations, including the default placement")->capture_default_str();

  std::size_t points = kDefaultPointsPerSlot;
  auto* ext = app.add_subcommand("extended-check", "Check the extended-system constructions");
  ext->add_option("graph", graph_path, "Graph JSON file")->required();
  ext->add_option("--P", points, "Points per edge slot")->capture_default_str();

  std::string scenario_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::size_t sweep = 0;
  auto* sim = app.add_subcommand("simulate", "Run a scenario and write its logs");
  sim->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  sim->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  sim->add_option("--seed", seed, "Override the noise seed");
  sim->add_option("--sweep", sweep, "Run this many consecutive seeds, one directory each");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (certify->parsed()) return cmd_certify(graph_path, tol, require_psd, out, log);
    if (fit->parsed()) {
      return cmd_fit_fov(heading, central_angle, range, grid_res, budget, out, log);
    }
    if (ext->parsed()) return cmd_extended_check(graph_path, points, out, log);
    if (sim->parsed()) return cmd_simulate(scenario_path, out_dir, seed, sweep, out, log);
  } catch (const ConfigError& e) {
    log.error(e.what());
    return kExitUsage;
  } catch (const InvalidGraphError& e) {
    log.error(e.what());
    return kExitUsage;
  } catch (const EmptyGraphError& e) {
    log.error(e.what());
    return kExitUsage;
  } catch (const UnsupportedGeometryError& e) {
    log.error(e.what());
    return kExitUsage;
  } catch (const ResolutionError& e) {
    log.error(e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    log.error(e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    log.error(e.what());
    return kExitDomainFailure;
  }
  return kExitUsage;
}

}  // namespace fovtopo::cli
