#include "fovtopo/io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "fovtopo/error.hpp"

namespace fovtopo::io {

using nlohmann::json;

std::string format_real(double v) {
  if (!std::isfinite(v)) return "null";
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

Vec2 vec2(const json& j) {
  if (!j.is_array() || j.size() != 2) {
    throw ConfigError("expected a two-element array, got " + j.dump());
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

DirectedGraph graph_from(const json& j, std::optional<std::size_t> default_n = std::nullopt) {
  if (!j.is_object()) throw ConfigError("graph must be a JSON object");
  std::size_t n = 0;
  if (j.contains("n")) {
    const long long raw = j.at("n").get<long long>();
    if (raw < 1) throw ConfigError("graph 'n' must be at least 1");
    n = static_cast<std::size_t>(raw);
  } else if (default_n) {
    n = *default_n;
  } else {
    throw ConfigError("graph is missing 'n'");
  }
  if (!j.contains("edges") || !j.at("edges").is_array()) {
    throw ConfigError("graph is missing the 'edges' array");
  }
  std::vector<Edge> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) throw ConfigError("each edge must be [tail, head]");
    const long long tail = e[0].get<long long>();
    const long long head = e[1].get<long long>();
    if (tail < 0 || head < 0) throw InvalidGraphError("negative vertex index in edge list");
    edges.push_back({static_cast<std::size_t>(tail), static_cast<std::size_t>(head)});
  }
  return DirectedGraph(n, std::move(edges));
}

FovApproximation approx_from(const json& j) {
  FovApproximation a;
  a.inclusion_radius = j.at("rho1").get<double>();
  if (j.contains("rho2_per_point")) {
    const auto& r = j.at("rho2_per_point");
    if (!r.is_array() || r.size() != 3) throw ConfigError("rho2_per_point needs three values");
    for (std::size_t k = 0; k < 3; ++k) a.exclusion_radii[k] = r[k].get<double>();
  } else {
    const double rho2 = j.at("rho2").get<double>();
    a.exclusion_radii = {rho2, rho2, rho2};
  }
  const auto& offs = j.at("offsets");
  if (!offs.is_array() || offs.size() != 3) {
    throw ConfigError("approximation needs exactly three offsets [phi, tx, ty]");
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& o = offs[k];
    if (!o.is_array() || o.size() != 3) throw ConfigError("offset must be [phi, tx, ty]");
    a.offsets[k].rotation = o[0].get<double>();
    a.offsets[k].translation = Vec2(o[1].get<double>(), o[2].get<double>());
  }
  return a;
}

SensingSector sector_from(const json& j) {
  SensingSector s;
  s.sector.heading = get_or(j, "heading", 0.0);
  s.sector.central_angle = j.at("central_angle").get<double>();
  s.sector.range = j.at("range").get<double>();
  try {
    s.sector.validate();
  } catch (const UnsupportedGeometryError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (j.contains("approx") && !j.at("approx").is_null()) {
    s.approx = approx_from(j.at("approx"));
    try {
      s.approx.validate_against(s.sector);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else {
    s.approx = default_approximation(s.sector);
  }
  return s;
}

LeaderProfile profile_from(const json& j) {
  LeaderProfile p;
  if (j.is_string()) {
    p.kind = LeaderProfile::parse_kind(j.get<std::string>());
    return p;
  }
  p.kind = LeaderProfile::parse_kind(get_or<std::string>(j, "kind", "zero"));
  p.forward_speed = get_or(j, "forward_speed", p.forward_speed);
  p.amplitude = get_or(j, "amplitude", p.amplitude);
  p.period = get_or(j, "period", p.period);
  if (j.contains("velocity")) p.velocity = vec2(j.at("velocity"));
  return p;
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid document: ") + e.what());
  }
}

}  // namespace

DirectedGraph parse_graph(std::string_view text) {
  const json j = parse_json(text);
  return guarded([&] { return graph_from(j); });
}

std::string certificate_json(const StabilityCertificate& c) {
  std::ostringstream out;
  out << "{\"psd\": " << (c.psd ? "true" : "false")
      << ", \"min_eig_sym\": " << format_real(c.min_eig_sym)
      << ", \"edge_laplacian_invertible\": " << (c.edge_laplacian_invertible ? "true" : "false")
      << ", \"tolerance_used\": " << format_real(c.tolerance_used) << "}";
  return out.str();
}

SensingSector parse_sector(std::string_view text) {
  const json j = parse_json(text);
  return guarded([&] { return sector_from(j); });
}

std::string approximation_json(const FovApproximation& a) {
  std::ostringstream out;
  out << "{\"rho1\": " << format_real(a.inclusion_radius);
  const bool shared = a.exclusion_radii[0] == a.exclusion_radii[1] &&
                      a.exclusion_radii[1] == a.exclusion_radii[2];
  if (shared) {
    out << ", \"rho2\": " << format_real(a.exclusion_radii[0]);
  } else {
    out << ", \"rho2_per_point\": [" << format_real(a.exclusion_radii[0]) << ", "
        << format_real(a.exclusion_radii[1]) << ", " << format_real(a.exclusion_radii[2]) << "]";
  }
  out << ", \"offsets\": [";
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& o = a.offsets[k];
    out << (k ? ", " : "") << "[" << format_real(o.rotation) << ", "
        << format_real(o.translation.x()) << ", " << format_real(o.translation.y()) << "]";
  }
  out << "]}";
  return out.str();
}

std::string quality_json(const ApproximationQuality& q) {
  std::ostringstream out;
  out << "{\"iou\": " << format_real(q.iou)
      << ", \"false_positive_area\": " << format_real(q.false_positive_area)
      << ", \"false_negative_area\": " << format_real(q.false_negative_area)
      << ", \"grid_resolution\": " << format_real(q.grid_resolution) << "}";
  return out.str();
}

ScenarioConfig parse_scenario(std::string_view text) {
  const json j = parse_json(text);
  return guarded([&] {
    if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
    ScenarioConfig c;
    c.dimension = get_or(j, "dimension", 2);
    c.dt = get_or(j, "dt", c.dt);
    c.duration = j.at("duration").get<double>();
    if (j.contains("arena")) {
      c.arena_width = get_or(j.at("arena"), "width", c.arena_width);
      c.arena_height = get_or(j.at("arena"), "height", c.arena_height);
    }
    const std::string policy = get_or<std::string>(j, "heading_policy", "fixed");
    if (policy == "fixed") {
      c.heading_policy = HeadingPolicy::Fixed;
    } else if (policy == "face-target") {
      c.heading_policy = HeadingPolicy::FaceTarget;
    } else {
      throw ConfigError("unknown heading policy '" + policy + "'");
    }
    c.heading_rate = get_or(j, "heading_rate", c.heading_rate);
    c.margin_threshold = get_or(j, "margin_threshold", c.margin_threshold);
    const long long stride = get_or(j, "log_stride", 1LL);
    if (stride < 1) throw ConfigError("log_stride must be at least 1");
    c.log_stride = static_cast<std::size_t>(stride);

    if (j.contains("potentials")) {
      const auto& p = j.at("potentials");
      c.potentials.gain = get_or(p, "gain", c.potentials.gain);
      c.potentials.upper_act_frac = get_or(p, "upper_act_frac", c.potentials.upper_act_frac);
      c.potentials.lower_act_frac = get_or(p, "lower_act_frac", c.potentials.lower_act_frac);
      c.potentials.v_max = get_or(p, "v_max", c.potentials.v_max);
      c.potentials.clamp_speed = get_or(p, "clamp_speed", c.potentials.clamp_speed);
      if (p.contains("collision")) {
        const auto& col = p.at("collision");
        c.potentials.collision.r_col = get_or(col, "r_col", c.potentials.collision.r_col);
        c.potentials.collision.delta_act =
            get_or(col, "delta_act", c.potentials.collision.delta_act);
        c.potentials.collision.enabled = get_or(col, "enabled", c.potentials.collision.enabled);
      }
    }
    if (j.contains("leader_profile")) c.leader_profile = profile_from(j.at("leader_profile"));
    if (j.contains("noise")) {
      const auto& nz = j.at("noise");
      c.noise.sigma = get_or(nz, "sigma", 0.0);
      c.noise.seed = get_or<std::uint64_t>(nz, "seed", 0);
      c.noise.control_uses_measurements = get_or(nz, "control_uses_measurements", false);
    }

    const auto& agents = j.at("agents");
    if (!agents.is_array() || agents.empty()) throw ConfigError("'agents' must be a non-empty array");
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const auto& a = agents[i];
      AgentConfig ac;
      ac.name = get_or<std::string>(a, "name", "agent" + std::to_string(i + 1));
      ac.initial.position = vec2(a.at("position"));
      ac.initial.heading = get_or(a, "heading", 0.0);
      const std::string role = get_or<std::string>(a, "role", "follower");
      if (role == "follower") {
        ac.role = Role::Follower;
      } else if (role == "leader") {
        ac.role = Role::Leader;
      } else {
        throw ConfigError("agent " + std::to_string(i) + ": unknown role '" + role + "'");
      }
      if (a.contains("profile")) ac.profile = profile_from(a.at("profile"));
      ac.spec.comm_radius = get_or(a, "comm_radius", 1.0);
      ac.spec.collision_radius = get_or(a, "collision_radius", c.potentials.collision.r_col);
      const auto& sectors = a.at("sectors");
      if (!sectors.is_array() || sectors.empty()) {
        throw ConfigError("agent " + std::to_string(i) + " needs at least one sector");
      }
      for (const auto& s : sectors) ac.spec.sectors.push_back(sector_from(s));
      c.agents.push_back(std::move(ac));
    }

    const auto& gj = j.at("graph");
    DirectedGraph g = graph_from(gj, c.agents.size());
    std::vector<std::size_t> sectors;
    if (gj.contains("sectors")) {
      for (const auto& s : gj.at("sectors")) sectors.push_back(s.get<std::size_t>());
      if (sectors.size() != g.edge_count()) {
        throw ConfigError("graph 'sectors' must have one entry per edge");
      }
    } else {
      for (std::size_t k = 0; k < g.edge_count(); ++k) {
        const Edge& e = g.edge(k);
        if (e.tail >= c.agents.size() || e.head >= c.agents.size()) {
          throw ConfigError("graph edge references a missing agent");
        }
        const auto& tail = c.agents[e.tail];
        auto sel = select_sector(tail.initial.position, tail.initial.heading, tail.spec,
                                 c.agents[e.head].initial.position);
        if (!sel) {
          throw ConfigError("link " + std::to_string(k) + " (" + std::to_string(e.tail) +
                            " -> " + std::to_string(e.head) +
                            ") is broken in the initial configuration");
        }
        sectors.push_back(*sel);
      }
    }
    c.graph = SensingTopology{std::move(g), std::move(sectors)};
    c.validate();
    return c;
  });
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_file(path));
}

void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log) {
  out << "t,agent,x,y,heading,ux,uy,meas_x,meas_y,energy\n";
  for (const auto& s : log.snapshots) {
    const std::string t = format_real(s.t);
    const std::string energy = format_real(s.energy);
    for (std::size_t i = 0; i < s.poses.size(); ++i) {
      out << t << ',' << i << ',' << format_real(s.poses[i].position.x()) << ','
          << format_real(s.poses[i].position.y()) << ',' << format_real(s.poses[i].heading)
          << ',' << format_real(s.controls[i].x()) << ',' << format_real(s.controls[i].y())
          << ',' << format_real(s.measurements[i].x()) << ','
          << format_real(s.measurements[i].y()) << ',' << energy << '\n';
    }
  }
}

void write_events_jsonl(std::ostream& out, const EventLog& events) {
  for (const auto& e : events) {
    out << "{\"t\": " << format_real(e.t) << ", \"kind\": \"" << to_string(e.kind) << "\"";
    if (e.edge) out << ", \"edge\": " << *e.edge;
    if (e.pair) out << ", \"pair\": [" << e.pair->first << ", " << e.pair->second << "]";
    out << ", \"value\": " << format_real(e.value);
    if (!e.detail.empty()) out << ", \"detail\": " << json(e.detail).dump();
    out << "}\n";
  }
}

std::string summary_json(const RunSummary& s, const EnergyTrace& trace,
                         const ScenarioConfig& config) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"completed\": " << (s.completed ? "true" : "false") << ",\n";
  out << "  \"terminal_event\": "
      << (s.terminal_event ? "\"" + std::string(to_string(*s.terminal_event)) + "\"" : "null")
      << ",\n";
  out << "  \"topology_maintained\": " << (s.topology_maintained ? "true" : "false") << ",\n";
  out << "  \"min_link_margin\": " << format_real(s.min_link_margin) << ",\n";
  out << "  \"min_pairwise_distance\": " << format_real(s.min_pairwise_distance) << ",\n";
  out << "  \"max_energy\": " << format_real(s.max_energy) << ",\n";
  out << "  \"max_positive_energy_increment\": "
      << (trace.max_positive_increment ? format_real(*trace.max_positive_increment) : "null")
      << ",\n";
  out << "  \"final_time\": " << format_real(s.final_time) << ",\n";
  out << "  \"steps\": " << s.steps << ",\n";
  out << "  \"arena_respected\": " << (s.arena_respected ? "true" : "false") << ",\n";
  out << "  \"seed\": " << config.noise.seed << ",\n";
  out << "  \"agents\": " << config.agents.size() << ",\n";
  out << "  \"edges\": " << config.graph.graph.edge_count() << "\n";
  out << "}\n";
  return out.str();
}

}  // namespace fovtopo::io
