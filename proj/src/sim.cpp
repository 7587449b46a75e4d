#include "fovtopo/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "fovtopo/error.hpp"

namespace fovtopo {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

LeaderProfile::Kind LeaderProfile::parse_kind(std::string_view name) {
  if (name == "zero") return Kind::Zero;
  if (name == "constant") return Kind::Constant;
  if (name == "cosine") return Kind::Cosine;
  throw ConfigError("unknown leader profile '" + std::string(name) + "'");
}

std::string_view to_string(LeaderProfile::Kind kind) {
  switch (kind) {
    case LeaderProfile::Kind::Zero:
      return "zero";
    case LeaderProfile::Kind::Constant:
      return "constant";
    case LeaderProfile::Kind::Cosine:
      return "cosine";
  }
  return "zero";
}

Vec2 leader_velocity(const LeaderProfile& profile, double t, double initial_heading) {
  if (t < 0.0) {
    throw std::invalid_argument("leader profile evaluated at negative time");
  }
  switch (profile.kind) {
    case LeaderProfile::Kind::Zero:
      return Vec2::Zero();
    case LeaderProfile::Kind::Constant:
      return profile.velocity;
    case LeaderProfile::Kind::Cosine: {
      const double omega = 2.0 * std::numbers::pi / profile.period;
      const Vec2 body(profile.forward_speed, profile.amplitude * std::cos(omega * t));
      return rotation(initial_heading) * body;
    }
  }
  return Vec2::Zero();
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::LinkMarginLow:
      return "link_margin_low";
    case EventKind::LinkBreak:
      return "link_break";
    case EventKind::CollisionBandEntry:
      return "collision_band_entry";
    case EventKind::CollisionBandExit:
      return "collision_band_exit";
    case EventKind::Collision:
      return "collision";
    case EventKind::SubstepExhaustion:
      return "substep_exhaustion";
  }
  return "unknown";
}

bool is_terminal(EventKind kind) {
  return kind == EventKind::LinkBreak || kind == EventKind::Collision ||
         kind == EventKind::SubstepExhaustion;
}

std::vector<RobotSpec> ScenarioConfig::specs() const {
  std::vector<RobotSpec> out;
  out.reserve(agents.size());
  for (const auto& a : agents) out.push_back(a.spec);
  return out;
}

std::vector<AgentPose> ScenarioConfig::initial_poses() const {
  std::vector<AgentPose> out;
  out.reserve(agents.size());
  for (const auto& a : agents) out.push_back(a.initial);
  return out;
}

bool ScenarioConfig::has_leader() const {
  return std::any_of(agents.begin(), agents.end(), [&](const AgentConfig& a) {
    if (a.role != Role::Leader) return false;
    const auto& p = a.profile ? *a.profile : leader_profile;
    return p.kind != LeaderProfile::Kind::Zero;
  });
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (dimension != 2) fail("only planar scenarios (dimension 2) are supported");
  if (agents.empty()) fail("scenario needs at least one agent");
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt must be positive");
  if (!(duration >= 0.0) || !std::isfinite(duration)) fail("duration must be non-negative");
  if (duration > 0.0 && duration < dt) fail("duration must be zero or at least dt");
  if (!(noise.sigma >= 0.0)) fail("noise sigma must be non-negative");
  if (log_stride == 0) fail("log_stride must be at least 1");
  if (max_halvings < 0 || max_halvings > 30) fail("max_halvings must lie in [0, 30]");
  if (!(substep_fraction > 0.0)) fail("substep_fraction must be positive");
  if (!(potentials.v_max > 0.0)) fail("v_max must be positive");
  if (!(potentials.collision.delta_act > 0.0)) fail("collision delta_act must be positive");
  if (!(potentials.upper_act_frac > 0.0 && potentials.upper_act_frac < 1.0)) {
    fail("upper_act_frac must lie in (0, 1)");
  }
  if (!(potentials.lower_act_frac > 0.0)) fail("lower_act_frac must be positive");
  if (graph.graph.vertex_count() != agents.size()) {
    fail("graph vertex count does not match the number of agents");
  }
  if (graph.sector_of_edge.size() != graph.graph.edge_count()) {
    fail("every graph edge needs a sector assignment");
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    try {
      agents[i].spec.validate();
    } catch (const std::exception& e) {
      fail("agent " + std::to_string(i) + ": " + e.what());
    }
    if (agents[i].role == Role::Leader && agents[i].profile &&
        agents[i].profile->kind == LeaderProfile::Kind::Cosine &&
        !(agents[i].profile->period > 0.0)) {
      fail("agent " + std::to_string(i) + ": cosine period must be positive");
    }
  }
  if (leader_profile.kind == LeaderProfile::Kind::Cosine && !(leader_profile.period > 0.0)) {
    fail("cosine period must be positive");
  }
  const auto poses = initial_poses();
  const auto robot_specs = specs();
  for (std::size_t i = 0; i < agents.size(); ++i) {
    for (std::size_t j = i + 1; j < agents.size(); ++j) {
      const double d = (poses[i].position - poses[j].position).norm();
      if (d < kCoincidenceGuard) {
        fail("agents " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
      }
      if (d <= collision_limit(robot_specs[i], robot_specs[j])) {
        fail("agents " + std::to_string(i) + " and " + std::to_string(j) +
             " start inside their collision radius");
      }
    }
  }
  for (std::size_t k = 0; k < graph.graph.edge_count(); ++k) {
    const Edge& e = graph.graph.edge(k);
    const std::size_t sector = graph.sector_of_edge[k];
    if (sector >= robot_specs[e.tail].sectors.size()) {
      fail("edge " + std::to_string(k) + " refers to a missing sector");
    }
  }
  const InteractionModel model = make_interaction(graph, robot_specs, potentials);
  for (std::size_t k = 0; k < graph.graph.edge_count(); ++k) {
    const Edge& e = graph.graph.edge(k);
    const auto d = edge_distances(poses, model, robot_specs, k);
    const auto& p = model.potentials[k];
    bool intact = !p.inclusion.violated(d[0]);
    for (std::size_t t = 0; t < 3; ++t) intact = intact && !p.exclusion[t].violated(d[t + 1]);
    if (!intact) {
      fail("link " + std::to_string(k) + " (" + std::to_string(e.tail) + " -> " +
           std::to_string(e.head) + ") is broken in the initial configuration");
    }
  }
}

std::vector<LinkMargin> link_margins(std::span<const AgentPose> poses,
                                     const ScenarioConfig& config) {
  const auto specs = config.specs();
  const InteractionModel model = make_interaction(config.graph, specs, config.potentials);
  std::vector<LinkMargin> out;
  out.reserve(config.graph.graph.edge_count());
  for (std::size_t k = 0; k < config.graph.graph.edge_count(); ++k) {
    const auto d = edge_distances(poses, model, specs, k);
    const auto& p = model.potentials[k];
    LinkMargin m;
    m.inclusion = p.inclusion.margin(d[0]);
    m.exclusion = kInf;
    for (std::size_t t = 0; t < 3; ++t) m.exclusion = std::min(m.exclusion, p.exclusion[t].margin(d[t + 1]));
    out.push_back(m);
  }
  return out;
}

namespace {

struct Derivative {
  std::vector<Vec2> velocity;
  std::vector<double> heading_rate;
};

const LeaderProfile& profile_of(const AgentConfig& a, const ScenarioConfig& config) {
  return a.profile ? *a.profile : config.leader_profile;
}

Derivative vector_field(std::span<const AgentPose> poses, const ScenarioConfig& config,
                        const InteractionModel& model, std::span<const RobotSpec> specs,
                        double t, std::span<const Vec2> offsets) {
  const std::size_t n = poses.size();
  std::vector<AgentPose> seen(poses.begin(), poses.end());
  if (config.noise.control_uses_measurements && !offsets.empty()) {
    for (std::size_t i = 0; i < n; ++i) seen[i].position += offsets[i];
  }
  Derivative d{std::vector<Vec2>(n, Vec2::Zero()), std::vector<double>(n, 0.0)};
  const auto& g = model.topology.graph;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& agent = config.agents[i];
    if (agent.role == Role::Leader) {
      d.velocity[i] = leader_velocity(profile_of(agent, config), t, agent.initial.heading);
    } else {
      Vec2 u = agent_control(i, seen, model, specs);
      if (config.potentials.collision.enabled) {
        u += collision_control(i, seen, specs, config.potentials.collision);
      }
      d.velocity[i] = config.potentials.clamp_speed ? clamp_speed(u, config.potentials.v_max) : u;
    }
    if (config.heading_policy == HeadingPolicy::FaceTarget) {
      for (std::size_t k = 0; k < g.edge_count(); ++k) {
        if (g.edge(k).tail != i) continue;
        const Vec2 to = seen[g.edge(k).head].position - seen[i].position;
        const double mount = specs[i].sectors[model.potentials[k].sector].sector.heading;
        const double error =
            wrap_angle(std::atan2(to.y(), to.x()) - (seen[i].heading + mount));
        d.heading_rate[i] = config.heading_rate * error;
        break;
      }
    }
  }
  return d;
}

std::vector<AgentPose> advance(std::span<const AgentPose> poses, const Derivative& d, double h) {
  std::vector<AgentPose> out(poses.begin(), poses.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].position += h * d.velocity[i];
    out[i].heading += h * d.heading_rate[i];
  }
  return out;
}

// Smallest margin of any active barrier touching each agent (+inf when none is active).
std::vector<double> active_margins(std::span<const AgentPose> poses, const ScenarioConfig& config,
                                   const InteractionModel& model,
                                   std::span<const RobotSpec> specs) {
  std::vector<double> m(poses.size(), kInf);
  const auto& g = model.topology.graph;
  for (std::size_t k = 0; k < g.edge_count(); ++k) {
    const auto d = edge_distances(poses, model, specs, k);
    const auto& p = model.potentials[k];
    double edge_min = kInf;
    if (p.inclusion.active(d[0])) edge_min = std::min(edge_min, p.inclusion.margin(d[0]));
    for (std::size_t t = 0; t < 3; ++t) {
      if (p.exclusion[t].active(d[t + 1])) {
        edge_min = std::min(edge_min, p.exclusion[t].margin(d[t + 1]));
      }
    }
    m[g.edge(k).tail] = std::min(m[g.edge(k).tail], edge_min);
    m[g.edge(k).head] = std::min(m[g.edge(k).head], edge_min);
  }
  if (config.potentials.collision.enabled) {
    for (std::size_t i = 0; i < poses.size(); ++i) {
      for (std::size_t j = i + 1; j < poses.size(); ++j) {
        const double d = (poses[i].position - poses[j].position).norm();
        const double limit = collision_limit(specs[i], specs[j]);
        if (d < limit + config.potentials.collision.delta_act) {
          m[i] = std::min(m[i], d - limit);
          m[j] = std::min(m[j], d - limit);
        }
      }
    }
  }
  return m;
}

enum class Failure { None, Displacement, LinkBreak, Collision };

struct Violation {
  Failure kind = Failure::None;
  std::optional<std::size_t> edge;
  std::optional<std::pair<std::size_t, std::size_t>> pair;
  double value = 0.0;
  std::string detail;
};

// Checks every barrier and collision limit at a candidate state.
Violation check_state(std::span<const AgentPose> poses, const ScenarioConfig& config,
                      const InteractionModel& model, std::span<const RobotSpec> specs) {
  const auto& g = model.topology.graph;
  for (std::size_t k = 0; k < g.edge_count(); ++k) {
    const auto d = edge_distances(poses, model, specs, k);
    const auto& p = model.potentials[k];
    double worst = p.inclusion.margin(d[0]);
    for (std::size_t t = 0; t < 3; ++t) worst = std::min(worst, p.exclusion[t].margin(d[t + 1]));
    if (!(worst > 0.0)) {
      return {Failure::LinkBreak, k, std::nullopt, worst, "link margin exhausted"};
    }
  }
  if (config.potentials.collision.enabled) {
    for (std::size_t i = 0; i < poses.size(); ++i) {
      for (std::size_t j = i + 1; j < poses.size(); ++j) {
        const double d = (poses[i].position - poses[j].position).norm();
        if (d <= collision_limit(specs[i], specs[j])) {
          return {Failure::Collision, std::nullopt, std::make_pair(i, j), d, "collision"};
        }
      }
    }
  }
  return {};
}

}  // namespace

std::vector<Vec2> closed_loop_velocities(std::span<const AgentPose> poses,
                                         const ScenarioConfig& config,
                                         const InteractionModel& model, double t) {
  const auto specs = config.specs();
  return vector_field(poses, config, model, specs, t, {}).velocity;
}

namespace {

StepResult step_with(const SimState& state, const ScenarioConfig& config,
                     const InteractionModel& model, std::span<const RobotSpec> specs, double t,
                     std::span<const Vec2> offsets) {
  // Substep lengths are dt / 2^level; progress is counted in units of dt / 2^max_halvings so
  // the end of the step lands exactly on dt.
  const int max_level = config.max_halvings;
  const std::uint64_t total = std::uint64_t{1} << max_level;
  std::uint64_t done = 0;
  int level = 0;
  int halvings = 0;
  std::vector<AgentPose> poses = state.poses;
  Violation last;

  while (done < total) {
    const std::uint64_t units = std::uint64_t{1} << (max_level - level);
    const std::uint64_t take = std::min(units, total - done);
    const double h = config.dt * static_cast<double>(take) / static_cast<double>(total);
    const double ts = t + config.dt * static_cast<double>(done) / static_cast<double>(total);

    Violation failure;
    std::vector<AgentPose> next;
    try {
      const auto k1 = vector_field(poses, config, model, specs, ts, offsets);
      const auto k2 = vector_field(advance(poses, k1, 0.5 * h), config, model, specs,
                                   ts + 0.5 * h, offsets);
      const auto k3 = vector_field(advance(poses, k2, 0.5 * h), config, model, specs,
                                   ts + 0.5 * h, offsets);
      const auto k4 =
          vector_field(advance(poses, k3, h), config, model, specs, ts + h, offsets);
      next = poses;
      for (std::size_t i = 0; i < next.size(); ++i) {
        next[i].position += h / 6.0 *
                            (k1.velocity[i] + 2.0 * k2.velocity[i] + 2.0 * k3.velocity[i] +
                             k4.velocity[i]);
        next[i].heading += h / 6.0 *
                           (k1.heading_rate[i] + 2.0 * k2.heading_rate[i] +
                            2.0 * k3.heading_rate[i] + k4.heading_rate[i]);
      }
      failure = check_state(next, config, model, specs);
      if (failure.kind == Failure::None) {
        const auto margins = active_margins(poses, config, model, specs);
        for (std::size_t i = 0; i < next.size(); ++i) {
          const double moved = (next[i].position - poses[i].position).norm();
          if (moved > config.substep_fraction * margins[i]) {
            failure = {Failure::Displacement, std::nullopt, std::nullopt, moved,
                       "agent " + std::to_string(i) + " outpaces its barrier margin"};
            break;
          }
        }
      }
    } catch (const ConstraintViolationError& e) {
      failure = {Failure::LinkBreak,
                 e.edge == ConstraintViolationError::kNoEdge ? std::nullopt
                                                             : std::optional(e.edge),
                 std::nullopt, e.distance - e.limit, e.what()};
    } catch (const CollisionError& e) {
      failure = {Failure::Collision, std::nullopt, std::make_pair(e.first, e.second), e.distance,
                 e.what()};
    }

    if (failure.kind == Failure::None) {
      poses = std::move(next);
      done += take;
      continue;
    }
    last = failure;
    if (level == max_level) {
      Event ev;
      ev.t = ts;
      ev.edge = last.edge;
      ev.pair = last.pair;
      ev.value = last.value;
      ev.detail = last.detail;
      switch (last.kind) {
        case Failure::LinkBreak:
          ev.kind = EventKind::LinkBreak;
          break;
        case Failure::Collision:
          ev.kind = EventKind::Collision;
          break;
        default:
          ev.kind = EventKind::SubstepExhaustion;
          break;
      }
      return {SimState{std::move(poses)}, ev, halvings};
    }
    ++level;
    ++halvings;
  }
  return {SimState{std::move(poses)}, std::nullopt, halvings};
}

}  // namespace

StepResult step(const SimState& state, const ScenarioConfig& config, double t,
                std::span<const Vec2> measurement_offsets) {
  const auto specs = config.specs();
  const InteractionModel model = make_interaction(config.graph, specs, config.potentials);
  return step_with(state, config, model, specs, t, measurement_offsets);
}

namespace {

class Recorder {
public:
  Recorder(const ScenarioConfig& config, const InteractionModel& model,
           std::span<const RobotSpec> specs)
      : config_(config),
        model_(model),
        specs_(specs),
        n_(config.agents.size()),
        in_band_(n_ * n_, false),
        margin_low_(model.topology.graph.edge_count(), false) {}

  // Band and margin transitions, topology membership and running extrema.
  void observe(double t, std::span<const AgentPose> poses, std::span<const LinkMargin> margins,
               EventLog& events, RunSummary& summary) {
    for (std::size_t k = 0; k < margins.size(); ++k) {
      const double m = margins[k].min();
      summary.min_link_margin = std::min(summary.min_link_margin, m);
      const bool low = m < config_.margin_threshold;
      if (low && !margin_low_[k]) {
        Event ev;
        ev.t = t;
        ev.kind = EventKind::LinkMarginLow;
        ev.edge = k;
        ev.value = m;
        events.push_back(ev);
      }
      margin_low_[k] = low;
    }
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) {
        const double d = (poses[i].position - poses[j].position).norm();
        summary.min_pairwise_distance = std::min(summary.min_pairwise_distance, d);
        const double band =
            collision_limit(specs_[i], specs_[j]) + config_.potentials.collision.delta_act;
        const bool inside = d < band;
        if (inside != in_band_[i * n_ + j]) {
          Event ev;
          ev.t = t;
          ev.kind = inside ? EventKind::CollisionBandEntry : EventKind::CollisionBandExit;
          ev.pair = std::make_pair(i, j);
          ev.value = d;
          events.push_back(ev);
          in_band_[i * n_ + j] = inside;
        }
      }
      const Vec2& x = poses[i].position;
      if (x.x() < 0.0 || x.x() > config_.arena_width || x.y() < 0.0 ||
          x.y() > config_.arena_height) {
        summary.arena_respected = false;
      }
    }
    const auto& g = model_.topology.graph;
    for (std::size_t k = 0; k < g.edge_count(); ++k) {
      const Edge& e = g.edge(k);
      if (!select_sector(poses[e.tail].position, poses[e.tail].heading, specs_[e.tail],
                         poses[e.head].position)) {
        summary.topology_maintained = false;
      }
    }
  }

private:
  const ScenarioConfig& config_;
  const InteractionModel& model_;
  std::span<const RobotSpec> specs_;
  std::size_t n_;
  std::vector<bool> in_band_;
  std::vector<bool> margin_low_;
};

std::size_t step_count(const ScenarioConfig& config) {
  const double ratio = config.duration / config.dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio)) {
    return static_cast<std::size_t>(rounded);
  }
  return static_cast<std::size_t>(std::floor(ratio));
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& config) {
  config.validate();
  const auto specs = config.specs();
  const InteractionModel model = make_interaction(config.graph, specs, config.potentials);
  const std::size_t n = config.agents.size();
  const std::size_t steps = step_count(config);

  RunResult result;
  result.log.leaderless = !config.has_leader();
  result.log.noiseless_control = !config.noise.control_uses_measurements || config.noise.sigma == 0.0;
  auto& summary = result.summary;
  summary.min_link_margin = kInf;
  summary.min_pairwise_distance = kInf;

  std::mt19937_64 rng(config.noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vec2> offsets(n, Vec2::Zero());
  auto draw_offsets = [&] {
    for (auto& o : offsets) {
      const double ox = gauss(rng);
      const double oy = gauss(rng);
      o = config.noise.sigma * Vec2(ox, oy);
    }
  };

  Recorder recorder(config, model, specs);
  SimState state{config.initial_poses()};
  auto snapshot = [&](std::size_t k, double t) {
    Snapshot s;
    s.t = t;
    s.poses = state.poses;
    s.margins = link_margins(state.poses, config);
    recorder.observe(t, state.poses, s.margins, result.events, summary);
    s.energy = system_energy(state.poses, model, specs);
    summary.max_energy = std::max(summary.max_energy, s.energy);
    s.measurements.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.measurements[i] = state.poses[i].position + offsets[i];
    try {
      s.controls = vector_field(state.poses, config, model, specs, t, offsets).velocity;
    } catch (const Error&) {
      s.controls.assign(n, Vec2::Zero());
    }
    if (k % config.log_stride == 0 || k == steps) {
      result.log.snapshots.push_back(std::move(s));
    }
  };

  draw_offsets();
  snapshot(0, 0.0);
  std::size_t k = 0;
  for (; k < steps; ++k) {
    const double t = static_cast<double>(k) * config.dt;
    StepResult r = step_with(state, config, model, specs, t, offsets);
    state = std::move(r.next);
    if (r.terminal) {
      result.events.push_back(*r.terminal);
      summary.terminal_event = r.terminal->kind;
      summary.final_time = r.terminal->t;
      summary.steps = k;
      if (r.terminal->kind == EventKind::LinkBreak) summary.topology_maintained = false;
      return result;
    }
    draw_offsets();
    snapshot(k + 1, static_cast<double>(k + 1) * config.dt);
  }
  summary.completed = true;
  summary.steps = k;
  summary.final_time = static_cast<double>(k) * config.dt;
  return result;
}

EnergyTrace energy_trace(const TrajectoryLog& log) {
  EnergyTrace trace;
  trace.times.reserve(log.snapshots.size());
  trace.energies.reserve(log.snapshots.size());
  double max_inc = 0.0;
  for (std::size_t k = 0; k < log.snapshots.size(); ++k) {
    const double e = log.snapshots[k].energy;
    trace.times.push_back(log.snapshots[k].t);
    trace.energies.push_back(e);
    if (!std::isfinite(e)) {
      trace.all_finite = false;
    } else {
      trace.max_energy = std::max(trace.max_energy, e);
    }
    if (k > 0) max_inc = std::max(max_inc, e - log.snapshots[k - 1].energy);
  }
  if (log.leaderless && log.noiseless_control) {
    trace.max_positive_increment = max_inc;
  }
  return trace;
}

}  // namespace fovtopo
