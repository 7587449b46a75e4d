#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fovtopo/control.hpp"
#include "fovtopo/fov.hpp"
#include "fovtopo/graph.hpp"

namespace fovtopo {

enum class Role { Follower, Leader };

struct LeaderProfile {
  enum class Kind { Zero, Constant, Cosine };
  Kind kind = Kind::Zero;
  // Cosine: (forward_speed, amplitude cos(2 pi t / period)) in the leader's initial frame.
  double forward_speed = 0.3;
  double amplitude = 0.2;
  double period = 20.0;
  // Constant: fixed world-frame velocity.
  Vec2 velocity = Vec2::Zero();

  /// "zero", "constant" or "cosine"; anything else throws ConfigError.
  static Kind parse_kind(std::string_view name);
};

std::string_view to_string(LeaderProfile::Kind kind);

/// Velocity of a leader at time t; `initial_heading` orients the cosine profile.
Vec2 leader_velocity(const LeaderProfile& profile, double t, double initial_heading = 0.0);

struct AgentConfig {
  std::string name;
  AgentPose initial;
  RobotSpec spec;
  Role role = Role::Follower;
  std::optional<LeaderProfile> profile;  // falls back to ScenarioConfig::leader_profile
};

enum class HeadingPolicy {
  Fixed,       // headings never change
  FaceTarget,  // first-order lag toward the head of the agent's first out-edge
};

struct NoiseConfig {
  double sigma = 0.0;
  std::uint64_t seed = 0;
  bool control_uses_measurements = false;
};

struct ScenarioConfig {
  int dimension = 2;
  std::vector<AgentConfig> agents;
  /// Preselected interaction graph with its sector assignment.
  SensingTopology graph{DirectedGraph(1, {}), {}};
  ControlParams potentials;
  LeaderProfile leader_profile;
  NoiseConfig noise;
  HeadingPolicy heading_policy = HeadingPolicy::Fixed;
  double heading_rate = 1.0;  // 1/s, FaceTarget only
  double dt = 0.01;
  double duration = 0.0;
  double arena_width = 30.0;
  double arena_height = 20.0;
  double margin_threshold = 0.1;
  std::size_t log_stride = 1;
  int max_halvings = 12;
  double substep_fraction = 0.1;

  /// Throws ConfigError naming the first violated invariant, including broken initial links and
  /// agents starting inside a collision radius.
  void validate() const;

  std::vector<RobotSpec> specs() const;
  std::vector<AgentPose> initial_poses() const;
  bool has_leader() const;
};

struct LinkMargin {
  double inclusion = 0.0;  // rho1 - |x_i - x_j|
  double exclusion = 0.0;  // min over virtual points of |x_i^tau - x_j| - rho2
  double min() const { return std::min(inclusion, exclusion); }
};

std::vector<LinkMargin> link_margins(std::span<const AgentPose> poses,
                                     const ScenarioConfig& config);

struct Snapshot {
  double t = 0.0;
  std::vector<AgentPose> poses;
  std::vector<Vec2> controls;
  std::vector<Vec2> measurements;
  double energy = 0.0;
  std::vector<LinkMargin> margins;
};

struct TrajectoryLog {
  std::vector<Snapshot> snapshots;
  bool leaderless = true;
  bool noiseless_control = true;
};

enum class EventKind {
  LinkMarginLow,
  LinkBreak,
  CollisionBandEntry,
  CollisionBandExit,
  Collision,
  SubstepExhaustion,
};

std::string_view to_string(EventKind kind);
bool is_terminal(EventKind kind);

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::LinkMarginLow;
  std::optional<std::size_t> edge;
  std::optional<std::pair<std::size_t, std::size_t>> pair;
  double value = 0.0;  // margin or distance, depending on kind
  std::string detail;
};

using EventLog = std::vector<Event>;

struct RunSummary {
  bool completed = false;
  std::optional<EventKind> terminal_event;
  bool topology_maintained = true;
  double min_link_margin = 0.0;
  double min_pairwise_distance = 0.0;
  double max_energy = 0.0;
  double final_time = 0.0;
  std::size_t steps = 0;
  bool arena_respected = true;
};

struct RunResult {
  TrajectoryLog log;
  EventLog events;
  RunSummary summary;
};

struct SimState {
  std::vector<AgentPose> poses;
};

struct StepResult {
  SimState next;
  std::optional<Event> terminal;
  int halvings = 0;
};

/// Advances the closed loop by one dt with classical RK4, halving the substep while any agent
/// would move more than substep_fraction of its smallest active barrier margin.
/// `measurement_offsets` (one per agent, may be empty) are added to positions seen by the
/// controller when noise.control_uses_measurements is set.
StepResult step(const SimState& state, const ScenarioConfig& config, double t,
                std::span<const Vec2> measurement_offsets = {});

/// Velocity field of the closed loop (after clamping) at the given poses.
std::vector<Vec2> closed_loop_velocities(std::span<const AgentPose> poses,
                                         const ScenarioConfig& config,
                                         const InteractionModel& model, double t);

RunResult run_scenario(const ScenarioConfig& config);

struct EnergyTrace {
  std::vector<double> times;
  std::vector<double> energies;
  double max_energy = 0.0;
  bool all_finite = true;
  /// Largest positive increment between consecutive entries; reported only for leaderless runs
  /// whose controller saw the true state.
  std::optional<double> max_positive_increment;
};

EnergyTrace energy_trace(const TrajectoryLog& log);

}  // namespace fovtopo
