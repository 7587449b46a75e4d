#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fovtopo/fov.hpp"
#include "fovtopo/graph.hpp"

namespace fovtopo {

enum class BarrierKind {
  Upper,  // keeps d below the limit
  Lower,  // keeps d above the limit
};

std::string_view to_string(BarrierKind kind);

struct BarrierEvaluation {
  double value = 0.0;
  double slope = 0.0;  // dV/dd
};

/// Single-sided barrier on a distance d.
///
///   upper: V(d) = gain (d - d_act)^2 / (limit - d)   on (d_act, limit), 0 below d_act
///   lower: V(d) = gain (d_act - d)^2 / (d - limit)   on (limit, d_act), 0 above d_act
///
/// Both forms vanish with their first derivative at d_act and diverge at the limit.
class BarrierPotential {
public:
  static BarrierPotential upper(double limit, double activation, double gain = 1.0);
  static BarrierPotential lower(double limit, double activation, double gain = 1.0);

  BarrierKind kind() const noexcept { return kind_; }
  double limit() const noexcept { return limit_; }
  double activation() const noexcept { return activation_; }
  double gain() const noexcept { return gain_; }

  bool active(double d) const noexcept;
  /// Signed distance to the limit, positive on the allowed side.
  double margin(double d) const noexcept;
  bool violated(double d) const noexcept { return !(margin(d) > 0.0); }

  /// Throws ConstraintViolationError when d is at or beyond the limit.
  BarrierEvaluation evaluate(double d) const;

private:
  BarrierPotential(BarrierKind kind, double limit, double activation, double gain);

  BarrierKind kind_;
  double limit_;
  double activation_;
  double gain_;
};

inline BarrierEvaluation barrier_value_and_gradient(const BarrierPotential& b, double d) {
  return b.evaluate(d);
}

struct CollisionParams {
  double r_col = 0.5;
  double delta_act = 0.5;
  bool enabled = true;
};

struct ControlParams {
  double gain = 1.0;
  double upper_act_frac = 0.8;
  double lower_act_frac = 0.2;
  double v_max = 2.0;
  bool clamp_speed = true;
  CollisionParams collision;
};

/// Barriers attached to one directed edge (i -> j) sensed through sector k_j: the inclusion
/// barrier on |x_i - x_j| and one exclusion barrier per virtual point on |x_i^tau - x_j|.
struct EdgePotentials {
  std::size_t edge = 0;
  std::size_t sector = 0;
  BarrierPotential inclusion = BarrierPotential::upper(1.0, 0.5);
  std::array<BarrierPotential, 3> exclusion{BarrierPotential::lower(1.0, 2.0),
                                            BarrierPotential::lower(1.0, 2.0),
                                            BarrierPotential::lower(1.0, 2.0)};
};

/// Upper limit rho1 activated at upper_act_frac * rho1; lower limits rho2 activated at
/// rho2 + lower_act_frac * rho1.
EdgePotentials edge_potentials(std::size_t edge, std::size_t sector, const SensingSector& s,
                               const ControlParams& params);

struct InteractionModel {
  SensingTopology topology;
  std::vector<EdgePotentials> potentials;
};

InteractionModel make_interaction(SensingTopology topology, std::span<const RobotSpec> specs,
                                  const ControlParams& params);

/// Number of barrier terms per edge: the agent itself plus three virtual points.
inline constexpr std::size_t kPointsPerEdge = 4;

/// Distances of the four barrier terms of one edge, in the order inclusion, left, rear, right.
std::array<double, kPointsPerEdge> edge_distances(std::span<const AgentPose> poses,
                                                  const InteractionModel& model,
                                                  std::span<const RobotSpec> specs,
                                                  std::size_t edge);

/// Gradients of the four barrier terms of one edge with respect to the point that carries each
/// term (the tail agent or one of its virtual points). Inactive terms give exact zeros.
std::array<Vec2, kPointsPerEdge> edge_point_gradients(std::span<const AgentPose> poses,
                                                      const InteractionModel& model,
                                                      std::span<const RobotSpec> specs,
                                                      std::size_t edge);

/// u_i = -sum over out-edges of the inclusion and exclusion gradients (no clamping).
Vec2 agent_control(std::size_t agent, std::span<const AgentPose> poses,
                   const InteractionModel& model, std::span<const RobotSpec> specs);

/// Symmetric all-pairs repulsion: -grad of a lower barrier with limit max(r_col_i, r_col_j)
/// activated delta_act beyond it. Throws CollisionError at or inside the limit.
Vec2 collision_control(std::size_t agent, std::span<const AgentPose> poses,
                       std::span<const RobotSpec> specs, const CollisionParams& params);

/// Collision limit for a pair of agents.
double collision_limit(const RobotSpec& a, const RobotSpec& b);

Vec2 clamp_speed(const Vec2& v, double v_max);

/// Sum of every barrier value over all edges and all four terms per edge.
double system_energy(std::span<const AgentPose> poses, const InteractionModel& model,
                     std::span<const RobotSpec> specs);

/// Gradient of system_energy with respect to every agent position, headings held fixed.
std::vector<Vec2> energy_gradient(std::span<const AgentPose> poses, const InteractionModel& model,
                                  std::span<const RobotSpec> specs);

/// Chain rule: sum_i grad_i V . v_i.
double energy_rate(std::span<const AgentPose> poses, std::span<const Vec2> velocities,
                   const InteractionModel& model, std::span<const RobotSpec> specs);

struct EnergyRateReport {
  /// Chain-rule rate under the unclamped control law; the reference value.
  double chain_rule = 0.0;
  /// -xi~^T [(B_bar^T C B_bar_+) (x) I_d] xi~ from the stacked edge gradients.
  double edge_quadratic = 0.0;
  /// -z^T (S_bar (x) I_d) z with z = W_hat x_bar; present when the graph is a forest.
  std::optional<double> structural_quadratic;
};

EnergyRateReport energy_rate_quadratic(std::span<const AgentPose> poses,
                                       const InteractionModel& model,
                                       std::span<const RobotSpec> specs,
                                       std::size_t points_per_slot = kPointsPerEdge);

}  // namespace fovtopo
