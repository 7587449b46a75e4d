#include "fovtopo/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fovtopo/error.hpp"
#include "fovtopo/extended.hpp"

namespace fovtopo {

std::string_view to_string(BarrierKind kind) {
  return kind == BarrierKind::Upper ? "upper" : "lower";
}

BarrierPotential::BarrierPotential(BarrierKind kind, double limit, double activation, double gain)
    : kind_(kind), limit_(limit), activation_(activation), gain_(gain) {
  if (!std::isfinite(limit) || !std::isfinite(activation) || !std::isfinite(gain)) {
    throw std::invalid_argument("barrier parameters must be finite");
  }
  if (!(gain > 0.0)) {
    throw std::invalid_argument("barrier gain must be positive");
  }
  if (kind == BarrierKind::Upper && !(activation < limit)) {
    throw std::invalid_argument("upper barrier needs activation below its limit");
  }
  if (kind == BarrierKind::Lower && !(activation > limit)) {
    throw std::invalid_argument("lower barrier needs activation above its limit");
  }
}

BarrierPotential BarrierPotential::upper(double limit, double activation, double gain) {
  return {BarrierKind::Upper, limit, activation, gain};
}

BarrierPotential BarrierPotential::lower(double limit, double activation, double gain) {
  return {BarrierKind::Lower, limit, activation, gain};
}

bool BarrierPotential::active(double d) const noexcept {
  return kind_ == BarrierKind::Upper ? d > activation_ : d < activation_;
}

double BarrierPotential::margin(double d) const noexcept {
  return kind_ == BarrierKind::Upper ? limit_ - d : d - limit_;
}

BarrierEvaluation BarrierPotential::evaluate(double d) const {
  if (violated(d)) {
    throw ConstraintViolationError(std::string(to_string(kind_)), d, limit_);
  }
  if (!active(d)) {
    return {};
  }
  // With s = |d - d_act| and m = |limit - d|: V = g s^2 / m, and both branches give
  // |dV/dd| = g (2 s m + s^2) / m^2, signed toward the limit.
  const double s = std::abs(d - activation_);
  const double m = margin(d);
  const double value = gain_ * s * s / m;
  const double magnitude = gain_ * (2.0 * s * m + s * s) / (m * m);
  return {value, kind_ == BarrierKind::Upper ? magnitude : -magnitude};
}

EdgePotentials edge_potentials(std::size_t edge, std::size_t sector, const SensingSector& s,
                               const ControlParams& params) {
  const double rho1 = s.approx.inclusion_radius;
  EdgePotentials p;
  p.edge = edge;
  p.sector = sector;
  p.inclusion = BarrierPotential::upper(rho1, params.upper_act_frac * rho1, params.gain);
  for (std::size_t k = 0; k < 3; ++k) {
    const double rho2 = s.approx.exclusion_radii[k];
    p.exclusion[k] =
        BarrierPotential::lower(rho2, rho2 + params.lower_act_frac * rho1, params.gain);
  }
  return p;
}

InteractionModel make_interaction(SensingTopology topology, std::span<const RobotSpec> specs,
                                  const ControlParams& params) {
  const auto& g = topology.graph;
  if (specs.size() != g.vertex_count()) {
    throw std::invalid_argument("one robot spec per vertex required");
  }
  if (topology.sector_of_edge.size() != g.edge_count()) {
    throw std::invalid_argument("one sector assignment per edge required");
  }
  std::vector<EdgePotentials> potentials;
  potentials.reserve(g.edge_count());
  for (std::size_t k = 0; k < g.edge_count(); ++k) {
    const auto& spec = specs[g.edge(k).tail];
    const std::size_t sector = topology.sector_of_edge[k];
    if (sector >= spec.sectors.size()) {
      throw std::invalid_argument("edge " + std::to_string(k) + " assigned to missing sector " +
                                  std::to_string(sector));
    }
    potentials.push_back(edge_potentials(k, sector, spec.sectors[sector], params));
  }
  return {std::move(topology), std::move(potentials)};
}

namespace {

constexpr std::array<const char*, kPointsPerEdge> kTermLabels{"inclusion", "left", "rear",
                                                              "right"};

const BarrierPotential& term(const EdgePotentials& p, std::size_t t) {
  return t == 0 ? p.inclusion : p.exclusion[t - 1];
}

// Positions carrying the four terms of an edge: the tail agent and its virtual points.
std::array<Vec2, kPointsPerEdge> carrier_points(std::span<const AgentPose> poses,
                                                const InteractionModel& model,
                                                std::span<const RobotSpec> specs,
                                                std::size_t edge) {
  const Edge& e = model.topology.graph.edge(edge);
  const auto& pose = poses[e.tail];
  const auto& approx = specs[e.tail].sectors[model.potentials[edge].sector].approx;
  const auto virt = place_virtual_points(pose.position, pose.heading, approx);
  return {pose.position, virt[0], virt[1], virt[2]};
}

BarrierEvaluation evaluate_term(const EdgePotentials& p, std::size_t t, double d) {
  const auto& b = term(p, t);
  if (b.violated(d)) {
    throw ConstraintViolationError(kTermLabels[t], d, b.limit(), p.edge);
  }
  return b.evaluate(d);
}

void check_sizes(std::span<const AgentPose> poses, const InteractionModel& model,
                 std::span<const RobotSpec> specs) {
  const std::size_t n = model.topology.graph.vertex_count();
  if (poses.size() != n || specs.size() != n) {
    throw std::invalid_argument("poses, specs and graph disagree on the agent count");
  }
}

void check_not_coincident(std::span<const AgentPose> poses, std::size_t a, std::size_t b) {
  if ((poses[a].position - poses[b].position).norm() < kCoincidenceGuard) {
    throw DegenerateConfigurationError(
        a, b, "agents " + std::to_string(a) + " and " + std::to_string(b) + " coincide");
  }
}

}  // namespace

std::array<double, kPointsPerEdge> edge_distances(std::span<const AgentPose> poses,
                                                  const InteractionModel& model,
                                                  std::span<const RobotSpec> specs,
                                                  std::size_t edge) {
  const auto points = carrier_points(poses, model, specs, edge);
  const Vec2& target = poses[model.topology.graph.edge(edge).head].position;
  std::array<double, kPointsPerEdge> d;
  for (std::size_t t = 0; t < kPointsPerEdge; ++t) {
    d[t] = (points[t] - target).norm();
  }
  return d;
}

std::array<Vec2, kPointsPerEdge> edge_point_gradients(std::span<const AgentPose> poses,
                                                      const InteractionModel& model,
                                                      std::span<const RobotSpec> specs,
                                                      std::size_t edge) {
  const auto& p = model.potentials[edge];
  const auto points = carrier_points(poses, model, specs, edge);
  const Vec2& target = poses[model.topology.graph.edge(edge).head].position;
  std::array<Vec2, kPointsPerEdge> grads;
  for (std::size_t t = 0; t < kPointsPerEdge; ++t) {
    const Vec2 diff = points[t] - target;
    const double d = diff.norm();
    const auto ev = evaluate_term(p, t, d);
    grads[t] = ev.slope == 0.0 ? Vec2::Zero().eval() : (ev.slope / d * diff).eval();
  }
  return grads;
}

Vec2 agent_control(std::size_t agent, std::span<const AgentPose> poses,
                   const InteractionModel& model, std::span<const RobotSpec> specs) {
  check_sizes(poses, model, specs);
  const auto& g = model.topology.graph;
  Vec2 u = Vec2::Zero();
  for (std::size_t k = 0; k < g.edge_count(); ++k) {
    if (g.edge(k).tail != agent) continue;
    check_not_coincident(poses, agent, g.edge(k).head);
    for (const auto& grad : edge_point_gradients(poses, model, specs, k)) {
      u -= grad;
    }
  }
  return u;
}

double collision_limit(const RobotSpec& a, const RobotSpec& b) {
  return std::max(a.collision_radius, b.collision_radius);
}

Vec2 collision_control(std::size_t agent, std::span<const AgentPose> poses,
                       std::span<const RobotSpec> specs, const CollisionParams& params) {
  if (poses.size() != specs.size()) {
    throw std::invalid_argument("poses and specs differ in length");
  }
  Vec2 u = Vec2::Zero();
  if (!params.enabled) return u;
  for (std::size_t j = 0; j < poses.size(); ++j) {
    if (j == agent) continue;
    const Vec2 diff = poses[agent].position - poses[j].position;
    const double d = diff.norm();
    const double limit = collision_limit(specs[agent], specs[j]);
    if (d <= limit) {
      throw CollisionError(std::min(agent, j), std::max(agent, j), d,
                           "agents " + std::to_string(agent) + " and " + std::to_string(j) +
                               " within collision radius (" + std::to_string(d) + " m)");
    }
    const auto b = BarrierPotential::lower(limit, limit + params.delta_act);
    const auto ev = b.evaluate(d);
    if (ev.slope != 0.0) {
      u -= ev.slope / d * diff;
    }
  }
  return u;
}

Vec2 clamp_speed(const Vec2& v, double v_max) {
  const double speed = v.norm();
  if (speed > v_max && speed > 0.0) {
    return v * (v_max / speed);
  }
  return v;
}

double system_energy(std::span<const AgentPose> poses, const InteractionModel& model,
                     std::span<const RobotSpec> specs) {
  check_sizes(poses, model, specs);
  double total = 0.0;
  for (std::size_t k = 0; k < model.topology.graph.edge_count(); ++k) {
    const auto d = edge_distances(poses, model, specs, k);
    for (std::size_t t = 0; t < kPointsPerEdge; ++t) {
      total += evaluate_term(model.potentials[k], t, d[t]).value;
    }
  }
  return total;
}

std::vector<Vec2> energy_gradient(std::span<const AgentPose> poses, const InteractionModel& model,
                                  std::span<const RobotSpec> specs) {
  check_sizes(poses, model, specs);
  std::vector<Vec2> grad(poses.size(), Vec2::Zero());
  const auto& g = model.topology.graph;
  for (std::size_t k = 0; k < g.edge_count(); ++k) {
    const Edge& e = g.edge(k);
    // Virtual points translate with their agent, so each term's gradient moves the tail by +g
    // and the head by -g.
    for (const auto& gr : edge_point_gradients(poses, model, specs, k)) {
      grad[e.tail] += gr;
      grad[e.head] -= gr;
    }
  }
  return grad;
}

double energy_rate(std::span<const AgentPose> poses, std::span<const Vec2> velocities,
                   const InteractionModel& model, std::span<const RobotSpec> specs) {
  if (velocities.size() != poses.size()) {
    throw std::invalid_argument("one velocity per agent required");
  }
  const auto grad = energy_gradient(poses, model, specs);
  double rate = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    rate += grad[i].dot(velocities[i]);
  }
  return rate;
}

EnergyRateReport energy_rate_quadratic(std::span<const AgentPose> poses,
                                       const InteractionModel& model,
                                       std::span<const RobotSpec> specs,
                                       std::size_t points_per_slot) {
  if (points_per_slot != kPointsPerEdge) {
    throw std::invalid_argument("the control law carries exactly four terms per edge");
  }
  check_sizes(poses, model, specs);
  const auto& g = model.topology.graph;
  const std::size_t n = g.vertex_count();
  EnergyRateReport report;

  std::vector<Vec2> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = agent_control(i, poses, model, specs);
  }
  report.chain_rule = energy_rate(poses, u, model, specs);
  if (g.edge_count() == 0) {
    report.edge_quadratic = 0.0;
    if (is_forest(g)) report.structural_quadratic = 0.0;
    return report;
  }

  const ExtendedGraph eg = build_extended_graph(g, points_per_slot);
  const std::size_t ne = g.edge_count();
  const std::size_t columns = eg.indexing.replicas() * ne;

  // Stacked gradients with the off-slot replicas already zeroed (H applied).
  Matrix xi = Matrix::Zero(static_cast<Eigen::Index>(columns), 2);
  std::vector<double> weights(columns, 0.0);
  Matrix compact = Matrix::Zero(static_cast<Eigen::Index>(2 * eg.indexing.replicas()), 2);
  for (std::size_t q = 0; q < ne; ++q) {
    const auto grads = edge_point_gradients(poses, model, specs, q);
    const auto points = carrier_points(poses, model, specs, q);
    const auto d = edge_distances(poses, model, specs, q);
    const Vec2& head = poses[g.edge(q).head].position;
    for (std::size_t a = 0; a < points_per_slot; ++a) {
      const std::size_t r = q * points_per_slot + a;
      const auto c = static_cast<Eigen::Index>(r * ne + q);
      xi.row(c) = grads[a].transpose();
      const double slope = evaluate_term(model.potentials[q], a, d[a]).slope;
      weights[static_cast<std::size_t>(c)] = slope == 0.0 ? 0.0 : slope / d[a];
      compact.row(static_cast<Eigen::Index>(compact_index(q, a, 0, points_per_slot))) =
          points[a].transpose();
      compact.row(static_cast<Eigen::Index>(compact_index(q, a, 1, points_per_slot))) =
          head.transpose();
    }
  }

  const Matrix b = eg.incidence.cast<double>();
  const Matrix bp = eg.outgoing_incidence.cast<double>();
  const Matrix c = coupling_matrix_canonical(eg.indexing).cast<double>();
  const Matrix m = b.transpose() * c * bp;
  report.edge_quadratic = -(xi.transpose() * m * xi).trace();

  if (is_forest(g)) {
    const Matrix w_hat = flipped_weight_diagonal(g, points_per_slot, weights);
    const Matrix z = w_hat * compact;
    const Matrix s_bar = extended_structural_canonical(eg).cast<double>();
    report.structural_quadratic = -(z.transpose() * s_bar * z).trace();
  }
  return report;
}

}  // namespace fovtopo
