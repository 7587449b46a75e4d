#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fovtopo/control.hpp"
#include "fovtopo/error.hpp"

using namespace fovtopo;
using std::numbers::pi;

namespace {

RobotSpec forward_spec(double range = 10.0, double beta = pi / 2, double r_col = 0.5) {
  RobotSpec spec;
  FovSector s{0.0, beta, range};
  spec.sectors.push_back({s, default_approximation(s)});
  spec.collision_radius = r_col;
  return spec;
}

struct Setup {
  std::vector<AgentPose> poses;
  std::vector<RobotSpec> specs;
  InteractionModel model;
};

Setup make_setup(std::vector<AgentPose> poses, std::vector<Edge> edges,
                 const ControlParams& params = {}) {
  std::vector<RobotSpec> specs(poses.size(), forward_spec());
  const std::size_t m = edges.size();
  SensingTopology topo{DirectedGraph(poses.size(), std::move(edges)),
                       std::vector<std::size_t>(m, 0)};
  auto model = make_interaction(std::move(topo), specs, params);
  return {std::move(poses), std::move(specs), std::move(model)};
}

/// Head placed inside the tail's approximation with positive margins on every barrier.
bool sample_active_pair(std::mt19937_64& rng, const RobotSpec& spec, const Vec2& tail,
                        double heading, Vec2& head) {
  std::uniform_real_distribution<double> radius(0.5, 9.9), bearing(-pi / 4, pi / 4);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double r = radius(rng);
    const double b = bearing(rng) + heading;
    head = tail + r * Vec2(std::cos(b), std::sin(b));
    const auto& a = spec.sectors[0].approx;
    if (!approx_contains(head, tail, heading, a)) continue;
    const auto p = place_virtual_points(tail, heading, a);
    bool clear = (head - tail).norm() < a.inclusion_radius - 0.02;
    for (std::size_t k = 0; k < 3; ++k) clear = clear && (head - p[k]).norm() > a.exclusion_radii[k] + 0.02;
    if (clear) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("barrier closed forms") {
  const auto up = BarrierPotential::upper(10.0, 8.0, 1.0);
  auto e = up.evaluate(8.0);
  CHECK(e.value == 0.0);
  CHECK(e.slope == 0.0);
  e = up.evaluate(9.0);
  CHECK(e.value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(e.slope == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(up.evaluate(3.0).value == 0.0);

  const auto lo = BarrierPotential::lower(1.0, 2.0, 1.0);
  CHECK(lo.evaluate(1.5).value == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(lo.evaluate(1.5).slope < 0.0);
  CHECK(lo.evaluate(5.0).value == 0.0);

  CHECK_THROWS_AS(up.evaluate(10.0), ConstraintViolationError);
  CHECK_THROWS_AS(up.evaluate(11.0), ConstraintViolationError);
  CHECK_THROWS_AS(lo.evaluate(1.0), ConstraintViolationError);
  CHECK_THROWS_AS(lo.evaluate(0.5), ConstraintViolationError);
  CHECK_THROWS_AS(BarrierPotential::upper(1.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(BarrierPotential::lower(2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(BarrierPotential::upper(2.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("barrier blow-up and smoothness at activation") {
  // Within eps * w of the limit the value is gain * w * (1 - eps)^2 / eps, so the 1e6 level is
  // reached once gain * w exceeds 1 by more than 2 eps (every default band at ranges above 5 m).
  for (double lim : {6.0, 10.0, 37.5}) {
    const double act = 0.8 * lim;
    const auto up = BarrierPotential::upper(lim, act);
    const double close = lim - 1e-6 * (lim - act);
    CHECK(up.evaluate(close).value >= 1e6);
    for (double d : {act - 1e-9, act + 1e-9}) {
      CHECK(std::abs(up.evaluate(d).value) <= 1e-15);
      CHECK(std::abs(up.evaluate(d).slope) <= 1e-6);
    }
    const auto lo = BarrierPotential::lower(lim, lim + 0.2 * lim);
    CHECK(lo.evaluate(lim + 1e-6 * 0.2 * lim).value >= 1e6);
    for (double d : {lo.activation() - 1e-9, lo.activation() + 1e-9}) {
      CHECK(std::abs(lo.evaluate(d).value) <= 1e-15);
      CHECK(std::abs(lo.evaluate(d).slope) <= 1e-6);
    }
  }
  const auto narrow = BarrierPotential::upper(1.0, 0.8, 3.0);
  const double eps = 1e-6;
  CHECK(narrow.evaluate(1.0 - eps * 0.2).value ==
        doctest::Approx(3.0 * 0.2 * (1 - eps) * (1 - eps) / eps).epsilon(1e-9));
}

TEST_CASE("barrier slope matches finite differences") {
  const auto up = BarrierPotential::upper(10.0, 8.0, 2.5);
  const auto lo = BarrierPotential::lower(3.0, 5.0, 0.7);
  const double h = 1e-6;
  for (double d = 8.1; d < 9.9; d += 0.1) {
    const double fd = (up.evaluate(d + h).value - up.evaluate(d - h).value) / (2 * h);
    CHECK(std::abs(fd - up.evaluate(d).slope) <= 1e-6 * std::abs(fd));
  }
  for (double d = 3.1; d < 4.9; d += 0.1) {
    const double fd = (lo.evaluate(d + h).value - lo.evaluate(d - h).value) / (2 * h);
    CHECK(std::abs(fd - lo.evaluate(d).slope) <= 1e-6 * std::abs(fd));
  }
}

TEST_CASE("edge potentials follow the activation fractions") {
  const auto spec = forward_spec();
  const auto ep = edge_potentials(0, 0, spec.sectors[0], ControlParams{});
  CHECK(ep.inclusion.limit() == 10.0);
  CHECK(ep.inclusion.activation() == doctest::Approx(8.0));
  for (const auto& b : ep.exclusion) {
    CHECK(b.limit() == 10.0);
    CHECK(b.activation() == doctest::Approx(12.0));
  }
}

TEST_CASE("agent control") {
  SUBCASE("inactive bands give exactly zero") {
    auto s = make_setup({{Vec2(0, 0), 0.0}, {Vec2(5, 0), 0.0}}, {{0, 1}});
    CHECK(agent_control(0, s.poses, s.model, s.specs) == Vec2::Zero());
    CHECK(agent_control(1, s.poses, s.model, s.specs) == Vec2::Zero());
    CHECK(system_energy(s.poses, s.model, s.specs) == 0.0);
    for (const auto& g : edge_point_gradients(s.poses, s.model, s.specs, 0)) CHECK(g == Vec2::Zero());
  }
  SUBCASE("upper barrier pulls toward the head") {
    auto s = make_setup({{Vec2(0, 0), 0.0}, {Vec2(9, 0), 0.0}}, {{0, 1}});
    const Vec2 u = agent_control(0, s.poses, s.model, s.specs);
    CHECK(u.x() > 0.0);
    CHECK(std::abs(u.y()) < 1e-12);
    CHECK(u.x() == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(system_energy(s.poses, s.model, s.specs) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("rear exclusion pushes the rear point away") {
    // Head close to the apex: its distance to the rear point is just above rho2.
    auto s = make_setup({{Vec2(0, 0), 0.0}, {Vec2(0.5, 0), 0.0}}, {{0, 1}});
    const auto grads = edge_point_gradients(s.poses, s.model, s.specs, 0);
    CHECK(grads[2] != Vec2::Zero());
    const Vec2 u = agent_control(0, s.poses, s.model, s.specs);
    const auto p = place_virtual_points(s.poses[0].position, 0.0, s.specs[0].sectors[0].approx);
    const Vec2 away = (p[1] - s.poses[1].position).normalized();
    CHECK(u.dot(away) > 0.0);
    // Finite-difference oracle on the energy for the tail position.
    const double h = 1e-6;
    for (int c = 0; c < 2; ++c) {
      auto plus = s.poses, minus = s.poses;
      plus[0].position[c] += h;
      minus[0].position[c] -= h;
      const double fd = (system_energy(plus, s.model, s.specs) - system_energy(minus, s.model, s.specs)) / (2 * h);
      CHECK(std::abs(-u[c] - fd) <= 1e-6 * std::max(std::abs(fd), u.norm()));
    }
  }
  SUBCASE("broken link throws") {
    auto s = make_setup({{Vec2(0, 0), 0.0}, {Vec2(9, 0), 0.0}}, {{0, 1}});
    s.poses[1].position = Vec2(10.5, 0);
    CHECK_THROWS_AS(agent_control(0, s.poses, s.model, s.specs), ConstraintViolationError);
    s.poses[1].position = Vec2(1e-12, 0);
    CHECK_THROWS_AS(agent_control(0, s.poses, s.model, s.specs), DegenerateConfigurationError);
  }
}

TEST_CASE("collision control") {
  const CollisionParams params{0.5, 0.5, true};
  std::vector<RobotSpec> specs(3, forward_spec());
  SUBCASE("far apart") {
    std::vector<AgentPose> poses{{Vec2(0, 0), 0}, {Vec2(2, 0), 0}, {Vec2(4, 0), 0}};
    for (std::size_t i = 0; i < 3; ++i) CHECK(collision_control(i, poses, specs, params) == Vec2::Zero());
  }
  SUBCASE("pair inside the band repels symmetrically") {
    std::vector<AgentPose> poses{{Vec2(0, 0), 0}, {Vec2(0.75, 0), 0}, {Vec2(10, 0), 0}};
    const Vec2 a = collision_control(0, poses, specs, params);
    const Vec2 b = collision_control(1, poses, specs, params);
    CHECK(a.x() < 0.0);
    CHECK((a + b).norm() <= 1e-15);
    CHECK(std::abs(a.y()) == 0.0);
  }
  SUBCASE("collinear middle agent cancels") {
    std::vector<AgentPose> poses{{Vec2(0, 0), 0}, {Vec2(0.8, 0), 0}, {Vec2(1.6, 0), 0}};
    CHECK(collision_control(1, poses, specs, params).norm() <= 1e-15);
  }
  SUBCASE("collision throws") {
    std::vector<AgentPose> poses{{Vec2(0, 0), 0}, {Vec2(0.5, 0), 0}, {Vec2(10, 0), 0}};
    CHECK_THROWS_AS(collision_control(0, poses, specs, params), CollisionError);
  }
  SUBCASE("disabled") {
    std::vector<AgentPose> poses{{Vec2(0, 0), 0}, {Vec2(0.5, 0), 0}, {Vec2(10, 0), 0}};
    CHECK(collision_control(0, poses, specs, {0.5, 0.5, false}) == Vec2::Zero());
  }
  CHECK(clamp_speed(Vec2(3, 4), 2.0).norm() == doctest::Approx(2.0));
  CHECK(clamp_speed(Vec2(0.3, 0.4), 2.0) == Vec2(0.3, 0.4));
}

TEST_CASE("energy gradient matches central differences on random active configurations") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> pos(-5, 5), ang(-pi, pi);
  const auto spec = forward_spec();
  int configs = 0;
  double worst = 0.0;
  while (configs < 150) {
    // Chain 3 -> 2 -> 1 -> 0 with each head sampled inside its tail's approximation.
    std::vector<AgentPose> poses(4);
    poses[3] = {Vec2(pos(rng), pos(rng)), ang(rng)};
    bool ok = true;
    for (int i = 2; i >= 0 && ok; --i) {
      Vec2 head;
      ok = sample_active_pair(rng, spec, poses[i + 1].position, poses[i + 1].heading, head);
      poses[i] = {head, ang(rng)};
    }
    if (!ok) continue;
    auto s = make_setup(poses, {{1, 0}, {2, 1}, {3, 2}});
    if (system_energy(s.poses, s.model, s.specs) <= 1e-3) continue;
    const auto grad = energy_gradient(s.poses, s.model, s.specs);
    double scale = 0.0;
    for (const auto& g : grad) scale = std::max(scale, g.cwiseAbs().maxCoeff());
    const double h = 1e-6;
    for (std::size_t i = 0; i < 4; ++i)
      for (int c = 0; c < 2; ++c) {
        auto plus = s.poses, minus = s.poses;
        plus[i].position[c] += h;
        minus[i].position[c] -= h;
        const double fd =
            (system_energy(plus, s.model, s.specs) - system_energy(minus, s.model, s.specs)) / (2 * h);
        const double rel = std::abs(grad[i][c] - fd) / std::max(std::abs(fd), scale);
        worst = std::max(worst, rel);
        CHECK(rel <= 1e-6);
      }
    ++configs;
  }
  MESSAGE("worst relative gradient error " << worst);
}

TEST_CASE("energy is invariant under rigid motions") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> ang(-pi, pi), off(-20, 20);
  auto s = make_setup({{Vec2(0, 0), 0.0}, {Vec2(9, 0.5), 0.3}, {Vec2(9.3, 1.4), 0.0}},
                      {{0, 1}, {0, 2}});
  const double e0 = system_energy(s.poses, s.model, s.specs);
  CHECK(e0 > 0.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double phi = ang(rng);
    const Vec2 t(off(rng), off(rng));
    auto moved = s.poses;
    for (auto& p : moved) {
      p.position = rotation(phi) * p.position + t;
      p.heading += phi;
    }
    CHECK(std::abs(system_energy(moved, s.model, s.specs) - e0) <= 1e-12 * std::max(1.0, e0));
  }
}

TEST_CASE("energy rate") {
  SUBCASE("zero when every barrier is inactive") {
    auto s = make_setup({{Vec2(0, 0), 0.0}, {Vec2(5, 0), 0.0}}, {{0, 1}});
    const auto r = energy_rate_quadratic(s.poses, s.model, s.specs);
    CHECK(r.chain_rule == 0.0);
    CHECK(r.edge_quadratic == 0.0);
  }
  SUBCASE("single follower descends") {
    auto s = make_setup({{Vec2(0, 0), 0.0}, {Vec2(9, 0.7), 0.0}}, {{0, 1}});
    const auto r = energy_rate_quadratic(s.poses, s.model, s.specs);
    CHECK(r.chain_rule < 0.0);
  }
  SUBCASE("three routes agree on a chain and match the flow derivative") {
    auto s = make_setup({{Vec2(0, 0), 0.0}, {Vec2(-9, 0.4), 0.0}, {Vec2(-9.5, 0.2), 0.0}},
                        {{1, 0}, {2, 1}});
    const auto r = energy_rate_quadratic(s.poses, s.model, s.specs);
    CHECK(r.chain_rule < 0.0);
    REQUIRE(r.structural_quadratic.has_value());
    CHECK(r.edge_quadratic == doctest::Approx(r.chain_rule).epsilon(1e-10));
    CHECK(*r.structural_quadratic == doctest::Approx(r.chain_rule).epsilon(1e-10));

    std::vector<Vec2> u(3);
    for (std::size_t i = 0; i < 3; ++i) u[i] = agent_control(i, s.poses, s.model, s.specs);
    const double h = 1e-6;
    auto plus = s.poses, minus = s.poses;
    for (std::size_t i = 0; i < 3; ++i) {
      plus[i].position += h * u[i];
      minus[i].position -= h * u[i];
    }
    const double fd = (system_energy(plus, s.model, s.specs) - system_energy(minus, s.model, s.specs)) / (2 * h);
    CHECK(std::abs(fd - r.chain_rule) <= 1e-4 * std::abs(r.chain_rule));
  }
  SUBCASE("structural route is absent on a cycle") {
    auto s = make_setup({{Vec2(0, 0), 0.0}, {Vec2(9, 0), pi}}, {{0, 1}, {1, 0}});
    const auto r = energy_rate_quadratic(s.poses, s.model, s.specs);
    CHECK_FALSE(r.structural_quadratic.has_value());
    CHECK(r.edge_quadratic == doctest::Approx(r.chain_rule).epsilon(1e-10));
  }
}
