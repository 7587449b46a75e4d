#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "fovtopo/error.hpp"
#include "fovtopo/fov.hpp"

using namespace fovtopo;
using std::numbers::pi;

namespace {

// Frozen from tests/oracles/grid_iou_oracle.py (numpy grid count, 0.05 m cells).
constexpr double kDefaultIou90 = 0.6994370816896415;
constexpr double kDefaultFp90 = 33.905;
constexpr double kHalvedRho1Fn90 = 59.08;
constexpr double kFittedIou90 = 0.9417734051110699;
constexpr int kFitBudget = 200;

const FovSector kQuarter{0.0, pi / 2, 10.0};

bool near(const Vec2& a, const Vec2& b, double tol = 1e-12) { return (a - b).norm() <= tol; }

}  // namespace

TEST_CASE("virtual point placement") {
  FovApproximation a;
  a.inclusion_radius = 1.0;
  a.exclusion_radii = {1.0, 1.0, 1.0};
  a.offsets[1].translation = Vec2(-1.0, 0.0);
  a.offsets[0].translation = Vec2(0.0, 1.0);
  a.offsets[2].translation = Vec2(0.0, -1.0);

  auto p = place_virtual_points(Vec2::Zero(), 0.0, a);
  CHECK(near(p[1], Vec2(-1, 0)));
  p = place_virtual_points(Vec2::Zero(), pi / 2, a);
  CHECK(near(p[1], Vec2(0, -1)));
  const auto base = place_virtual_points(Vec2::Zero(), 0.0, a);
  const auto moved = place_virtual_points(Vec2(3, 4), 0.0, a);
  for (std::size_t k = 0; k < 3; ++k) CHECK(moved[k] - base[k] == Vec2(3, 4));

  SUBCASE("offset rotation turns the translation") {
    a.offsets[1].rotation = pi / 2;
    p = place_virtual_points(Vec2::Zero(), 0.0, a);
    CHECK(near(p[1], Vec2(0, -1)));
  }
}

TEST_CASE("sector containment") {
  const Vec2 o = Vec2::Zero();
  CHECK(sector_contains(Vec2(5, 0), o, 0.0, kQuarter));
  CHECK_FALSE(sector_contains(Vec2(-0.1, 0), o, 0.0, kQuarter));
  CHECK_FALSE(sector_contains(Vec2(-7, 0), o, 0.0, kQuarter));
  CHECK(sector_contains(Vec2(10, 0), o, 0.0, kQuarter));
  CHECK_FALSE(sector_contains(Vec2(10.000001, 0), o, 0.0, kQuarter));
  CHECK(sector_contains(o, o, 0.0, kQuarter));
  CHECK(sector_contains(Vec2(3, 3), o, 0.0, kQuarter));
  CHECK_FALSE(sector_contains(Vec2(3, 3.01), o, 0.0, kQuarter));
  // Heading rotates the sector; mount heading adds to it.
  CHECK(sector_contains(Vec2(0, 5), o, pi / 2, kQuarter));
  CHECK(sector_contains(Vec2(0, 5), o, 0.0, FovSector{pi / 2, pi / 2, 10.0}));
}

TEST_CASE("default approximation") {
  const auto a = default_approximation(kQuarter);
  CHECK(a.inclusion_radius == 10.0);
  for (double r : a.exclusion_radii) CHECK(r == 10.0);
  const double c = 10.0 * std::cos(3 * pi / 4);
  const double s = 10.0 * std::sin(3 * pi / 4);
  CHECK(near(a.offset(VirtualPoint::Left).translation, Vec2(c, s)));
  CHECK(near(a.offset(VirtualPoint::Right).translation, Vec2(c, -s)));
  CHECK(near(a.offset(VirtualPoint::Rear).translation, Vec2(-10, 0)));
  CHECK_NOTHROW(a.validate_against(kQuarter));

  const auto narrow = default_approximation(FovSector{0.0, 1e-6, 5.0});
  const Vec2 left = narrow.offset(VirtualPoint::Left).translation.normalized();
  CHECK(std::abs(std::atan2(left.y(), left.x()) - pi / 2) < 1e-6);

  CHECK_THROWS_AS(default_approximation(FovSector{0.0, pi, 10.0}), UnsupportedGeometryError);
  CHECK_THROWS_AS(default_approximation(FovSector{0.0, 4.0, 10.0}), UnsupportedGeometryError);
}

TEST_CASE("approximate containment") {
  const auto a = default_approximation(kQuarter);
  const Vec2 o = Vec2::Zero();
  CHECK(approx_contains(Vec2(5, 0), o, 0.0, a));
  CHECK(approx_contains(Vec2(0, 5), o, pi / 2, a));
  CHECK_FALSE(approx_contains(Vec2(-10.5, 0), o, 0.0, a));
  CHECK_FALSE(approx_contains(Vec2(10.01, 0), o, 0.0, a));
  // The apex lies on all three exclusion circles, which are closed complements.
  CHECK(approx_contains(o, o, 0.0, a));
}

TEST_CASE("approximation quality against the grid oracle") {
  const auto d = default_approximation(kQuarter);
  const auto q = approximation_quality(kQuarter, d, kDefaultGridResolution);
  CHECK(q.iou == doctest::Approx(kDefaultIou90).epsilon(1e-12));
  CHECK(q.false_positive_area == doctest::Approx(kDefaultFp90).epsilon(1e-12));
  CHECK(q.false_negative_area == 0.0);
  CHECK(q.grid_resolution == kDefaultGridResolution);
  CHECK(approximation_quality(kQuarter, d, kDefaultGridResolution) == q);

  SUBCASE("halving rho1 grows the missed area") {
    auto half = d;
    half.inclusion_radius = 5.0;
    const auto qh = approximation_quality(kQuarter, half, kDefaultGridResolution);
    CHECK(qh.false_negative_area > q.false_negative_area);
    CHECK(qh.false_negative_area == doctest::Approx(kHalvedRho1Fn90).epsilon(1e-12));
  }
  SUBCASE("exclusion disks far away leave the whole disk") {
    FovApproximation far = d;
    far.exclusion_radii = {1.0, 1.0, 1.0};
    for (auto& off : far.offsets) off.translation *= 5.0;
    const auto qf = approximation_quality(kQuarter, far, 0.02);
    const double disk = pi * 100.0;
    const double sector = disk / 4.0;
    CHECK(qf.false_negative_area == 0.0);
    CHECK(qf.false_positive_area == doctest::Approx(disk - sector).epsilon(2e-3));
  }
  CHECK_THROWS_AS(approximation_quality(kQuarter, d, 0.0), ResolutionError);
  CHECK_THROWS_AS(approximation_quality(kQuarter, d, 4.0), ResolutionError);
}

TEST_CASE("fitter") {
  const auto d = default_approximation(kQuarter);
  const auto one = fit_approximation(kQuarter, kDefaultGridResolution, 1);
  CHECK(one.inclusion_radius == d.inclusion_radius);
  CHECK(one.exclusion_radii == d.exclusion_radii);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(one.offsets[k].translation == d.offsets[k].translation);
    CHECK(one.offsets[k].rotation == d.offsets[k].rotation);
  }

  const auto f = fit_approximation(kQuarter, kDefaultGridResolution, kFitBudget);
  const auto qf = approximation_quality(kQuarter, f, kDefaultGridResolution);
  CHECK(qf.iou >= kDefaultIou90);
  CHECK(qf.iou == doctest::Approx(kFittedIou90).epsilon(1e-12));
  CHECK_NOTHROW(f.validate_against(kQuarter));
  CHECK_THROWS_AS(fit_approximation(kQuarter, 0.0, 10), ResolutionError);
  CHECK_THROWS_AS(fit_approximation(kQuarter, 0.05, 0), std::invalid_argument);
}

TEST_CASE("sector selection") {
  RobotSpec spec;
  for (double h : {0.0, pi / 2}) {
    FovSector s{h, pi / 2, 10.0};
    spec.sectors.push_back({s, default_approximation(s)});
  }
  CHECK(select_sector(Vec2::Zero(), 0.0, spec, Vec2(5, 0)) == 0u);
  CHECK(select_sector(Vec2::Zero(), 0.0, spec, Vec2(0, 5)) == 1u);
  CHECK(select_sector(Vec2::Zero(), 0.0, spec, Vec2(3, 3)) == 0u);
  CHECK_FALSE(select_sector(Vec2::Zero(), 0.0, spec, Vec2(-5, -5)).has_value());
}

TEST_CASE("sensing graph") {
  const FovSector s{0.0, pi / 2, 10.0};
  RobotSpec spec;
  spec.sectors.push_back({s, default_approximation(s)});

  SUBCASE("facing pair gives a two-cycle") {
    std::vector<AgentPose> poses{{Vec2(0, 0), 0.0}, {Vec2(4, 0), pi}};
    std::vector<RobotSpec> specs{spec, spec};
    const auto t = sensing_graph(poses, specs);
    CHECK(t.graph == DirectedGraph(2, {{0, 1}, {1, 0}}));
    CHECK(t.sector_of_edge == std::vector<std::size_t>{0, 0});
  }
  SUBCASE("agent behind is not sensed") {
    std::vector<AgentPose> poses{{Vec2(0, 0), 0.0}, {Vec2(-4, 0), 0.0}};
    std::vector<RobotSpec> specs{spec, spec};
    CHECK(sensing_graph(poses, specs).graph == DirectedGraph(2, {{1, 0}}));
  }
  SUBCASE("chain of followers facing their predecessors") {
    std::vector<AgentPose> poses{
        {Vec2(0, 0), 0.0}, {Vec2(-6, 0), 0.0}, {Vec2(-12, 0), 0.0}, {Vec2(-18, 0), 0.0}};
    std::vector<RobotSpec> specs(4, spec);
    CHECK(sensing_graph(poses, specs).graph == DirectedGraph(4, {{1, 0}, {2, 1}, {3, 2}}));
  }
  SUBCASE("coincident agents") {
    std::vector<AgentPose> poses{{Vec2(1, 1), 0.0}, {Vec2(1, 1 + 1e-12), 0.0}};
    std::vector<RobotSpec> specs{spec, spec};
    CHECK_THROWS_AS(sensing_graph(poses, specs), DegenerateConfigurationError);
  }
}

TEST_CASE("rigid attachment under random poses") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(-50, 50), ang(-pi, pi);
  const auto a = default_approximation(FovSector{0.3, 1.2, 7.0});
  const auto ref = place_virtual_points(Vec2::Zero(), 0.0, a);
  std::array<Vec2, 4> r0{Vec2::Zero(), ref[0], ref[1], ref[2]};
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec2 x(pos(rng), pos(rng));
    const auto p = place_virtual_points(x, ang(rng), a);
    std::array<Vec2, 4> r{x, p[0], p[1], p[2]};
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j)
        CHECK(std::abs((r[i] - r[j]).norm() - (r0[i] - r0[j]).norm()) <= 1e-12 * 100);
  }
}

TEST_CASE("shrinking rho1 shrinks the approximate set") {
  const auto big = default_approximation(kQuarter);
  auto small = big;
  small.inclusion_radius = 7.5;
  std::size_t points = 0;
  for (double x = -12; x <= 12; x += 0.2)
    for (double y = -12; y <= 12; y += 0.2) {
      const Vec2 q(x, y);
      if (approx_contains(q, Vec2::Zero(), 0.0, small)) CHECK(approx_contains(q, Vec2::Zero(), 0.0, big));
      ++points;
    }
  CHECK(points >= 10000);
}

TEST_CASE("approximate containment is frame equivariant and implies the inclusion disk") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> pos(-15, 15), ang(-pi, pi);
  const auto a = default_approximation(FovSector{0.0, 2.0, 10.0});
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    const Vec2 q(pos(rng), pos(rng));
    const double theta = ang(rng);
    const double phi = ang(rng);
    const Vec2 t(pos(rng), pos(rng));
    const Eigen::Matrix2d R = rotation(phi);
    const bool in = approx_contains(q, Vec2::Zero(), theta, a);
    if (in) CHECK(q.norm() <= a.inclusion_radius);
    // Points within rounding distance of a boundary may legitimately flip.
    const bool moved = approx_contains(R * q + t, t, theta + phi, a);
    if (in != moved) {
      const auto p = place_virtual_points(Vec2::Zero(), theta, a);
      double slack = std::abs(q.norm() - a.inclusion_radius);
      for (std::size_t k = 0; k < 3; ++k)
        slack = std::min(slack, std::abs((q - p[k]).norm() - a.exclusion_radii[k]));
      CHECK(slack <= 1e-12 * 100);
      ++mismatches;
    }
  }
  CHECK(mismatches <= 2);
}

TEST_CASE("random sensing graphs are simple") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> pos(-10, 10), ang(-pi, pi);
  RobotSpec spec;
  for (double h : {0.0, 2.0, -2.0}) {
    FovSector s{h, 1.5, 8.0};
    spec.sectors.push_back({s, default_approximation(s)});
  }
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<AgentPose> poses(5);
    for (auto& p : poses) p = {Vec2(pos(rng), pos(rng)), ang(rng)};
    std::vector<RobotSpec> specs(5, spec);
    const auto t = sensing_graph(poses, specs);  // construction enforces simplicity
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& e : t.graph.edges()) {
      CHECK(e.tail != e.head);
      CHECK(seen.insert({e.tail, e.head}).second);
    }
    CHECK(t.sector_of_edge.size() == t.graph.edge_count());
  }
}
