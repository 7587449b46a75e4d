#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "fovtopo/graph.hpp"

namespace fovtopo {

using Vec2 = Eigen::Vector2d;

/// Circular sector in the robot body frame: boresight at `heading` relative to the robot
/// heading, full opening `central_angle`, radius `range`.
struct FovSector {
  double heading = 0.0;
  double central_angle = 0.0;
  double range = 0.0;

  /// Throws UnsupportedGeometryError / std::invalid_argument on bad fields.
  void validate() const;
};

/// Exclusion points, in the order the approximation stores them.
enum class VirtualPoint : std::size_t { Left = 0, Rear = 1, Right = 2 };
inline constexpr std::array<VirtualPoint, 3> kVirtualPoints{VirtualPoint::Left,
                                                            VirtualPoint::Rear,
                                                            VirtualPoint::Right};
std::string_view to_string(VirtualPoint p);

/// Rigid offset of one virtual point: the point sits at x + R(theta + rotation) * translation.
struct RigidOffset {
  double rotation = 0.0;
  Vec2 translation = Vec2::Zero();
};

/// Disk-intersection approximation of a sector: inside the inclusion disk around the robot and
/// outside the three exclusion disks around the virtual points.
struct FovApproximation {
  double inclusion_radius = 0.0;
  /// One radius per virtual point; the usual case shares one value.
  std::array<double, 3> exclusion_radii{};
  std::array<RigidOffset, 3> offsets{};

  double exclusion_radius(VirtualPoint p) const {
    return exclusion_radii[static_cast<std::size_t>(p)];
  }
  const RigidOffset& offset(VirtualPoint p) const { return offsets[static_cast<std::size_t>(p)]; }

  /// Throws std::invalid_argument when a radius is non-positive or an exclusion center sits on
  /// the robot origin.
  void validate() const;
  /// Additionally requires inclusion_radius <= s.range.
  void validate_against(const FovSector& s) const;
};

struct SensingSector {
  FovSector sector;
  FovApproximation approx;
};

struct RobotSpec {
  std::vector<SensingSector> sectors;
  double comm_radius = 1.0;
  double collision_radius = 0.0;

  void validate() const;
};

struct ApproximationQuality {
  double iou = 0.0;
  double false_positive_area = 0.0;
  double false_negative_area = 0.0;
  double grid_resolution = 0.0;

  friend bool operator==(const ApproximationQuality&, const ApproximationQuality&) = default;
};

inline constexpr double kCoincidenceGuard = 1e-9;
inline constexpr double kDefaultGridResolution = 0.05;

/// Counter-clockwise rotation by `angle`.
Eigen::Matrix2d rotation(double angle);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

std::array<Vec2, 3> place_virtual_points(const Vec2& x, double theta, const FovApproximation& a);

/// Closed sector test; the apex itself is contained.
bool sector_contains(const Vec2& query, const Vec2& robot, double theta, const FovSector& s);

/// Closed inclusion disk and closed exclusion complements, evaluated literally.
bool approx_contains(const Vec2& query, const Vec2& robot, double theta,
                     const FovApproximation& a);

/// Rear point straight behind the apex, lateral points at +-(pi/2 + beta/2) from boresight, all
/// at distance rho2 = range so each lateral disk passes through the apex tangent to a bounding
/// ray. Throws UnsupportedGeometryError when beta >= pi.
FovApproximation default_approximation(const FovSector& s);

/// Grid-count estimate over the square of half-width max(rho1, range) centred on the apex, with
/// cell centres at (i + 1/2) * grid_res. Throws ResolutionError for fewer than 100 cells over the
/// sector bounding box.
ApproximationQuality approximation_quality(const FovSector& s, const FovApproximation& a,
                                           double grid_res);

/// Coordinate descent over (rho1, rho2, left angle, right angle) from the default placement.
/// `search_budget` counts IoU evaluations including the seed, so a budget of 1 returns the
/// default unchanged.
FovApproximation fit_approximation(const FovSector& s, double grid_res, int search_budget);

/// Index of the containing sector with the smallest boresight deviation (lowest index on ties).
std::optional<std::size_t> select_sector(const Vec2& robot, double theta, const RobotSpec& spec,
                                         const Vec2& target);

struct AgentPose {
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
};

/// Directed interaction graph together with the sector each edge is sensed through.
struct SensingTopology {
  DirectedGraph graph;
  std::vector<std::size_t> sector_of_edge;
};

/// Edge (i -> j) exists iff select_sector(i, x_j) succeeds; edges are ordered by (i, j).
/// Throws DegenerateConfigurationError for agents closer than kCoincidenceGuard.
SensingTopology sensing_graph(std::span<const AgentPose> poses, std::span<const RobotSpec> specs);

}  // namespace fovtopo
