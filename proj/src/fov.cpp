#include "fovtopo/fov.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fovtopo/error.hpp"

namespace fovtopo {

namespace {

constexpr double kPi = std::numbers::pi;

bool finite(const Vec2& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); }

}  // namespace

void FovSector::validate() const {
  if (!std::isfinite(heading) || !std::isfinite(central_angle) || !std::isfinite(range)) {
    throw std::invalid_argument("sector fields must be finite");
  }
  if (range <= 0.0) {
    throw std::invalid_argument("sector range must be positive");
  }
  if (central_angle <= 0.0) {
    throw std::invalid_argument("sector central angle must be positive");
  }
  if (central_angle >= kPi) {
    throw UnsupportedGeometryError("central angle " + std::to_string(central_angle) +
                                   " rad is not below pi; the three-point approximation only "
                                   "covers sectors narrower than a half-plane");
  }
}

std::string_view to_string(VirtualPoint p) {
  switch (p) {
    case VirtualPoint::Left:
      return "left";
    case VirtualPoint::Rear:
      return "rear";
    case VirtualPoint::Right:
      return "right";
  }
  return "unknown";
}

void FovApproximation::validate() const {
  if (!(inclusion_radius > 0.0) || !std::isfinite(inclusion_radius)) {
    throw std::invalid_argument("inclusion radius must be positive and finite");
  }
  for (std::size_t k = 0; k < 3; ++k) {
    if (!(exclusion_radii[k] > 0.0) || !std::isfinite(exclusion_radii[k])) {
      throw std::invalid_argument("exclusion radius must be positive and finite");
    }
    if (!finite(offsets[k].translation) || !std::isfinite(offsets[k].rotation)) {
      throw std::invalid_argument("virtual point offsets must be finite");
    }
    if (offsets[k].translation.norm() <= 0.0) {
      throw std::invalid_argument("virtual point '" +
                                  std::string(to_string(kVirtualPoints[k])) +
                                  "' coincides with the robot origin");
    }
  }
}

void FovApproximation::validate_against(const FovSector& s) const {
  validate();
  if (inclusion_radius > s.range) {
    throw std::invalid_argument("inclusion radius exceeds the sector range");
  }
}

void RobotSpec::validate() const {
  if (sectors.empty()) {
    throw std::invalid_argument("robot needs at least one sensing sector");
  }
  for (std::size_t k = 0; k < sectors.size(); ++k) {
    sectors[k].sector.validate();
    sectors[k].approx.validate_against(sectors[k].sector);
    for (std::size_t m = 0; m < k; ++m) {
      if (wrap_angle(sectors[m].sector.heading - sectors[k].sector.heading) == 0.0) {
        throw std::invalid_argument("sector headings must be distinct");
      }
    }
  }
  if (!(comm_radius > 0.0)) {
    throw std::invalid_argument("communication radius must be positive");
  }
  if (!(collision_radius >= 0.0)) {
    throw std::invalid_argument("collision radius must be non-negative");
  }
}

Eigen::Matrix2d rotation(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

double wrap_angle(double angle) {
  double a = std::remainder(angle, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

std::array<Vec2, 3> place_virtual_points(const Vec2& x, double theta, const FovApproximation& a) {
  std::array<Vec2, 3> points;
  for (std::size_t k = 0; k < 3; ++k) {
    points[k] = x + rotation(theta + a.offsets[k].rotation) * a.offsets[k].translation;
  }
  return points;
}

bool sector_contains(const Vec2& query, const Vec2& robot, double theta, const FovSector& s) {
  const Vec2 d = query - robot;
  const double r = d.norm();
  if (r > s.range) return false;
  if (r == 0.0) return true;
  const double deviation = wrap_angle(std::atan2(d.y(), d.x()) - (theta + s.heading));
  return std::abs(deviation) <= 0.5 * s.central_angle;
}

bool approx_contains(const Vec2& query, const Vec2& robot, double theta,
                     const FovApproximation& a) {
  if ((robot - query).norm() > a.inclusion_radius) return false;
  const auto points = place_virtual_points(robot, theta, a);
  for (std::size_t k = 0; k < 3; ++k) {
    if ((points[k] - query).norm() < a.exclusion_radii[k]) return false;
  }
  return true;
}

namespace {

FovApproximation placement(const FovSector& s, double rho1, double rho2, double left_angle,
                           double right_angle) {
  FovApproximation a;
  a.inclusion_radius = rho1;
  a.exclusion_radii = {rho2, rho2, rho2};
  const std::array<double, 3> angles{left_angle, kPi, -right_angle};
  for (std::size_t k = 0; k < 3; ++k) {
    a.offsets[k].rotation = s.heading;
    a.offsets[k].translation = rho2 * Vec2(std::cos(angles[k]), std::sin(angles[k]));
  }
  // cos(pi) leaves no exact zero in y; the rear point sits on the boresight axis.
  a.offsets[1].translation = Vec2(-rho2, 0.0);
  return a;
}

struct Box {
  double xmin, xmax, ymin, ymax;
};

Box sector_box(const FovSector& s) {
  Box b{0.0, 0.0, 0.0, 0.0};
  auto add = [&](double angle) {
    const double x = s.range * std::cos(angle);
    const double y = s.range * std::sin(angle);
    b.xmin = std::min(b.xmin, x);
    b.xmax = std::max(b.xmax, x);
    b.ymin = std::min(b.ymin, y);
    b.ymax = std::max(b.ymax, y);
  };
  const double lo = s.heading - 0.5 * s.central_angle;
  const double hi = s.heading + 0.5 * s.central_angle;
  add(lo);
  add(hi);
  for (int q = -4; q <= 4; ++q) {
    const double axis = q * 0.5 * kPi;
    if (axis > lo && axis < hi) add(axis);
  }
  return b;
}

// Cell-centred grid over the square of half-width `half` around the apex.
struct Grid {
  Grid(double half_width, double res)
      : res(res), cells(static_cast<long>(std::ceil(2.0 * half_width / res))), origin(-half_width) {}
  double center(long i) const { return origin + (static_cast<double>(i) + 0.5) * res; }
  double res;
  long cells;
  double origin;
};

void check_resolution(const FovSector& s, double grid_res) {
  if (!(grid_res > 0.0) || !std::isfinite(grid_res)) {
    throw ResolutionError("grid resolution must be positive and finite");
  }
  const Box b = sector_box(s);
  const double count = ((b.xmax - b.xmin) / grid_res) * ((b.ymax - b.ymin) / grid_res);
  if (count < 100.0) {
    throw ResolutionError("grid resolution " + std::to_string(grid_res) +
                          " m leaves fewer than 100 cells over the sector bounding box");
  }
}

ApproximationQuality evaluate(const Grid& grid, const std::vector<char>& in_sector,
                              const FovApproximation& a) {
  long inter = 0;
  long fp = 0;
  long fn = 0;
  const Vec2 origin = Vec2::Zero();
  std::size_t idx = 0;
  for (long iy = 0; iy < grid.cells; ++iy) {
    const double y = grid.center(iy);
    for (long ix = 0; ix < grid.cells; ++ix, ++idx) {
      const Vec2 p(grid.center(ix), y);
      const bool s = in_sector[idx] != 0;
      const bool t = approx_contains(p, origin, 0.0, a);
      if (s && t) {
        ++inter;
      } else if (t) {
        ++fp;
      } else if (s) {
        ++fn;
      }
    }
  }
  const double cell = grid.res * grid.res;
  const long uni = inter + fp + fn;
  ApproximationQuality q;
  q.iou = uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
  q.false_positive_area = static_cast<double>(fp) * cell;
  q.false_negative_area = static_cast<double>(fn) * cell;
  q.grid_resolution = grid.res;
  return q;
}

std::vector<char> sector_mask(const Grid& grid, const FovSector& s) {
  std::vector<char> mask(static_cast<std::size_t>(grid.cells * grid.cells));
  const Vec2 origin = Vec2::Zero();
  std::size_t idx = 0;
  for (long iy = 0; iy < grid.cells; ++iy) {
    const double y = grid.center(iy);
    for (long ix = 0; ix < grid.cells; ++ix, ++idx) {
      mask[idx] = sector_contains(Vec2(grid.center(ix), y), origin, 0.0, s) ? 1 : 0;
    }
  }
  return mask;
}

}  // namespace

FovApproximation default_approximation(const FovSector& s) {
  s.validate();
  const double lateral = 0.5 * kPi + 0.5 * s.central_angle;
  return placement(s, s.range, s.range, lateral, lateral);
}

ApproximationQuality approximation_quality(const FovSector& s, const FovApproximation& a,
                                           double grid_res) {
  s.validate();
  a.validate();
  check_resolution(s, grid_res);
  const Grid grid(std::max(a.inclusion_radius, s.range), grid_res);
  return evaluate(grid, sector_mask(grid, s), a);
}

FovApproximation fit_approximation(const FovSector& s, double grid_res, int search_budget) {
  s.validate();
  if (search_budget < 1) {
    throw std::invalid_argument("search budget must be at least 1");
  }
  check_resolution(s, grid_res);
  const Grid grid(s.range, grid_res);
  const auto mask = sector_mask(grid, s);

  const double lateral = 0.5 * kPi + 0.5 * s.central_angle;
  std::array<double, 4> params{s.range, s.range, lateral, lateral};
  auto build = [&](const std::array<double, 4>& p) {
    return placement(s, p[0], p[1], p[2], p[3]);
  };
  auto feasible = [&](const std::array<double, 4>& p) {
    return p[0] > 0.0 && p[0] <= s.range && p[1] > 0.0 && p[2] > 0.0 && p[2] < kPi &&
           p[3] > 0.0 && p[3] < kPi;
  };

  int evaluations = 1;
  double best = evaluate(grid, mask, build(params)).iou;
  std::array<double, 4> steps{0.05 * s.range, 0.05 * s.range, 0.05, 0.05};
  const double min_radius_step = 0.5 * grid_res;

  while (evaluations < search_budget && steps[0] >= min_radius_step) {
    bool improved = false;
    for (std::size_t c = 0; c < params.size() && evaluations < search_budget; ++c) {
      for (const double dir : {1.0, -1.0}) {
        if (evaluations >= search_budget) break;
        auto trial = params;
        trial[c] += dir * steps[c];
        if (c == 0) trial[0] = std::min(trial[0], s.range);
        if (!feasible(trial) || trial == params) continue;
        ++evaluations;
        const double iou = evaluate(grid, mask, build(trial)).iou;
        if (iou > best) {
          best = iou;
          params = trial;
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      for (auto& st : steps) st *= 0.5;
    }
  }
  return build(params);
}

std::optional<std::size_t> select_sector(const Vec2& robot, double theta, const RobotSpec& spec,
                                         const Vec2& target) {
  std::optional<std::size_t> best;
  double best_deviation = 0.0;
  const Vec2 d = target - robot;
  const double bearing = std::atan2(d.y(), d.x());
  for (std::size_t k = 0; k < spec.sectors.size(); ++k) {
    const auto& ss = spec.sectors[k];
    if (!approx_contains(target, robot, theta, ss.approx)) continue;
    const double deviation = std::abs(wrap_angle(bearing - (theta + ss.sector.heading)));
    if (!best || deviation < best_deviation) {
      best = k;
      best_deviation = deviation;
    }
  }
  return best;
}

SensingTopology sensing_graph(std::span<const AgentPose> poses, std::span<const RobotSpec> specs) {
  if (poses.size() != specs.size()) {
    throw std::invalid_argument("poses and specs differ in length");
  }
  if (poses.empty()) {
    throw std::invalid_argument("sensing graph needs at least one agent");
  }
  const std::size_t n = poses.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if ((poses[i].position - poses[j].position).norm() < kCoincidenceGuard) {
        throw DegenerateConfigurationError(
            i, j, "agents " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
      }
    }
  }
  std::vector<Edge> edges;
  std::vector<std::size_t> sectors;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (auto k = select_sector(poses[i].position, poses[i].heading, specs[i],
                                 poses[j].position)) {
        edges.push_back({i, j});
        sectors.push_back(*k);
      }
    }
  }
  return {DirectedGraph(n, std::move(edges)), std::move(sectors)};
}

}  // namespace fovtopo
