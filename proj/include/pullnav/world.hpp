#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "pullnav/geometry.hpp"
#include "pullnav/occupancy.hpp"
#include "pullnav/perception.hpp"

namespace pullnav {

struct Segment {
  Vec2 a = Vec2::Zero();
  Vec2 b = Vec2::Zero();
};

struct Disc {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
};

/// Disc sliding along a straight line: center(t) = center0 + velocity * t.
struct MovingDisc {
  Vec2 center0 = Vec2::Zero();
  double radius = 0.0;
  Vec2 velocity = Vec2::Zero();

  Disc at(double t) const { return {center0 + velocity * t, radius}; }
};

struct LidarConfig {
  std::size_t n_beams = 720;
  double angle_min = -kPi;
  double angle_max = kPi;
  double max_range = 8.0;

  void validate() const {
    if (n_beams < 2) throw std::invalid_argument("lidar needs at least 2 beams");
    if (max_range <= 0.0) throw std::invalid_argument("lidar max_range must be positive");
  }
};

namespace detail {

/// Distance along the ray to the segment, or +inf.
inline double ray_segment(const Vec2& origin, const Vec2& dir, const Segment& seg) {
  const Vec2 v = seg.b - seg.a;
  const double denom = dir.x() * (-v.y()) - dir.y() * (-v.x());
  if (std::abs(denom) < 1e-15) return std::numeric_limits<double>::infinity();
  const Vec2 rhs = seg.a - origin;
  const double t = (rhs.x() * (-v.y()) - rhs.y() * (-v.x())) / denom;
  const double u = (dir.x() * rhs.y() - dir.y() * rhs.x()) / denom;
  if (t >= 0.0 && u >= 0.0 && u <= 1.0) return t;
  return std::numeric_limits<double>::infinity();
}

/// Distance along the ray to the disc boundary, or +inf.
inline double ray_disc(const Vec2& origin, const Vec2& dir, const Disc& disc) {
  const Vec2 rel = origin - disc.center;
  const double b = rel.dot(dir);
  const double c = rel.squaredNorm() - disc.radius * disc.radius;
  const double disc_val = b * b - c;
  if (disc_val < 0.0) return std::numeric_limits<double>::infinity();
  const double sq = std::sqrt(disc_val);
  const double t1 = -b - sq;
  if (t1 >= 0.0) return t1;
  const double t2 = -b + sq;
  if (t2 >= 0.0) return t2;  // origin inside the disc
  return std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Static segments/discs plus optionally moving discs, with the rectangle the
/// occupancy grid is derived over.
class World {
 public:
  std::vector<Segment> segments;
  std::vector<Disc> discs;
  std::vector<MovingDisc> moving_discs;
  Vec2 bounds_min = Vec2::Zero();
  Vec2 bounds_max = Vec2(10.0, 10.0);

  bool has_moving_obstacles() const { return !moving_discs.empty(); }

  /// Rasterizes the obstacle geometry at time t into an occupancy grid over
  /// the world bounds. Segments are walked at half-cell steps; disc cells are
  /// stamped by center-in-disc test.
  OccupancyGrid derive_grid(double resolution, double t = 0.0) const {
    if (resolution <= 0.0) throw std::invalid_argument("grid resolution must be positive");
    const Vec2 span = bounds_max - bounds_min;
    if (span.x() <= 0.0 || span.y() <= 0.0) throw std::invalid_argument("empty world bounds");
    const auto w = static_cast<std::size_t>(std::ceil(span.x() / resolution));
    const auto h = static_cast<std::size_t>(std::ceil(span.y() / resolution));
    OccupancyGrid grid(w, h, resolution, bounds_min);

    for (const auto& seg : segments) {
      const double len = (seg.b - seg.a).norm();
      const int n = std::max(1, static_cast<int>(std::ceil(len / (0.5 * resolution))));
      for (int i = 0; i <= n; ++i) {
        const Vec2 p = seg.a + (seg.b - seg.a) * (static_cast<double>(i) / n);
        std::size_t c, r;
        if (grid.world_to_cell(p, c, r)) grid.set_occupied(c, r);
      }
    }

    auto stamp_disc = [&](const Disc& d) {
      const long c0 = static_cast<long>(std::floor((d.center.x() - d.radius - bounds_min.x()) / resolution));
      const long c1 = static_cast<long>(std::ceil((d.center.x() + d.radius - bounds_min.x()) / resolution));
      const long r0 = static_cast<long>(std::floor((d.center.y() - d.radius - bounds_min.y()) / resolution));
      const long r1 = static_cast<long>(std::ceil((d.center.y() + d.radius - bounds_min.y()) / resolution));
      for (long r = r0; r <= r1; ++r)
        for (long c = c0; c <= c1; ++c) {
          if (!grid.in_bounds(c, r)) continue;
          const Vec2 center = grid.cell_center(static_cast<std::size_t>(c), static_cast<std::size_t>(r));
          if ((center - d.center).norm() <= d.radius)
            grid.set_occupied(static_cast<std::size_t>(c), static_cast<std::size_t>(r));
        }
    };
    for (const auto& d : discs) stamp_disc(d);
    for (const auto& m : moving_discs) stamp_disc(m.at(t));
    return grid;
  }

  /// Nearest hit among world obstacles (moving discs at time t) and the extra
  /// discs, or +inf.
  double ray_distance(const Vec2& origin, const Vec2& dir, double t,
                      const std::vector<Disc>& extra_discs) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& seg : segments) best = std::min(best, detail::ray_segment(origin, dir, seg));
    for (const auto& d : discs) best = std::min(best, detail::ray_disc(origin, dir, d));
    for (const auto& m : moving_discs) best = std::min(best, detail::ray_disc(origin, dir, m.at(t)));
    for (const auto& d : extra_discs) best = std::min(best, detail::ray_disc(origin, dir, d));
    return best;
  }
};

/// Synthesizes one scan. Beam i leaves the sensor at
/// sensor.theta + angle_of(i); ranges get Gaussian noise (when sigma > 0),
/// are clamped to at least 0.01 m and report max_range when nothing is hit.
/// Deterministic for a given rng state.
inline LaserScan raycast(const World& world, const PlanarPose& sensor_pose,
                         const LidarConfig& cfg, double noise_sigma, std::mt19937_64& rng,
                         double t = 0.0, const std::vector<Disc>& extra_discs = {}) {
  cfg.validate();
  LaserScan scan;
  scan.sensor_pose = sensor_pose;
  scan.angle_min = cfg.angle_min;
  scan.angle_max = cfg.angle_max;
  scan.max_range = cfg.max_range;
  scan.timestamp = t;
  scan.ranges.resize(cfg.n_beams);

  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
  const Vec2 origin = sensor_pose.position();
  for (std::size_t i = 0; i < cfg.n_beams; ++i) {
    const double beam = scan.angle_of(i);
    const double a = sensor_pose.theta + beam;
    const Vec2 dir(std::cos(a), std::sin(a));
    double r = world.ray_distance(origin, dir, t, extra_discs);
    if (r >= cfg.max_range || !std::isfinite(r)) {
      scan.ranges[i] = cfg.max_range;
      continue;
    }
    if (noise_sigma > 0.0) r += noise(rng);
    scan.ranges[i] = std::clamp(r, 0.01, cfg.max_range);
  }
  return scan;
}

}  // namespace pullnav
