#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <stdexcept>
#include <vector>

#include "pullnav/admittance.hpp"
#include "pullnav/geometry.hpp"
#include "pullnav/occupancy.hpp"

namespace pullnav {

struct NoPathError : std::runtime_error {
  NoPathError() : std::runtime_error("no collision-free path to goal") {}
};

struct EmptyPlanError : std::runtime_error {
  EmptyPlanError() : std::runtime_error("waypoint plan is empty") {}
};

/// Collision-free waypoint list for the base, spaced at most 0.3 m apart.
struct WaypointPlan {
  std::vector<PlanarPose> waypoints;
  PlanarPose goal;
};

/// Lookahead/lookback distances of the guidance algorithm plus the heights
/// the selected poses are projected to.
struct GuidanceDistances {
  double d1 = 0.6;          // base target lookahead
  double d2 = 0.8;          // base -> end-effector lookback
  double d3 = 0.6;          // end-effector -> human lookback
  double hand_height = 1.0;
  double laser_height = 0.2;

  void validate() const {
    if (d1 <= 0.0 || d2 <= 0.0 || d3 <= 0.0 || hand_height <= 0.0 || laser_height <= 0.0)
      throw std::invalid_argument("guidance distances must be positive");
  }
};

/// Saturation distance for the base gain and the logistic lateral-stiffness
/// profile (max/min asymptotes, inflection point, steepness).
struct PullingParams {
  double d_stop = 0.5;
  double eta = 1000.0;
  double zeta_l = 0.0;
  double gamma = 0.15;
  double kappa = 40.0;

  void validate() const {
    if (!(eta > zeta_l) || zeta_l < 0.0) throw std::invalid_argument("need eta > zeta_l >= 0");
    if (gamma <= 0.0 || kappa <= 0.0) throw std::invalid_argument("gamma, kappa must be positive");
    if (d_stop <= 0.0 || d_stop > 1.0)
      throw std::invalid_argument("d_stop must be in (0, 1]: the saturated pull is norm-bounded by 1");
  }
};

/// Per-tick adaptive pulling quantities.
struct PullingState {
  Vec2 p = Vec2::Zero();
  Vec2 p_sat = Vec2::Zero();
  double alpha_B = 1.0;
  double y_adaptive = 0.0;
  double k_y_hat = 0.0;
};

struct GuidanceOutput {
  PlanarPose X_B_target;
  TaskPose X_EE_des;      // on the collision-free path, pre lateral offset
  TaskPose X_EE_des_hat;  // laterally offset by y_adaptive
  PlanarPose X_H_des;
  std::size_t target_index = 0;  // plan cursor for monotone progress
};

namespace detail {

/// Every sample along the segment must land in a free cell of the inflated
/// grid.
inline bool line_of_sight(const OccupancyGrid& inflated, const Vec2& a, const Vec2& b) {
  const double len = (b - a).norm();
  const double step = 0.5 * inflated.resolution();
  const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
  for (int i = 0; i <= n; ++i) {
    const Vec2 p = a + (b - a) * (static_cast<double>(i) / n);
    if (inflated.occupied_at(p)) return false;
  }
  return true;
}

/// 8-connected A* over the inflated grid; returns cell-center points.
inline std::vector<Vec2> astar_cells(const OccupancyGrid& inflated, std::size_t sc,
                                     std::size_t sr, std::size_t gc, std::size_t gr) {
  const long w = static_cast<long>(inflated.width());
  const long h = static_cast<long>(inflated.height());
  const std::size_t n = static_cast<std::size_t>(w * h);
  const double kSqrt2 = std::sqrt(2.0);

  auto heuristic = [&](long c, long r) {
    const double dx = std::abs(static_cast<double>(c) - static_cast<double>(gc));
    const double dy = std::abs(static_cast<double>(r) - static_cast<double>(gr));
    return (dx + dy) + (kSqrt2 - 2.0) * std::min(dx, dy);  // octile
  };

  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<long> parent(n, -1);
  std::vector<bool> closed(n, false);

  struct Node {
    double f;
    double g;
    long idx;
    bool operator>(const Node& o) const {
      if (f != o.f) return f > o.f;
      if (g != o.g) return g < o.g;  // prefer larger g on f ties
      return idx > o.idx;
    }
  };
  std::priority_queue<Node, std::vector<Node>, std::greater<Node>> open;

  const long start = static_cast<long>(sr) * w + static_cast<long>(sc);
  const long goal = static_cast<long>(gr) * w + static_cast<long>(gc);
  g[static_cast<std::size_t>(start)] = 0.0;
  open.push({heuristic(static_cast<long>(sc), static_cast<long>(sr)), 0.0, start});

  const long dc[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  const long dr[8] = {0, 0, 1, -1, 1, -1, 1, -1};

  while (!open.empty()) {
    const Node node = open.top();
    open.pop();
    const std::size_t ui = static_cast<std::size_t>(node.idx);
    if (closed[ui]) continue;
    closed[ui] = true;
    if (node.idx == goal) break;

    const long uc = node.idx % w;
    const long ur = node.idx / w;
    for (int k = 0; k < 8; ++k) {
      const long vc = uc + dc[k];
      const long vr = ur + dr[k];
      if (!inflated.in_bounds(vc, vr)) continue;
      if (inflated.occupied(static_cast<std::size_t>(vc), static_cast<std::size_t>(vr))) continue;
      // forbid diagonal moves that cut an occupied corner
      if (dc[k] != 0 && dr[k] != 0) {
        if (inflated.occupied(static_cast<std::size_t>(uc + dc[k]), static_cast<std::size_t>(ur)) ||
            inflated.occupied(static_cast<std::size_t>(uc), static_cast<std::size_t>(ur + dr[k])))
          continue;
      }
      const double cost = (dc[k] != 0 && dr[k] != 0) ? kSqrt2 : 1.0;
      const std::size_t vi = static_cast<std::size_t>(vr * w + vc);
      const double cand = node.g + cost;
      if (cand < g[vi] - 1e-12) {
        g[vi] = cand;
        parent[vi] = node.idx;
        open.push({cand + heuristic(vc, vr), cand, static_cast<long>(vi)});
      }
    }
  }

  if (!closed[static_cast<std::size_t>(goal)]) throw NoPathError{};

  std::vector<Vec2> cells;
  for (long i = goal; i != -1; i = parent[static_cast<std::size_t>(i)])
    cells.push_back(inflated.cell_center(static_cast<std::size_t>(i % w),
                                         static_cast<std::size_t>(i / w)));
  std::reverse(cells.begin(), cells.end());
  return cells;
}

inline std::vector<Vec2> shortcut(const OccupancyGrid& inflated, const std::vector<Vec2>& path) {
  if (path.size() <= 2) return path;
  std::vector<Vec2> out;
  out.push_back(path.front());
  std::size_t i = 0;
  while (i + 1 < path.size()) {
    std::size_t j = path.size() - 1;
    while (j > i + 1 && !line_of_sight(inflated, path[i], path[j])) --j;
    out.push_back(path[j]);
    i = j;
  }
  return out;
}

inline std::vector<Vec2> resample(const std::vector<Vec2>& polyline, double max_spacing) {
  std::vector<Vec2> out;
  out.push_back(polyline.front());
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    const Vec2& a = polyline[i];
    const Vec2& b = polyline[i + 1];
    const double len = (b - a).norm();
    const int pieces = std::max(1, static_cast<int>(std::ceil(len / max_spacing)));
    for (int k = 1; k <= pieces; ++k)
      out.push_back(a + (b - a) * (static_cast<double>(k) / pieces));
  }
  return out;
}

}  // namespace detail

/// Inflation used for planning: one extra cell on top of the requested
/// clearance, so every point of a free cell keeps true Euclidean clearance
/// >= inflation.
inline OccupancyGrid inflate_for_planning(const OccupancyGrid& grid, double inflation) {
  return grid.inflate(inflation + grid.resolution());
}

/// Plans on an already-inflated grid: 8-connected A*, greedy line-of-sight
/// shortcutting, resampling at <= max_spacing. Waypoint yaw points to the
/// next waypoint; the final waypoint takes the goal heading.
inline WaypointPlan plan_waypoints_on_inflated(const OccupancyGrid& inflated,
                                               const PlanarPose& start, const PlanarPose& goal,
                                               double max_spacing = 0.3) {
  std::size_t sc, sr, gc, gr;
  if (!inflated.world_to_cell(start.position(), sc, sr) || inflated.occupied(sc, sr))
    throw NoPathError{};
  if (!inflated.world_to_cell(goal.position(), gc, gr) || inflated.occupied(gc, gr))
    throw NoPathError{};

  std::vector<Vec2> pts = detail::astar_cells(inflated, sc, sr, gc, gr);
  pts.front() = start.position();
  pts.back() = goal.position();
  pts = detail::shortcut(inflated, pts);
  pts = detail::resample(pts, max_spacing);

  WaypointPlan plan;
  plan.goal = goal;
  plan.waypoints.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double yaw;
    if (i + 1 < pts.size()) {
      const Vec2 dir = pts[i + 1] - pts[i];
      yaw = (dir.norm() > 1e-12) ? std::atan2(dir.y(), dir.x()) : goal.theta;
    } else {
      yaw = goal.theta;
    }
    plan.waypoints.emplace_back(pts[i].x(), pts[i].y(), yaw);
  }
  return plan;
}

/// Convenience wrapper inflating the raw grid first.
inline WaypointPlan plan_waypoints(const OccupancyGrid& grid, const PlanarPose& start,
                                   const PlanarPose& goal, double inflation,
                                   double max_spacing = 0.3) {
  return plan_waypoints_on_inflated(inflate_for_planning(grid, inflation), start, goal,
                                    max_spacing);
}

/// Pulling vector: negated translation of the tracked human frame expressed
/// in the desired human frame. x pulls along the motion direction, y
/// laterally.
inline Vec2 pulling_vector(const PlanarPose& X_H_des, const PlanarPose& X_H) {
  return -frame_express(X_H, X_H_des);
}

/// Norm saturation to the unit disk.
inline Vec2 saturate(const Vec2& p) {
  const double n = p.norm();
  return (n <= 1.0) ? p : Vec2(p / n);
}

/// Base torque gain: 1 when the human keeps up, linearly down to 0 when the
/// forward pull reaches d_stop.
inline double base_gain(double p_sat_x, double d_stop) {
  return std::clamp(-p_sat_x / d_stop + 1.0, 0.0, 1.0);
}

/// Logistic lateral stiffness: near zeta_l for small offsets, rising to eta
/// as |y_adaptive| passes gamma.
inline double lateral_stiffness(double y_adaptive, const PullingParams& params) {
  params.validate();
  return params.zeta_l +
         (params.eta - params.zeta_l) /
             (1.0 + std::exp((params.gamma - std::abs(y_adaptive)) * params.kappa));
}

/// One pass of the guidance algorithm. Selects the base target at least d1
/// ahead along the plan (walking forward from the nearest remaining
/// waypoint), the end-effector desired pose d2 back along the base history at
/// hand height, its laterally offset copy, and the desired human pose d3
/// further back at laser height. While histories are shorter than the
/// lookback the poses extrapolate along the start pose's -X axis.
inline GuidanceOutput guidance_step(const WaypointPlan& plan, const PlanarPose& X_B,
                                    const PoseHistory& base_hist, const PoseHistory& ee_des_hist,
                                    double y_adaptive, const GuidanceDistances& dist,
                                    std::size_t search_from = 0) {
  dist.validate();
  if (plan.waypoints.empty()) throw EmptyPlanError{};

  GuidanceOutput out;

  // (i) base target: from the nearest remaining waypoint (the progress
  // point), the first one at least d1 away; the goal when the plan is
  // exhausted. Searching from `search_from` keeps progress monotone, so
  // waypoints already passed are never reconsidered.
  std::size_t idx = std::min(search_from, plan.waypoints.size() - 1);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = idx; i < plan.waypoints.size(); ++i) {
    const double d = plan.waypoints[i].distance_to(X_B);
    if (d < best) {
      best = d;
      idx = i;
    }
  }
  while (idx < plan.waypoints.size() && plan.waypoints[idx].distance_to(X_B) < dist.d1) ++idx;
  if (idx < plan.waypoints.size()) {
    out.X_B_target = plan.waypoints[idx];
    out.target_index = idx;
  } else {
    out.X_B_target = plan.goal;
    out.target_index = plan.waypoints.size() - 1;
  }

  // (ii) end-effector desired pose, d2 back along the base trail
  const TaskPose anchor = TaskPose::from_planar(X_B);
  TaskPose ee = lookback_with_virtual_tail(base_hist, anchor, dist.d2);
  ee.position.z() = dist.hand_height;
  out.X_EE_des = ee;

  TaskPose ee_hat = ee;
  ee_hat.position.head<2>() += rotate2(Vec2(0.0, y_adaptive), ee.yaw);
  out.X_EE_des_hat = ee_hat;

  // (iii) desired human pose, d3 back along the end-effector trail
  TaskPose h = lookback_with_virtual_tail(ee_des_hist, ee, dist.d3);
  h.position.z() = dist.laser_height;
  out.X_H_des = h.planar();

  return out;
}

/// Desired planar force magnitudes (N, N) and the yaw gain (N*m) applied to
/// the unit direction toward the base target. When ccw_positive_yaw is set
/// the yaw channel sign is flipped so that a target to the left yields a
/// counter-clockwise torque.
struct VirtualTorqueParams {
  double f_des_x = 80.0;
  double f_des_y = 80.0;
  double f_des_yaw = 40.0;
  bool ccw_positive_yaw = false;
};

/// Shapes the base pull: unit vector toward the target in the base frame,
/// scaled per channel by the desired force and the base gain.
inline BaseTorque virtual_torques(const PlanarPose& X_B, const PlanarPose& X_B_target,
                                  const VirtualTorqueParams& params, double alpha_B) {
  const Vec2 target_in_base = frame_express(X_B_target, X_B);
  const double norm = target_in_base.norm();
  if (norm < 1e-6) return {};

  const double w_x = target_in_base.x() / norm;
  const double w_y = target_in_base.y() / norm;
  double w_theta = std::atan2(-w_y, w_x);
  if (params.ccw_positive_yaw) w_theta = -w_theta;

  return {w_x * params.f_des_x * alpha_B, w_y * params.f_des_y * alpha_B,
          w_theta * params.f_des_yaw * alpha_B};
}

}  // namespace pullnav
