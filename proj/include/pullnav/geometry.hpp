#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <stdexcept>

namespace pullnav {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

constexpr double kPi = 3.14159265358979323846;

/// Normalizes an angle to (-pi, pi]. Idempotent.
inline double normalize_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

/// Signed shortest-arc difference a - b, in (-pi, pi].
inline double angle_diff(double a, double b) { return normalize_angle(a - b); }

/// Blends yaw from a toward b by t in [0,1] along the shortest arc.
inline double lerp_angle(double a, double b, double t) {
  return normalize_angle(a + t * angle_diff(b, a));
}

inline Vec2 rotate2(const Vec2& v, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

/// Planar pose in the world frame: position (m) and heading in (-pi, pi].
struct PlanarPose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  PlanarPose() = default;
  PlanarPose(double x_, double y_, double theta_) : x(x_), y(y_), theta(normalize_angle(theta_)) {}

  Vec2 position() const { return {x, y}; }
  Vec2 heading() const { return {std::cos(theta), std::sin(theta)}; }

  double distance_to(const PlanarPose& other) const {
    return (position() - other.position()).norm();
  }
};

/// Task-space pose: 3D position plus planar yaw. Covers base, end-effector and
/// human frames; full 3D orientation is out of scope.
struct TaskPose {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;

  TaskPose() = default;
  TaskPose(const Vec3& p, double yaw_) : position(p), yaw(normalize_angle(yaw_)) {}

  Vec2 xy() const { return position.head<2>(); }

  PlanarPose planar() const { return {position.x(), position.y(), yaw}; }

  static TaskPose from_planar(const PlanarPose& p, double z = 0.0) {
    return {{p.x, p.y, z}, p.theta};
  }
};

/// Translation of `target`'s origin expressed in the `reference` frame:
/// R(-reference.theta) * (target.position - reference.position).
inline Vec2 frame_express(const PlanarPose& target, const PlanarPose& reference) {
  return rotate2(target.position() - reference.position(), -reference.theta);
}

/// Timestamped pose history with bounded capacity and oldest-first eviction.
/// Single writer; lookups walk backward from the newest entry.
class PoseHistory {
 public:
  struct Entry {
    double time = 0.0;
    TaskPose pose;
  };

  explicit PoseHistory(std::size_t capacity = 10000) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("PoseHistory capacity must be positive");
  }

  void append(double time, const TaskPose& pose) {
    if (!entries_.empty() && time <= entries_.back().time)
      throw std::invalid_argument("PoseHistory timestamps must be strictly increasing");
    if (entries_.size() == capacity_) entries_.pop_front();
    entries_.push_back({time, pose});
  }

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Entry& newest() const { return entries_.back(); }
  const Entry& oldest() const { return entries_.front(); }
  const Entry& at(std::size_t i) const { return entries_[i]; }

  /// Walks backward from the newest entry and returns the first pose whose XY
  /// distance from `anchor` is >= d. When two consecutive entries straddle d,
  /// the returned pose is interpolated so that its distance equals d exactly
  /// (position along the segment, yaw by shortest arc, z linearly).
  /// Returns nullopt when the history never reaches distance d.
  std::optional<TaskPose> lookback_by_distance(const TaskPose& anchor, double d) const {
    if (d <= 0.0) throw std::invalid_argument("lookback distance must be positive");
    if (entries_.empty()) return std::nullopt;

    const Vec2 a = anchor.xy();
    for (std::size_t k = entries_.size(); k-- > 0;) {
      const TaskPose& p = entries_[k].pose;
      if ((p.xy() - a).norm() >= d) {
        if (k + 1 < entries_.size()) {
          return interpolate_to_distance(entries_[k].pose, entries_[k + 1].pose, a, d);
        }
        return p;  // newest entry already beyond d: nothing to straddle
      }
    }
    return std::nullopt;
  }

 private:
  // Finds the pose on segment far->near whose XY distance from anchor is d.
  // far is at distance >= d, near at distance < d, so a crossing exists.
  static TaskPose interpolate_to_distance(const TaskPose& far, const TaskPose& near,
                                          const Vec2& anchor, double d) {
    const Vec2 p0 = near.xy();
    const Vec2 dir = far.xy() - p0;
    const double len2 = dir.squaredNorm();
    if (len2 < 1e-24) return far;

    // || p0 + s*dir - anchor || = d, s in [0,1]; take the smallest valid root
    // (closest to the newer entry).
    const Vec2 rel = p0 - anchor;
    const double b = rel.dot(dir);
    const double c = rel.squaredNorm() - d * d;
    const double disc = b * b - len2 * c;
    double s = 1.0;
    if (disc >= 0.0) {
      const double root = (-b + std::sqrt(disc)) / len2;
      if (root >= 0.0 && root <= 1.0) s = root;
    }
    TaskPose out;
    out.position.head<2>() = p0 + s * dir;
    out.position.z() = near.position.z() + s * (far.position.z() - near.position.z());
    out.yaw = lerp_angle(near.yaw, far.yaw, s);
    return out;
  }

  std::size_t capacity_;
  std::deque<Entry> entries_;
};

/// Same walk as PoseHistory::lookback_by_distance, but when the history is too
/// short the pose is taken on a virtual straight tail extending behind the
/// oldest entry along its -X axis. Used while histories warm up so that the
/// distance contract holds from the first tick.
inline TaskPose lookback_with_virtual_tail(const PoseHistory& hist, const TaskPose& anchor,
                                           double d) {
  if (auto p = hist.lookback_by_distance(anchor, d)) return *p;
  if (hist.empty()) throw std::invalid_argument("lookback on empty history");

  const TaskPose& start = hist.oldest().pose;
  const Vec2 back(-std::cos(start.yaw), -std::sin(start.yaw));
  const Vec2 rel = start.xy() - anchor.xy();
  // || rel + s*back || = d with s >= 0; the larger root always exists since
  // ||rel|| < d here and ||back|| = 1.
  const double b = rel.dot(back);
  const double disc = b * b - (rel.squaredNorm() - d * d);
  const double s = -b + std::sqrt(std::max(0.0, disc));
  TaskPose out = start;
  out.position.head<2>() = start.xy() + s * back;
  return out;
}

}  // namespace pullnav
