#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pullnav/geometry.hpp"

namespace pullnav {

/// Planar range scan with uniform angular spacing. Beams at max_range carry
/// no return.
struct LaserScan {
  PlanarPose sensor_pose;  // world frame
  double angle_min = -kPi;
  double angle_max = kPi;
  double max_range = 8.0;
  double timestamp = 0.0;
  std::vector<double> ranges;

  double angle_of(std::size_t i) const {
    if (ranges.size() < 2) throw std::invalid_argument("scan needs at least 2 beams");
    return angle_min + (angle_max - angle_min) * static_cast<double>(i) /
                           static_cast<double>(ranges.size() - 1);
  }
};

/// Angle/distance gate applied before clustering. An angle window with
/// lo > hi wraps through +-pi (e.g. [3pi/4, -3pi/4] selects the rear sector).
struct PassthroughConfig {
  double angle_lo = -kPi;
  double angle_hi = kPi;
  double range_lo = 0.05;
  double range_hi = 3.0;

  bool angle_in_window(double a) const {
    a = normalize_angle(a);
    if (angle_lo <= angle_hi) return a >= angle_lo && a <= angle_hi;
    return a >= angle_lo || a <= angle_hi;  // wrapped window
  }
  bool range_in_window(double r) const { return r >= range_lo && r <= range_hi; }

  void validate() const {
    if (range_lo > range_hi) throw std::invalid_argument("passthrough range window empty");
  }
};

struct ClusterParams {
  double eps = 0.08;
  std::size_t min_pts = 3;

  void validate() const {
    if (eps <= 0.0) throw std::invalid_argument("dbscan eps must be positive");
    if (min_pts < 2) throw std::invalid_argument("dbscan min_pts must be >= 2");
  }
};

/// Converts in-window beams to Cartesian points in the sensor (robot) frame.
/// Beams at max_range are dropped.
inline std::vector<Vec2> passthrough_filter(const LaserScan& scan, const PassthroughConfig& cfg) {
  cfg.validate();
  std::vector<Vec2> points;
  points.reserve(scan.ranges.size());
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    const double r = scan.ranges[i];
    if (r >= scan.max_range) continue;
    const double a = scan.angle_of(i);
    if (!cfg.angle_in_window(a) || !cfg.range_in_window(r)) continue;
    points.emplace_back(r * std::cos(a), r * std::sin(a));
  }
  return points;
}

struct DbscanResult {
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<std::size_t> noise;
  std::vector<int> labels;  // -1 noise, otherwise cluster index
};

/// Plain DBSCAN over 2D points. Neighborhoods are inclusive of the point
/// itself; clusters are expanded from seeds in index order with a FIFO queue,
/// so border points join the first cluster that reaches them and the output
/// is independent of point storage tricks.
inline DbscanResult dbscan(const std::vector<Vec2>& points, const ClusterParams& params) {
  params.validate();
  const std::size_t n = points.size();
  constexpr int kUnvisited = -2;
  DbscanResult out;
  out.labels.assign(n, kUnvisited);

  const double eps2 = params.eps * params.eps;
  auto neighbors_of = [&](std::size_t i) {
    std::vector<std::size_t> nb;
    for (std::size_t j = 0; j < n; ++j)
      if ((points[i] - points[j]).squaredNorm() <= eps2) nb.push_back(j);
    return nb;
  };

  int cluster_id = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.labels[i] != kUnvisited) continue;
    auto seeds = neighbors_of(i);
    if (seeds.size() < params.min_pts) {
      out.labels[i] = -1;
      continue;
    }
    out.labels[i] = cluster_id;
    for (std::size_t q = 0; q < seeds.size(); ++q) {
      const std::size_t j = seeds[q];
      if (out.labels[j] == -1) out.labels[j] = cluster_id;  // border claimed
      if (out.labels[j] != kUnvisited) continue;
      out.labels[j] = cluster_id;
      auto nb = neighbors_of(j);
      if (nb.size() >= params.min_pts) seeds.insert(seeds.end(), nb.begin(), nb.end());
    }
    ++cluster_id;
  }

  out.clusters.assign(static_cast<std::size_t>(cluster_id), {});
  for (std::size_t i = 0; i < n; ++i) {
    if (out.labels[i] < 0)
      out.noise.push_back(i);
    else
      out.clusters[static_cast<std::size_t>(out.labels[i])].push_back(i);
  }
  return out;
}

inline Vec2 cluster_centroid(const std::vector<Vec2>& points, const std::vector<std::size_t>& idx) {
  Vec2 c = Vec2::Zero();
  for (std::size_t i : idx) c += points[i];
  return c / static_cast<double>(idx.size());
}

struct TrackedCentroid {
  int id = 0;
  Vec2 position = Vec2::Zero();  // robot frame
  double last_seen = 0.0;
  int age = 0;
};

/// Averaged leg position in the sensor frame. Valid only when exactly two
/// healthy leg tracks contributed; theta is filled by the caller.
struct HumanEstimate {
  PlanarPose pose;
  bool valid = false;
  int leg_ids[2] = {-1, -1};
};

struct TrackerParams {
  double coherence = 0.2;     // max frame-to-frame centroid displacement
  double stale_after = 0.5;   // drop tracks unseen longer than this
  double min_leg_separation = 0.05;
  double max_leg_separation = 0.7;

  void validate() const {
    if (coherence <= 0.0) throw std::invalid_argument("coherence must be positive");
    if (stale_after <= 0.0) throw std::invalid_argument("stale_after must be positive");
  }
};

/// Frame-to-frame leg track association. Matching is greedy on the globally
/// nearest remaining (track, centroid) pair, gated by the coherence
/// threshold; with two targets this equals the optimal assignment.
class LegTracker {
 public:
  explicit LegTracker(TrackerParams params = {}) : params_(params) { params_.validate(); }

  const std::vector<TrackedCentroid>& tracks() const { return tracks_; }

  /// Feeds one frame of cluster centroids (robot frame). On the initial frame
  /// every centroid registers as a track. On the next frame unmatched
  /// centroids are filtered out before registering; afterwards they spawn new
  /// tracks only while fewer than two tracks are alive.
  void associate(const std::vector<Vec2>& centroids, double now) {
    // drop stale tracks first
    std::erase_if(tracks_, [&](const TrackedCentroid& t) {
      return now - t.last_seen > params_.stale_after;
    });

    std::vector<bool> track_used(tracks_.size(), false);
    std::vector<bool> centroid_used(centroids.size(), false);

    const std::size_t n_pairs = std::min(tracks_.size(), centroids.size());
    for (std::size_t it = 0; it < n_pairs; ++it) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t bt = 0, bc = 0;
      for (std::size_t t = 0; t < tracks_.size(); ++t) {
        if (track_used[t]) continue;
        for (std::size_t c = 0; c < centroids.size(); ++c) {
          if (centroid_used[c]) continue;
          const double dist = (tracks_[t].position - centroids[c]).norm();
          if (dist < best) {
            best = dist;
            bt = t;
            bc = c;
          }
        }
      }
      if (!std::isfinite(best) || best > params_.coherence) break;
      track_used[bt] = centroid_used[bc] = true;
      tracks_[bt].position = centroids[bc];
      tracks_[bt].last_seen = now;
      tracks_[bt].age += 1;
    }

    for (std::size_t c = 0; c < centroids.size(); ++c) {
      if (centroid_used[c]) continue;
      const bool may_register = frame_count_ == 0 || (frame_count_ > 1 && tracks_.size() < 2);
      if (may_register) tracks_.push_back({next_id_++, centroids[c], now, 1});
    }
    ++frame_count_;
  }

  /// Midpoint of the two leg tracks; invalid when the track count or the
  /// inter-leg distance does not look like a pair of legs.
  HumanEstimate human_pose_estimate() const {
    HumanEstimate est;
    if (tracks_.size() != 2) return est;
    const double sep = (tracks_[0].position - tracks_[1].position).norm();
    if (sep < params_.min_leg_separation || sep > params_.max_leg_separation) return est;
    const Vec2 mid = 0.5 * (tracks_[0].position + tracks_[1].position);
    est.pose = {mid.x(), mid.y(), 0.0};
    est.valid = true;
    est.leg_ids[0] = tracks_[0].id;
    est.leg_ids[1] = tracks_[1].id;
    return est;
  }

  void reset() {
    tracks_.clear();
    frame_count_ = 0;
  }

 private:
  TrackerParams params_;
  std::vector<TrackedCentroid> tracks_;
  long frame_count_ = 0;
  int next_id_ = 0;
};

/// One row per beam: time, index, angle, range.
inline void scan_to_csv(const LaserScan& scan, std::ostream& os) {
  os << "time,index,angle,range\n";
  char buf[128];
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%zu,%.17g,%.17g\n", scan.timestamp, i, scan.angle_of(i),
                  scan.ranges[i]);
    os << buf;
  }
}

/// Rebuilds a scan from the CSV produced by scan_to_csv. The sensor pose and
/// max_range are not part of the log and must be supplied by the caller.
inline LaserScan scan_from_csv(std::istream& is, double max_range) {
  LaserScan scan;
  scan.max_range = max_range;
  std::string line;
  std::getline(is, line);  // header
  double first_angle = 0.0, last_angle = 0.0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    double vals[4];
    for (int k = 0; k < 4; ++k) {
      if (!std::getline(row, cell, ',')) throw std::runtime_error("malformed scan CSV row");
      vals[k] = std::stod(cell);
    }
    scan.timestamp = vals[0];
    if (scan.ranges.empty()) first_angle = vals[2];
    last_angle = vals[2];
    scan.ranges.push_back(vals[3]);
  }
  if (scan.ranges.size() < 2) throw std::runtime_error("scan CSV needs at least 2 beams");
  scan.angle_min = first_angle;
  scan.angle_max = last_angle;
  return scan;
}

}  // namespace pullnav
