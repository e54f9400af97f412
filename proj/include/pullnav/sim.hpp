#pragma once

#include <Eigen/Cholesky>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pullnav/admittance.hpp"
#include "pullnav/geometry.hpp"
#include "pullnav/guidance.hpp"
#include "pullnav/human.hpp"
#include "pullnav/impedance.hpp"
#include "pullnav/metrics.hpp"
#include "pullnav/occupancy.hpp"
#include "pullnav/perception.hpp"
#include "pullnav/trace.hpp"
#include "pullnav/world.hpp"

namespace pullnav {

struct RobotParams {
  double reach_radius = 1.0;          // max horizontal EE distance from the base
  double footprint_half_width = 0.35;
};

struct ImpedanceConfig {
  double k_x = 1000.0;
  double k_z = 500.0;
  double damping_ratio = 0.7;
  double k_yaw = 30.0;
  double eps_motion = 1e-6;
};

struct PerceptionConfig {
  LidarConfig lidar;
  PassthroughConfig passthrough{2.0, -2.0, 0.5, 1.9};  // wrapped rear sector
  ClusterParams cluster;
  TrackerParams tracker;
  double noise_sigma = 0.005;
  int scan_period_ticks = 5;  // 20 Hz at the 100 Hz tick
};

struct GuidanceConfig {
  GuidanceDistances distances;
  PullingParams pulling;
  VirtualTorqueParams virtual_torque;
  double inflation = 0.55;        // planner clearance
  double replan_period = 0.5;     // s
  double waypoint_spacing = 0.3;  // m
  double y_filter_tau = 0.2;      // low-pass on y_adaptive, s
  double loss_grace = 0.3;        // s without a valid estimate before halting
};

struct SimOptions {
  double dt = 0.01;
  double max_duration = 90.0;
  double goal_tolerance = 0.3;
  double ext_force_gain = 1.0;  // human arm force into the admittance
  double grid_resolution = 0.05;
  std::size_t history_capacity = 10000;
  double history_min_spacing = 0.0005;  // pose decimation for history appends
  double leg_radius = 0.06;
};

/// Full closed-loop configuration. `adaptive == false` is the baseline:
/// the lateral stiffness k_y_hat is forced to zero.
struct SimConfig {
  World world;
  PlanarPose start;
  PlanarPose goal;
  RobotParams robot;
  ImpedanceConfig impedance;
  AdmittanceParams admittance;
  PerceptionConfig perception;
  GuidanceConfig guidance;
  HumanModel human;
  SimOptions sim;
  std::uint64_t seed = 1;
  bool adaptive = true;

  void validate() const {
    admittance.validate();
    guidance.distances.validate();
    guidance.pulling.validate();
    perception.lidar.validate();
    perception.passthrough.validate();
    perception.cluster.validate();
    perception.tracker.validate();
    human.validate();
    if (sim.dt <= 0.0 || sim.max_duration <= 0.0 || sim.goal_tolerance <= 0.0)
      throw std::invalid_argument("invalid sim timing options");
    if (sim.grid_resolution <= 0.0) throw std::invalid_argument("invalid grid resolution");
    if (perception.scan_period_ticks < 1) throw std::invalid_argument("scan period must be >= 1 tick");
    if (guidance.distances.d2 > robot.reach_radius)
      throw std::invalid_argument("d2 exceeds the arm reach radius");
    // histories must span the full lookback even at the decimation floor
    const double max_lookback = guidance.distances.d2 + guidance.distances.d3 + 1.0;
    if (static_cast<double>(sim.history_capacity) * sim.history_min_spacing < max_lookback)
      throw std::invalid_argument("pose history capacity cannot cover the lookback distance");
  }
};

/// The twelve scripted subject profiles backing batch experiments: four
/// constant lateral biases, four sinusoidal, four seeded random walks.
/// Seeds map cyclically onto the table.
inline DriftScript subject_profile(std::uint64_t seed) {
  const std::uint64_t idx = (seed == 0 ? 11 : (seed - 1) % 12);
  DriftScript d;
  switch (idx) {
    case 0: d.mode = DriftMode::constant; d.bias = 0.026; break;
    case 1: d.mode = DriftMode::constant; d.bias = -0.032; break;
    case 2: d.mode = DriftMode::constant; d.bias = 0.038; break;
    case 3: d.mode = DriftMode::constant; d.bias = -0.023; break;
    case 4: d.mode = DriftMode::sinusoidal; d.amplitude = 0.13; d.period = 21.0; d.phase = 0.0; break;
    case 5: d.mode = DriftMode::sinusoidal; d.amplitude = 0.15; d.period = 26.0; d.phase = kPi / 2; break;
    case 6: d.mode = DriftMode::sinusoidal; d.amplitude = 0.14; d.period = 18.0; d.phase = kPi; break;
    case 7: d.mode = DriftMode::sinusoidal; d.amplitude = 0.16; d.period = 24.0; d.phase = 3 * kPi / 2; break;
    case 8: d.mode = DriftMode::random_walk; d.sigma = 0.055; d.cap = 0.14; break;
    case 9: d.mode = DriftMode::random_walk; d.sigma = 0.07; d.cap = 0.14; break;
    case 10: d.mode = DriftMode::random_walk; d.sigma = 0.085; d.cap = 0.15; break;
    default: d.mode = DriftMode::random_walk; d.sigma = 0.1; d.cap = 0.15; break;
  }
  return d;
}

/// Quasi-static end-effector balance: the pose where the impedance spring
/// against X_d and the human arm spring against `anchor` cancel. Axes where
/// the stiffness is singular follow the anchor. The displacement from X_d is
/// clamped to `max_displacement`.
inline TaskPose ee_step(const TaskPose& X_d, const CartesianImpedance& imp, const Vec3& anchor,
                        double k_arm, double max_displacement = 0.4) {
  TaskPose out = X_d;
  if (k_arm > 0.0) {
    const Mat3 lhs = imp.K_t + k_arm * Mat3::Identity();
    out.position = lhs.ldlt().solve(imp.K_t * X_d.position + k_arm * anchor);
    const Vec3 disp = out.position - X_d.position;
    const double n = disp.norm();
    if (n > max_displacement) out.position = X_d.position + disp * (max_displacement / n);
  }
  return out;
}

/// Outcome of one closed-loop run.
struct RunResult {
  Trace trace;
  Metrics metrics;
  bool reached_goal = false;
};

/// Deterministic closed-loop world stepping all units in a fixed tick order:
/// scan -> tracker -> adaptive pulling -> guidance -> impedance retuning ->
/// virtual torques -> admittance -> base integration -> quasi-static arm ->
/// human -> histories -> trace.
class Simulation {
 public:
  explicit Simulation(SimConfig config)
      : cfg_(std::move(config)),
        base_hist_(cfg_.sim.history_capacity),
        ee_des_hist_(cfg_.sim.history_capacity),
        tracker_(cfg_.perception.tracker),
        rng_(cfg_.seed) {
    cfg_.validate();
    if (cfg_.human.drift.mode == DriftMode::subjects) {
      const auto resolved = subject_profile(cfg_.seed);
      cfg_.human.drift = resolved;
    }

    base_ = cfg_.start;
    grid_ = cfg_.world.derive_grid(cfg_.sim.grid_resolution, 0.0);
    planning_grid_ = inflate_for_planning(grid_, cfg_.guidance.inflation);
    safety_grid_ = grid_.inflate(cfg_.robot.footprint_half_width);
    plan_ = plan_waypoints_on_inflated(planning_grid_, base_, cfg_.goal,
                                       cfg_.guidance.waypoint_spacing);
    cursor_ = 0;

    const Vec2 back = -base_.heading();
    const GuidanceDistances& gd = cfg_.guidance.distances;
    TaskPose ee0;
    ee0.position << base_.x + gd.d2 * back.x(), base_.y + gd.d2 * back.y(), gd.hand_height;
    ee0.yaw = base_.theta;
    X_d_ = ee0;
    ee_actual_ = ee0;

    cfg_.human.snap_to_hand(ee0.xy(), base_.theta);

    base_hist_.append(0.0, TaskPose::from_planar(base_));
    ee_des_hist_.append(0.0, ee0);

    const Vec2 fwd = base_.heading();
    basis_ = motion_basis(Vec3::Zero(), Vec3(fwd.x(), fwd.y(), 0.0), basis_,
                          cfg_.impedance.eps_motion);
    trace_.dt = cfg_.sim.dt;
  }

  const Trace& trace() const { return trace_; }
  const SimConfig& config() const { return cfg_; }
  const PlanarPose& base_pose() const { return base_; }
  const HumanModel& human() const { return cfg_.human; }
  bool reached_goal() const { return reached_goal_; }
  double time() const { return static_cast<double>(tick_) * cfg_.sim.dt; }

  /// Runs one tick; returns false once the goal is reached or the time
  /// budget is exhausted.
  bool step() {
    const double dt = cfg_.sim.dt;
    const double t = time();
    TickRecord rec;
    rec.tick = tick_;
    rec.t = t;

    replan_if_due();
    const bool fresh_scan = run_perception_if_due(t);
    rec.scan_fresh = fresh_scan ? 1 : 0;
    rec.scan_points = last_scan_points_;
    rec.scan_clusters = last_scan_clusters_;

    // adaptive pulling on the held desired human pose (one tick old)
    PullingState pull;
    if (have_estimate_ && have_guidance_) {
      human_world_.theta = held_h_des_.theta;
      pull.p = pulling_vector(held_h_des_, human_world_);
      pull.p_sat = saturate(pull.p);
    }
    const bool lost = (t - last_valid_time_) > cfg_.guidance.loss_grace;
    if (lost) {
      pull.alpha_B = 0.0;  // hold position until the human is tracked again
    } else {
      pull.alpha_B = base_gain(pull.p_sat.x(), cfg_.guidance.pulling.d_stop);
      const double blend = dt / (cfg_.guidance.y_filter_tau + dt);
      y_adaptive_ += blend * (pull.p_sat.y() - y_adaptive_);
    }
    pull.y_adaptive = y_adaptive_;
    pull.k_y_hat = cfg_.adaptive ? lateral_stiffness(y_adaptive_, cfg_.guidance.pulling) : 0.0;

    // guidance
    GuidanceOutput out = guidance_step(plan_, base_, base_hist_, ee_des_hist_, y_adaptive_,
                                       cfg_.guidance.distances, cursor_);
    cursor_ = out.target_index;
    held_h_des_ = out.X_H_des;
    have_guidance_ = true;

    // impedance retuning follows the commanded desired-pose motion
    basis_ = motion_basis(X_d_.position, out.X_EE_des_hat.position, basis_,
                          cfg_.impedance.eps_motion);
    AxisGains gains;
    gains.k_x = cfg_.impedance.k_x;
    gains.k_y = pull.k_y_hat;
    gains.k_z = cfg_.impedance.k_z;
    gains.damping_ratio = cfg_.impedance.damping_ratio;
    const CartesianImpedance imp = compose_matrices(basis_, gains, cfg_.impedance.k_yaw);

    // base channel
    const BaseTorque tau_vir =
        virtual_torques(base_, out.X_B_target, cfg_.guidance.virtual_torque, pull.alpha_B);
    const Vec2 ext_base =
        rotate2(cfg_.human.arm_force_on_ee * cfg_.sim.ext_force_gain, -base_.theta);
    const BaseTorque tau_ext{ext_base.x(), ext_base.y(), 0.0};
    cmd_ = admittance_step(cfg_.admittance, cmd_, tau_vir, tau_ext);

    // the pose the controller acted on this tick; the integrated pose below
    // becomes the next tick's state
    const PlanarPose base_at_tick = base_;
    const double c = std::cos(base_.theta);
    const double s = std::sin(base_.theta);
    base_.x += dt * (cmd_.v_x * c - cmd_.v_y * s);
    base_.y += dt * (cmd_.v_x * s + cmd_.v_y * c);
    base_.theta = normalize_angle(base_.theta + dt * cmd_.omega);

    // arm channel: desired pose jumps to the offset guidance pose, the actual
    // pose settles against the human arm spring
    const Vec3 v_des = (out.X_EE_des_hat.position - X_d_.position) / dt;
    const double omega_des = angle_diff(out.X_EE_des_hat.yaw, X_d_.yaw) / dt;
    X_d_ = out.X_EE_des_hat;

    Vec3 anchor;
    anchor << cfg_.human.rest_hand().x(), cfg_.human.rest_hand().y(),
        cfg_.guidance.distances.hand_height;
    TaskPose ee_new = ee_step(X_d_, imp, anchor, cfg_.human.k_arm);
    clamp_to_reach(ee_new);
    const Vec3 v_act = (ee_new.position - ee_actual_.position) / dt;
    const double omega_act = angle_diff(ee_new.yaw, ee_actual_.yaw) / dt;
    const Wrench wrench = impedance_wrench(X_d_, ee_new, v_des, omega_des, v_act, omega_act, imp);
    ee_actual_ = ee_new;

    const Vec2 human_at_tick = cfg_.human.body;
    human_step(cfg_.human, ee_actual_.xy(), t, dt, rng_);

    append_history(base_hist_, (tick_ + 1) * dt, TaskPose::from_planar(base_));
    append_history(ee_des_hist_, (tick_ + 1) * dt, out.X_EE_des);

    // bookkeeping: poses as the controller saw them at this tick
    rec.base_x = base_at_tick.x; rec.base_y = base_at_tick.y; rec.base_yaw = base_at_tick.theta;
    rec.cmd_vx = cmd_.v_x; rec.cmd_vy = cmd_.v_y; rec.cmd_omega = cmd_.omega;
    rec.target_x = out.X_B_target.x; rec.target_y = out.X_B_target.y;
    rec.target_yaw = out.X_B_target.theta;
    rec.ee_des_x = out.X_EE_des.position.x(); rec.ee_des_y = out.X_EE_des.position.y();
    rec.ee_des_z = out.X_EE_des.position.z(); rec.ee_des_yaw = out.X_EE_des.yaw;
    rec.ee_hat_x = out.X_EE_des_hat.position.x(); rec.ee_hat_y = out.X_EE_des_hat.position.y();
    rec.ee_hat_z = out.X_EE_des_hat.position.z(); rec.ee_hat_yaw = out.X_EE_des_hat.yaw;
    rec.ee_x = ee_actual_.position.x(); rec.ee_y = ee_actual_.position.y();
    rec.ee_z = ee_actual_.position.z(); rec.ee_yaw = ee_actual_.yaw;
    rec.h_des_x = out.X_H_des.x; rec.h_des_y = out.X_H_des.y; rec.h_des_theta = out.X_H_des.theta;
    rec.h_est_x = human_world_.x; rec.h_est_y = human_world_.y;
    rec.h_est_valid = estimate_valid_ ? 1 : 0;
    rec.h_true_x = human_at_tick.x(); rec.h_true_y = human_at_tick.y();
    rec.p_x = pull.p.x(); rec.p_y = pull.p.y();
    rec.p_sat_x = pull.p_sat.x(); rec.p_sat_y = pull.p_sat.y();
    rec.alpha_b = pull.alpha_B; rec.y_adaptive = pull.y_adaptive; rec.k_y_hat = pull.k_y_hat;
    rec.tau_vir_fx = tau_vir.f_x; rec.tau_vir_fy = tau_vir.f_y; rec.tau_vir_mu = tau_vir.mu_z;
    rec.tau_ext_fx = tau_ext.f_x; rec.tau_ext_fy = tau_ext.f_y;
    rec.wrench_fx = wrench.force.x(); rec.wrench_fy = wrench.force.y();
    rec.wrench_fz = wrench.force.z(); rec.wrench_yaw = wrench.yaw_torque;
    rec.arm_fx = cfg_.human.arm_force_on_ee.x(); rec.arm_fy = cfg_.human.arm_force_on_ee.y();
    rec.grid_violation = safety_grid_.occupied_at(base_.position()) ? 1 : 0;
    trace_.ticks.push_back(rec);

    ++tick_;
    if (base_.distance_to(cfg_.goal) <= cfg_.sim.goal_tolerance) {
      reached_goal_ = true;
      return false;
    }
    return time() < cfg_.sim.max_duration;
  }

 private:
  void replan_if_due() {
    const long period = std::max(1L, static_cast<long>(cfg_.guidance.replan_period / cfg_.sim.dt));
    if (tick_ == 0 || tick_ % period != 0) return;
    if (cfg_.world.has_moving_obstacles()) {
      grid_ = cfg_.world.derive_grid(cfg_.sim.grid_resolution, time());
      planning_grid_ = inflate_for_planning(grid_, cfg_.guidance.inflation);
      safety_grid_ = grid_.inflate(cfg_.robot.footprint_half_width);
    }
    plan_ = plan_waypoints_on_inflated(planning_grid_, base_, cfg_.goal,
                                       cfg_.guidance.waypoint_spacing);
    cursor_ = 0;
  }

  bool run_perception_if_due(double t) {
    if (tick_ % cfg_.perception.scan_period_ticks != 0) return false;

    std::vector<Disc> legs{{cfg_.human.leg_left, cfg_.sim.leg_radius},
                           {cfg_.human.leg_right, cfg_.sim.leg_radius}};
    const LaserScan scan =
        raycast(cfg_.world, base_, cfg_.perception.lidar, cfg_.perception.noise_sigma, rng_, t, legs);
    const auto points = passthrough_filter(scan, cfg_.perception.passthrough);
    const auto db = dbscan(points, cfg_.perception.cluster);

    std::vector<Vec2> centroids;
    centroids.reserve(db.clusters.size());
    for (const auto& cluster : db.clusters) centroids.push_back(cluster_centroid(points, cluster));
    tracker_.associate(centroids, t);
    const HumanEstimate est = tracker_.human_pose_estimate();

    last_scan_points_ = static_cast<int>(points.size());
    last_scan_clusters_ = static_cast<int>(db.clusters.size());
    estimate_valid_ = est.valid;
    if (est.valid) {
      const Vec2 world_xy = base_.position() + rotate2(est.pose.position(), base_.theta);
      human_world_.x = world_xy.x();
      human_world_.y = world_xy.y();
      have_estimate_ = true;
      last_valid_time_ = t;
    }
    return true;
  }

  void clamp_to_reach(TaskPose& ee) const {
    const Vec2 rel = ee.xy() - base_.position();
    const double n = rel.norm();
    if (n > cfg_.robot.reach_radius)
      ee.position.head<2>() = base_.position() + rel * (cfg_.robot.reach_radius / n);
  }

  void append_history(PoseHistory& hist, double t, const TaskPose& pose) const {
    if (!hist.empty()) {
      const TaskPose& last = hist.newest().pose;
      if ((pose.xy() - last.xy()).norm() < cfg_.sim.history_min_spacing &&
          std::abs(angle_diff(pose.yaw, last.yaw)) < 1e-3)
        return;
    }
    hist.append(t, pose);
  }

  SimConfig cfg_;
  PlanarPose base_;
  BaseCommand cmd_;
  TaskPose ee_actual_;
  TaskPose X_d_;
  StiffnessBasis basis_;
  PoseHistory base_hist_;
  PoseHistory ee_des_hist_;
  LegTracker tracker_;
  std::mt19937_64 rng_;

  OccupancyGrid grid_;
  OccupancyGrid planning_grid_;
  OccupancyGrid safety_grid_;
  WaypointPlan plan_;
  std::size_t cursor_ = 0;

  PlanarPose human_world_;
  bool have_estimate_ = false;
  bool estimate_valid_ = false;
  double last_valid_time_ = 0.0;
  int last_scan_points_ = 0;
  int last_scan_clusters_ = 0;

  PlanarPose held_h_des_;
  bool have_guidance_ = false;
  double y_adaptive_ = 0.0;

  Trace trace_;
  long tick_ = 0;
  bool reached_goal_ = false;
};

/// Runs a configuration to completion. Bitwise deterministic for a given
/// config and seed.
inline RunResult run(const SimConfig& config) {
  Simulation sim(config);
  while (sim.step()) {
  }
  RunResult result;
  result.trace = sim.trace();
  result.metrics = compute_metrics(result.trace, config.robot.footprint_half_width);
  result.reached_goal = sim.reached_goal();
  return result;
}

}  // namespace pullnav
