#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "pullnav/sim.hpp"

namespace pullnav {

struct ScenarioError : std::runtime_error {
  explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

using nlohmann::json;

inline double num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ScenarioError(std::string("expected number at ") + key);
  return j[key].get<double>();
}

inline Vec2 vec2(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ScenarioError("expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline PlanarPose pose(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ScenarioError("expected [x, y, theta]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline DriftMode drift_mode(const std::string& name) {
  if (name == "none") return DriftMode::none;
  if (name == "constant") return DriftMode::constant;
  if (name == "sinusoidal") return DriftMode::sinusoidal;
  if (name == "random_walk") return DriftMode::random_walk;
  if (name == "subjects") return DriftMode::subjects;
  throw ScenarioError("unknown drift mode: " + name);
}

inline World parse_world(const json& j) {
  World world;
  if (!j.contains("bounds")) throw ScenarioError("world.bounds is required");
  const auto& b = j["bounds"];
  if (!b.is_array() || b.size() != 4) throw ScenarioError("world.bounds must be [x0, y0, x1, y1]");
  world.bounds_min = {b[0].get<double>(), b[1].get<double>()};
  world.bounds_max = {b[2].get<double>(), b[3].get<double>()};

  if (j.contains("segments"))
    for (const auto& s : j["segments"]) {
      if (!s.is_array() || s.size() != 4) throw ScenarioError("segment must be [ax, ay, bx, by]");
      world.segments.push_back({{s[0].get<double>(), s[1].get<double>()},
                                {s[2].get<double>(), s[3].get<double>()}});
    }
  if (j.contains("discs"))
    for (const auto& d : j["discs"]) {
      if (!d.is_array() || d.size() != 3) throw ScenarioError("disc must be [cx, cy, r]");
      world.discs.push_back({{d[0].get<double>(), d[1].get<double>()}, d[2].get<double>()});
    }
  if (j.contains("moving_discs"))
    for (const auto& d : j["moving_discs"]) {
      MovingDisc m;
      m.center0 = vec2(d.at("center"));
      m.radius = d.at("radius").get<double>();
      m.velocity = vec2(d.at("velocity"));
      world.moving_discs.push_back(m);
    }
  return world;
}

}  // namespace detail

/// Builds a SimConfig from a scenario JSON object. Missing blocks keep the
/// built-in defaults; present values override them.
inline SimConfig scenario_from_json(const nlohmann::json& j) {
  using detail::num;
  SimConfig cfg;

  try {
    if (!j.contains("world")) throw ScenarioError("scenario needs a world block");
    cfg.world = detail::parse_world(j["world"]);
    if (!j.contains("start") || !j.contains("goal"))
      throw ScenarioError("scenario needs start and goal poses");
    cfg.start = detail::pose(j["start"]);
    cfg.goal = detail::pose(j["goal"]);

    if (j.contains("robot")) {
      const auto& r = j["robot"];
      cfg.robot.reach_radius = num(r, "reach_radius", cfg.robot.reach_radius);
      cfg.robot.footprint_half_width = num(r, "footprint_half_width", cfg.robot.footprint_half_width);
    }
    if (j.contains("impedance")) {
      const auto& r = j["impedance"];
      cfg.impedance.k_x = num(r, "k_x", cfg.impedance.k_x);
      cfg.impedance.k_z = num(r, "k_z", cfg.impedance.k_z);
      cfg.impedance.damping_ratio = num(r, "damping_ratio", cfg.impedance.damping_ratio);
      cfg.impedance.k_yaw = num(r, "k_yaw", cfg.impedance.k_yaw);
      cfg.impedance.eps_motion = num(r, "eps_motion", cfg.impedance.eps_motion);
    }
    if (j.contains("admittance")) {
      const auto& r = j["admittance"];
      for (int i = 0; i < 3; ++i) {
        if (r.contains("inertia")) cfg.admittance.inertia[i] = r["inertia"].at(i).get<double>();
        if (r.contains("damping")) cfg.admittance.damping[i] = r["damping"].at(i).get<double>();
        if (r.contains("velocity_limits"))
          cfg.admittance.velocity_limit[i] = r["velocity_limits"].at(i).get<double>();
      }
      cfg.admittance.t_s = num(r, "t_s", cfg.admittance.t_s);
    }
    if (j.contains("virtual_torque")) {
      const auto& r = j["virtual_torque"];
      cfg.guidance.virtual_torque.f_des_x = num(r, "f_des_x", cfg.guidance.virtual_torque.f_des_x);
      cfg.guidance.virtual_torque.f_des_y = num(r, "f_des_y", cfg.guidance.virtual_torque.f_des_y);
      cfg.guidance.virtual_torque.f_des_yaw =
          num(r, "f_des_yaw", cfg.guidance.virtual_torque.f_des_yaw);
      if (r.contains("ccw_positive_yaw"))
        cfg.guidance.virtual_torque.ccw_positive_yaw = r["ccw_positive_yaw"].get<bool>();
    }
    if (j.contains("perception")) {
      const auto& r = j["perception"];
      cfg.perception.lidar.n_beams =
          static_cast<std::size_t>(num(r, "beams", static_cast<double>(cfg.perception.lidar.n_beams)));
      cfg.perception.lidar.angle_min = num(r, "angle_min", cfg.perception.lidar.angle_min);
      cfg.perception.lidar.angle_max = num(r, "angle_max", cfg.perception.lidar.angle_max);
      cfg.perception.lidar.max_range = num(r, "max_range", cfg.perception.lidar.max_range);
      cfg.perception.noise_sigma = num(r, "noise_sigma", cfg.perception.noise_sigma);
      cfg.perception.scan_period_ticks =
          static_cast<int>(num(r, "scan_period_ticks", cfg.perception.scan_period_ticks));
      if (r.contains("passthrough")) {
        const auto& p = r["passthrough"];
        if (p.contains("angle")) {
          cfg.perception.passthrough.angle_lo = p["angle"].at(0).get<double>();
          cfg.perception.passthrough.angle_hi = p["angle"].at(1).get<double>();
        }
        if (p.contains("range")) {
          cfg.perception.passthrough.range_lo = p["range"].at(0).get<double>();
          cfg.perception.passthrough.range_hi = p["range"].at(1).get<double>();
        }
      }
      if (r.contains("dbscan")) {
        cfg.perception.cluster.eps = num(r["dbscan"], "eps", cfg.perception.cluster.eps);
        cfg.perception.cluster.min_pts = static_cast<std::size_t>(
            num(r["dbscan"], "min_pts", static_cast<double>(cfg.perception.cluster.min_pts)));
      }
      if (r.contains("tracker")) {
        const auto& tr = r["tracker"];
        cfg.perception.tracker.coherence = num(tr, "coherence", cfg.perception.tracker.coherence);
        cfg.perception.tracker.stale_after = num(tr, "stale_after", cfg.perception.tracker.stale_after);
        cfg.perception.tracker.min_leg_separation =
            num(tr, "min_leg_separation", cfg.perception.tracker.min_leg_separation);
        cfg.perception.tracker.max_leg_separation =
            num(tr, "max_leg_separation", cfg.perception.tracker.max_leg_separation);
      }
    }
    if (j.contains("guidance")) {
      const auto& r = j["guidance"];
      cfg.guidance.distances.d1 = num(r, "d1", cfg.guidance.distances.d1);
      cfg.guidance.distances.d2 = num(r, "d2", cfg.guidance.distances.d2);
      cfg.guidance.distances.d3 = num(r, "d3", cfg.guidance.distances.d3);
      cfg.guidance.distances.hand_height = num(r, "hand_height", cfg.guidance.distances.hand_height);
      cfg.guidance.distances.laser_height =
          num(r, "laser_height", cfg.guidance.distances.laser_height);
      cfg.guidance.inflation = num(r, "inflation", cfg.guidance.inflation);
      cfg.guidance.replan_period = num(r, "replan_period", cfg.guidance.replan_period);
      cfg.guidance.waypoint_spacing = num(r, "waypoint_spacing", cfg.guidance.waypoint_spacing);
      cfg.guidance.y_filter_tau = num(r, "y_filter_tau", cfg.guidance.y_filter_tau);
      cfg.guidance.loss_grace = num(r, "loss_grace", cfg.guidance.loss_grace);
      if (r.contains("pulling")) {
        const auto& p = r["pulling"];
        cfg.guidance.pulling.d_stop = num(p, "d_stop", cfg.guidance.pulling.d_stop);
        cfg.guidance.pulling.eta = num(p, "eta", cfg.guidance.pulling.eta);
        cfg.guidance.pulling.zeta_l = num(p, "zeta_l", cfg.guidance.pulling.zeta_l);
        cfg.guidance.pulling.gamma = num(p, "gamma", cfg.guidance.pulling.gamma);
        cfg.guidance.pulling.kappa = num(p, "kappa", cfg.guidance.pulling.kappa);
      }
    }
    if (j.contains("human")) {
      const auto& r = j["human"];
      cfg.human.k_arm = num(r, "k_arm", cfg.human.k_arm);
      cfg.human.preferred_speed = num(r, "preferred_speed", cfg.human.preferred_speed);
      cfg.human.pursuit_gain = num(r, "pursuit_gain", cfg.human.pursuit_gain);
      cfg.human.max_speed = num(r, "max_speed", cfg.human.max_speed);
      cfg.human.arm_reach = num(r, "arm_reach", cfg.human.arm_reach);
      if (r.contains("shoulder_offset")) cfg.human.shoulder_offset = detail::vec2(r["shoulder_offset"]);
      cfg.human.stance_half_width = num(r, "stance_half_width", cfg.human.stance_half_width);
      cfg.human.gait_amplitude = num(r, "gait_amplitude", cfg.human.gait_amplitude);
      cfg.human.gait_frequency = num(r, "gait_frequency", cfg.human.gait_frequency);
      if (r.contains("drift")) {
        const auto& d = r["drift"];
        cfg.human.drift.mode = detail::drift_mode(d.at("mode").get<std::string>());
        cfg.human.drift.bias = num(d, "bias", cfg.human.drift.bias);
        cfg.human.drift.amplitude = num(d, "amplitude", cfg.human.drift.amplitude);
        cfg.human.drift.period = num(d, "period", cfg.human.drift.period);
        cfg.human.drift.phase = num(d, "phase", cfg.human.drift.phase);
        cfg.human.drift.sigma = num(d, "sigma", cfg.human.drift.sigma);
        cfg.human.drift.cap = num(d, "cap", cfg.human.drift.cap);
      }
    }
    if (j.contains("sim")) {
      const auto& r = j["sim"];
      cfg.sim.dt = num(r, "dt", cfg.sim.dt);
      cfg.sim.max_duration = num(r, "max_duration", cfg.sim.max_duration);
      cfg.sim.goal_tolerance = num(r, "goal_tolerance", cfg.sim.goal_tolerance);
      cfg.sim.ext_force_gain = num(r, "ext_force_gain", cfg.sim.ext_force_gain);
      cfg.sim.grid_resolution = num(r, "grid_resolution", cfg.sim.grid_resolution);
      cfg.sim.history_capacity = static_cast<std::size_t>(
          num(r, "history_capacity", static_cast<double>(cfg.sim.history_capacity)));
      cfg.sim.leg_radius = num(r, "leg_radius", cfg.sim.leg_radius);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("scenario JSON error: ") + e.what());
  }

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("invalid scenario: ") + e.what());
  }
  return cfg;
}

inline SimConfig load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ScenarioError("cannot open scenario file: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("scenario parse error: ") + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace pullnav
