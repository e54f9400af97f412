#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "pullnav/geometry.hpp"
#include "pullnav/world.hpp"

namespace pullnav {

enum class DriftMode { none, constant, sinusoidal, random_walk, subjects };

/// Lateral walking bias injected into the body velocity, expressed in the
/// body-lateral direction. `subjects` resolves to one of the concrete
/// scripts per seed at run setup.
struct DriftScript {
  DriftMode mode = DriftMode::none;
  double bias = 0.0;       // constant: m/s
  double amplitude = 0.0;  // sinusoidal: m/s
  double period = 20.0;    // sinusoidal: s
  double phase = 0.0;      // sinusoidal: rad
  double sigma = 0.0;      // random walk: m/s per sqrt(s)
  double cap = 0.12;       // random walk: reflecting bound on |bias|, m/s
  double walk_bias_state = 0.0;
};

/// Kinematic stand-in for a guided person: the hand rigidly follows the
/// robot hand, the arm acts as a linear spring anchored at the shoulder rest
/// pose, and the body pursues the pose that relaxes the arm.
struct HumanModel {
  Vec2 body = Vec2::Zero();
  Vec2 body_velocity = Vec2::Zero();
  double heading = 0.0;
  Vec2 hand = Vec2::Zero();  // horizontal position, lives at hand height

  Vec2 shoulder_offset = Vec2(0.15, 0.0);  // body frame
  double arm_reach = 0.45;
  double k_arm = 200.0;
  double preferred_speed = 1.05;
  double pursuit_gain = 1.5;  // 1/s
  double max_speed = 1.8;

  double stance_half_width = 0.12;
  double gait_amplitude = 0.12;
  double gait_frequency = 1.8;  // Hz
  double gait_phase = 0.0;

  DriftScript drift;

  // refreshed by human_step
  Vec2 leg_left = Vec2::Zero();
  Vec2 leg_right = Vec2::Zero();
  Vec2 arm_force_on_ee = Vec2::Zero();
  Vec2 hand_velocity = Vec2::Zero();  // low-passed, feeds the walking speed
  Vec2 prev_hand = Vec2::Zero();
  bool has_prev_hand = false;

  void validate() const {
    if (k_arm < 0.0) throw std::invalid_argument("arm stiffness must be non-negative");
    if (preferred_speed < 0.0) throw std::invalid_argument("preferred speed must be non-negative");
    if (pursuit_gain <= 0.0 || max_speed <= 0.0)
      throw std::invalid_argument("pursuit gain and max speed must be positive");
  }

  /// Where the hand sits when the arm is relaxed.
  Vec2 rest_hand() const {
    return body + rotate2(shoulder_offset + Vec2(arm_reach, 0.0), heading);
  }

  /// Places the body so the arm is relaxed for the given hand position.
  void snap_to_hand(const Vec2& hand_pos, double heading_) {
    heading = heading_;
    hand = hand_pos;
    body = hand_pos - rotate2(shoulder_offset + Vec2(arm_reach, 0.0), heading_);
    prev_hand = hand_pos;
    has_prev_hand = true;
    hand_velocity = Vec2::Zero();
    update_legs();
  }

  void update_legs() {
    const double swing = gait_amplitude * std::sin(gait_phase);
    leg_left = body + rotate2(Vec2(swing, stance_half_width), heading);
    leg_right = body + rotate2(Vec2(-swing, -stance_half_width), heading);
  }
};

inline double drift_bias(DriftScript& drift, double t, double dt, std::mt19937_64& rng) {
  switch (drift.mode) {
    case DriftMode::none:
      return 0.0;
    case DriftMode::constant:
      return drift.bias;
    case DriftMode::sinusoidal:
      return drift.amplitude * std::sin(2.0 * kPi * t / drift.period + drift.phase);
    case DriftMode::random_walk: {
      std::normal_distribution<double> step(0.0, drift.sigma * std::sqrt(dt));
      double b = drift.walk_bias_state + step(rng);
      if (b > drift.cap) b = 2.0 * drift.cap - b;  // reflect
      if (b < -drift.cap) b = -2.0 * drift.cap - b;
      drift.walk_bias_state = std::clamp(b, -drift.cap, drift.cap);
      return drift.walk_bias_state;
    }
    case DriftMode::subjects:
      throw std::logic_error("subjects drift must be resolved to a concrete script before stepping");
  }
  return 0.0;
}

/// Advances the human by one tick: the hand follows the end-effector, the
/// arm spring force is evaluated at the rest pose, and the body walks at the
/// hand velocity plus a pursuit of the relaxed-arm position plus the
/// scripted lateral bias. The velocity feed-forward lets the body keep pace
/// without a standing positional error.
inline void human_step(HumanModel& human, const Vec2& ee_position_xy, double t, double dt,
                       std::mt19937_64& rng) {
  human.hand = ee_position_xy;
  if (human.has_prev_hand) {
    const Vec2 raw = (human.hand - human.prev_hand) / dt;
    const double blend = dt / (0.05 + dt);
    human.hand_velocity += blend * (raw - human.hand_velocity);
  }
  human.prev_hand = human.hand;
  human.has_prev_hand = true;

  const Vec2 to_hand = human.hand - human.body;
  if (to_hand.norm() > 0.05) human.heading = std::atan2(to_hand.y(), to_hand.x());

  const Vec2 grip = rotate2(human.shoulder_offset + Vec2(human.arm_reach, 0.0), human.heading);
  human.arm_force_on_ee = human.k_arm * (human.body + grip - human.hand);

  const Vec2 pursuit_target = human.hand - grip;
  Vec2 v = human.hand_velocity + human.pursuit_gain * (pursuit_target - human.body);
  const double vn = v.norm();
  if (vn > human.preferred_speed) v *= human.preferred_speed / vn;

  const double bias = drift_bias(human.drift, t, dt, rng);
  v += bias * rotate2(Vec2(0.0, 1.0), human.heading);
  const double total = v.norm();
  if (total > human.max_speed) v *= human.max_speed / total;

  human.body_velocity = v;
  human.body += v * dt;

  const double speed_factor = std::min(1.0, v.norm() / 0.5);
  human.gait_phase += 2.0 * kPi * human.gait_frequency * dt * speed_factor;
  human.update_legs();
}

}  // namespace pullnav
