#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pullnav {

/// Virtual inertia/damping of the mobile platform (x, y, yaw channels) and
/// the controller sampling time.
struct AdmittanceParams {
  double inertia[3] = {10.0, 10.0, 5.0};
  double damping[3] = {80.0, 80.0, 40.0};
  double t_s = 0.01;
  double velocity_limit[3] = {1.2, 1.2, 1.0};

  void validate() const {
    for (int i = 0; i < 3; ++i) {
      if (inertia[i] <= 0.0 || damping[i] <= 0.0)
        throw std::invalid_argument("admittance inertia/damping must be positive");
      if (velocity_limit[i] <= 0.0)
        throw std::invalid_argument("admittance velocity limits must be positive");
    }
    if (t_s <= 0.0) throw std::invalid_argument("sampling time must be positive");
  }
};

/// Planar force/torque driving the base: f_x, f_y in N, mu_z in N*m.
struct BaseTorque {
  double f_x = 0.0;
  double f_y = 0.0;
  double mu_z = 0.0;

  BaseTorque operator+(const BaseTorque& o) const { return {f_x + o.f_x, f_y + o.f_y, mu_z + o.mu_z}; }
};

/// Desired base velocity in the base frame.
struct BaseCommand {
  double v_x = 0.0;
  double v_y = 0.0;
  double omega = 0.0;
};

/// One step of the discrete admittance: per axis,
/// v = (M/t_s + D)^-1 (tau_vir + tau_ext + (M/t_s) * prev), then clamped to
/// the configured velocity limits.
inline BaseCommand admittance_step(const AdmittanceParams& params, const BaseCommand& prev,
                                   const BaseTorque& tau_vir, const BaseTorque& tau_ext) {
  params.validate();
  const double tau[3] = {tau_vir.f_x + tau_ext.f_x, tau_vir.f_y + tau_ext.f_y,
                         tau_vir.mu_z + tau_ext.mu_z};
  const double prev_v[3] = {prev.v_x, prev.v_y, prev.omega};
  double v[3];
  for (int i = 0; i < 3; ++i) {
    const double m_over_ts = params.inertia[i] / params.t_s;
    v[i] = (tau[i] + m_over_ts * prev_v[i]) / (m_over_ts + params.damping[i]);
    v[i] = std::clamp(v[i], -params.velocity_limit[i], params.velocity_limit[i]);
  }
  return {v[0], v[1], v[2]};
}

}  // namespace pullnav
