#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>

#include "pullnav/geometry.hpp"

namespace pullnav {

using Mat3 = Eigen::Matrix3d;

/// Orthonormal basis of the impedance ellipsoid. Columns are the motion axis,
/// the lateral axis (horizontal, perpendicular to motion) and their cross
/// product.
struct StiffnessBasis {
  Mat3 U = Mat3::Identity();
};

/// Stiffness targets projected on the basis axes, plus the shared damping
/// ratio used as d_i = 2*zeta*sqrt(k_i).
struct AxisGains {
  double k_x = 1000.0;
  double k_y = 0.0;
  double k_z = 500.0;
  double damping_ratio = 0.7;

  void validate() const {
    if (k_x < 0.0 || k_y < 0.0 || k_z < 0.0)
      throw std::invalid_argument("stiffness gains must be non-negative");
    if (damping_ratio <= 0.0 || damping_ratio > 1.0)
      throw std::invalid_argument("damping ratio must be in (0, 1]");
  }
};

/// Translational stiffness/damping matrices plus a scalar yaw spring.
struct CartesianImpedance {
  Mat3 K_t = Mat3::Zero();
  Mat3 D_t = Mat3::Zero();
  double k_yaw = 30.0;
  double d_yaw = 2.0 * 0.7 * std::sqrt(30.0);
};

struct Wrench {
  Vec3 force = Vec3::Zero();
  double yaw_torque = 0.0;
};

/// Rebuilds the basis from the latest desired-position step. The motion axis
/// is x_curr - x_prev, the lateral axis its horizontal left-normal, the third
/// axis their cross product. Steps shorter than eps_motion (or with a
/// degenerate horizontal projection) keep the previous basis to avoid chatter
/// while the desired pose is stationary.
inline StiffnessBasis motion_basis(const Vec3& x_prev, const Vec3& x_curr,
                                   const StiffnessBasis& prev, double eps_motion = 1e-6) {
  if (eps_motion <= 0.0) throw std::invalid_argument("eps_motion must be positive");
  const Vec3 a_x = x_curr - x_prev;
  if (a_x.norm() < eps_motion || a_x.head<2>().norm() < eps_motion) return prev;

  const Vec3 a_y(-a_x.y(), a_x.x(), 0.0);
  const Vec3 a_z = a_x.cross(a_y);
  StiffnessBasis out;
  out.U.col(0) = a_x.normalized();
  out.U.col(1) = a_y.normalized();
  out.U.col(2) = a_z.normalized();
  return out;
}

/// K_t = U diag(k) U^T, D_t = U diag(2*zeta*sqrt(k)) U^T; yaw terms from
/// configuration.
inline CartesianImpedance compose_matrices(const StiffnessBasis& basis, const AxisGains& gains,
                                           double k_yaw = 30.0) {
  gains.validate();
  const Vec3 k(gains.k_x, gains.k_y, gains.k_z);
  Vec3 d;
  for (int i = 0; i < 3; ++i) d[i] = 2.0 * gains.damping_ratio * std::sqrt(k[i]);

  CartesianImpedance imp;
  imp.K_t = basis.U * k.asDiagonal() * basis.U.transpose();
  imp.D_t = basis.U * d.asDiagonal() * basis.U.transpose();
  imp.k_yaw = k_yaw;
  imp.d_yaw = 2.0 * gains.damping_ratio * std::sqrt(k_yaw);
  return imp;
}

/// Restoring wrench at the end-effector:
/// force = K_t (x_d - x) + D_t (v_d - v), yaw torque from the scalar spring.
inline Wrench impedance_wrench(const TaskPose& X_d, const TaskPose& X, const Vec3& V_d,
                               double omega_d, const Vec3& V, double omega,
                               const CartesianImpedance& imp) {
  Wrench w;
  w.force = imp.K_t * (X_d.position - X.position) + imp.D_t * (V_d - V);
  w.yaw_torque = imp.k_yaw * angle_diff(X_d.yaw, X.yaw) + imp.d_yaw * (omega_d - omega);
  return w;
}

}  // namespace pullnav
