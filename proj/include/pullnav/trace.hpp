#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pullnav {

/// One simulation tick, flattened for CSV. Column order is fixed and
/// documented in the README; keep kTraceHeader in sync with to_csv.
struct TickRecord {
  long tick = 0;
  double t = 0.0;
  double base_x = 0.0, base_y = 0.0, base_yaw = 0.0;
  double cmd_vx = 0.0, cmd_vy = 0.0, cmd_omega = 0.0;
  double target_x = 0.0, target_y = 0.0, target_yaw = 0.0;
  double ee_des_x = 0.0, ee_des_y = 0.0, ee_des_z = 0.0, ee_des_yaw = 0.0;
  double ee_hat_x = 0.0, ee_hat_y = 0.0, ee_hat_z = 0.0, ee_hat_yaw = 0.0;
  double ee_x = 0.0, ee_y = 0.0, ee_z = 0.0, ee_yaw = 0.0;
  double h_des_x = 0.0, h_des_y = 0.0, h_des_theta = 0.0;
  double h_est_x = 0.0, h_est_y = 0.0;
  int h_est_valid = 0;
  double h_true_x = 0.0, h_true_y = 0.0;
  double p_x = 0.0, p_y = 0.0, p_sat_x = 0.0, p_sat_y = 0.0;
  double alpha_b = 1.0, y_adaptive = 0.0, k_y_hat = 0.0;
  double tau_vir_fx = 0.0, tau_vir_fy = 0.0, tau_vir_mu = 0.0;
  double tau_ext_fx = 0.0, tau_ext_fy = 0.0;
  double wrench_fx = 0.0, wrench_fy = 0.0, wrench_fz = 0.0, wrench_yaw = 0.0;
  double arm_fx = 0.0, arm_fy = 0.0;
  int scan_points = 0, scan_clusters = 0, scan_fresh = 0;
  int grid_violation = 0;
};

inline constexpr const char* kTraceHeader =
    "tick,t,base_x,base_y,base_yaw,cmd_vx,cmd_vy,cmd_omega,"
    "target_x,target_y,target_yaw,"
    "ee_des_x,ee_des_y,ee_des_z,ee_des_yaw,"
    "ee_hat_x,ee_hat_y,ee_hat_z,ee_hat_yaw,"
    "ee_x,ee_y,ee_z,ee_yaw,"
    "h_des_x,h_des_y,h_des_theta,"
    "h_est_x,h_est_y,h_est_valid,h_true_x,h_true_y,"
    "p_x,p_y,p_sat_x,p_sat_y,alpha_b,y_adaptive,k_y_hat,"
    "tau_vir_fx,tau_vir_fy,tau_vir_mu,tau_ext_fx,tau_ext_fy,"
    "wrench_fx,wrench_fy,wrench_fz,wrench_yaw,"
    "arm_fx,arm_fy,scan_points,scan_clusters,scan_fresh,grid_violation";

/// Full per-tick time series of one run.
struct Trace {
  double dt = 0.01;
  std::vector<TickRecord> ticks;
};

inline void trace_to_csv(const Trace& trace, std::ostream& os) {
  os << kTraceHeader << '\n';
  char buf[2048];
  for (const auto& r : trace.ticks) {
    std::snprintf(
        buf, sizeof(buf),
        "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
        "%.17g,%.17g,%.17g,"
        "%.17g,%.17g,%.17g,%.17g,"
        "%.17g,%.17g,%.17g,%.17g,"
        "%.17g,%.17g,%.17g,%.17g,"
        "%.17g,%.17g,%.17g,"
        "%.17g,%.17g,%d,%.17g,%.17g,"
        "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
        "%.17g,%.17g,%.17g,%.17g,%.17g,"
        "%.17g,%.17g,%.17g,%.17g,"
        "%.17g,%.17g,%d,%d,%d,%d\n",
        r.tick, r.t, r.base_x, r.base_y, r.base_yaw, r.cmd_vx, r.cmd_vy, r.cmd_omega, r.target_x,
        r.target_y, r.target_yaw, r.ee_des_x, r.ee_des_y, r.ee_des_z, r.ee_des_yaw, r.ee_hat_x,
        r.ee_hat_y, r.ee_hat_z, r.ee_hat_yaw, r.ee_x, r.ee_y, r.ee_z, r.ee_yaw, r.h_des_x,
        r.h_des_y, r.h_des_theta, r.h_est_x, r.h_est_y, r.h_est_valid, r.h_true_x, r.h_true_y,
        r.p_x, r.p_y, r.p_sat_x, r.p_sat_y, r.alpha_b, r.y_adaptive, r.k_y_hat, r.tau_vir_fx,
        r.tau_vir_fy, r.tau_vir_mu, r.tau_ext_fx, r.tau_ext_fy, r.wrench_fx, r.wrench_fy,
        r.wrench_fz, r.wrench_yaw, r.arm_fx, r.arm_fy, r.scan_points, r.scan_clusters,
        r.scan_fresh, r.grid_violation);
    os << buf;
  }
}

/// Parses the CSV written by trace_to_csv. dt is recovered from the first
/// two rows (single-row traces keep the given fallback).
inline Trace trace_from_csv(std::istream& is, double dt_fallback = 0.01) {
  Trace trace;
  trace.dt = dt_fallback;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("trace CSV: empty file");
  if (line != kTraceHeader) throw std::runtime_error("trace CSV: unexpected header");

  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> vals;
    vals.reserve(53);
    while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != 53) throw std::runtime_error("trace CSV: bad column count");

    TickRecord r;
    std::size_t i = 0;
    r.tick = static_cast<long>(vals[i++]);
    r.t = vals[i++];
    r.base_x = vals[i++]; r.base_y = vals[i++]; r.base_yaw = vals[i++];
    r.cmd_vx = vals[i++]; r.cmd_vy = vals[i++]; r.cmd_omega = vals[i++];
    r.target_x = vals[i++]; r.target_y = vals[i++]; r.target_yaw = vals[i++];
    r.ee_des_x = vals[i++]; r.ee_des_y = vals[i++]; r.ee_des_z = vals[i++]; r.ee_des_yaw = vals[i++];
    r.ee_hat_x = vals[i++]; r.ee_hat_y = vals[i++]; r.ee_hat_z = vals[i++]; r.ee_hat_yaw = vals[i++];
    r.ee_x = vals[i++]; r.ee_y = vals[i++]; r.ee_z = vals[i++]; r.ee_yaw = vals[i++];
    r.h_des_x = vals[i++]; r.h_des_y = vals[i++]; r.h_des_theta = vals[i++];
    r.h_est_x = vals[i++]; r.h_est_y = vals[i++];
    r.h_est_valid = static_cast<int>(vals[i++]);
    r.h_true_x = vals[i++]; r.h_true_y = vals[i++];
    r.p_x = vals[i++]; r.p_y = vals[i++]; r.p_sat_x = vals[i++]; r.p_sat_y = vals[i++];
    r.alpha_b = vals[i++]; r.y_adaptive = vals[i++]; r.k_y_hat = vals[i++];
    r.tau_vir_fx = vals[i++]; r.tau_vir_fy = vals[i++]; r.tau_vir_mu = vals[i++];
    r.tau_ext_fx = vals[i++]; r.tau_ext_fy = vals[i++];
    r.wrench_fx = vals[i++]; r.wrench_fy = vals[i++]; r.wrench_fz = vals[i++]; r.wrench_yaw = vals[i++];
    r.arm_fx = vals[i++]; r.arm_fy = vals[i++];
    r.scan_points = static_cast<int>(vals[i++]); r.scan_clusters = static_cast<int>(vals[i++]);
    r.scan_fresh = static_cast<int>(vals[i++]); r.grid_violation = static_cast<int>(vals[i++]);
    trace.ticks.push_back(r);
  }
  if (trace.ticks.size() >= 2) trace.dt = trace.ticks[1].t - trace.ticks[0].t;
  return trace;
}

}  // namespace pullnav
