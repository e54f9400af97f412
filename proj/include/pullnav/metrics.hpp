#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pullnav/trace.hpp"

namespace pullnav {

struct EmptyTraceError : std::runtime_error {
  EmptyTraceError() : std::runtime_error("cannot compute metrics of an empty trace") {}
};

/// Experiment statistics of one run. Deviation statistics are taken over
/// ticks with a valid human estimate.
struct Metrics {
  double mean_abs_py = 0.0;
  double max_abs_py = 0.0;
  double exceedance = 0.0;  // fraction of valid ticks with |p_y| > footprint half-width
  double completion_s = 0.0;
  double path_length_m = 0.0;
  long tracking_loss_ticks = 0;
  long grid_violations = 0;
  long ticks = 0;
  long valid_ticks = 0;
  double footprint_half_width = 0.35;
};

inline Metrics compute_metrics(const Trace& trace, double footprint_half_width) {
  if (trace.ticks.empty()) throw EmptyTraceError{};
  if (footprint_half_width <= 0.0)
    throw std::invalid_argument("footprint half-width must be positive");

  Metrics m;
  m.footprint_half_width = footprint_half_width;
  m.ticks = static_cast<long>(trace.ticks.size());
  m.completion_s = trace.ticks.back().t + trace.dt;

  double sum_py = 0.0;
  long exceed = 0;
  for (std::size_t i = 0; i < trace.ticks.size(); ++i) {
    const TickRecord& r = trace.ticks[i];
    if (i > 0) {
      const TickRecord& q = trace.ticks[i - 1];
      m.path_length_m += std::hypot(r.base_x - q.base_x, r.base_y - q.base_y);
    }
    m.grid_violations += r.grid_violation;
    if (r.h_est_valid) {
      ++m.valid_ticks;
      const double ay = std::abs(r.p_y);
      sum_py += ay;
      m.max_abs_py = std::max(m.max_abs_py, ay);
      if (ay > footprint_half_width) ++exceed;
    } else {
      ++m.tracking_loss_ticks;
    }
  }
  if (m.valid_ticks > 0) {
    m.mean_abs_py = sum_py / static_cast<double>(m.valid_ticks);
    m.exceedance = static_cast<double>(exceed) / static_cast<double>(m.valid_ticks);
  }
  return m;
}

struct SignTestResult {
  int wins = 0;    // pairs where the first entry is strictly lower
  int losses = 0;  // pairs where the first entry is strictly higher
  int ties = 0;
  double p_one_sided = 1.0;  // P[X >= wins] under Binomial(wins+losses, 1/2)
};

/// Exact one-sided sign test on paired values (first, second), testing
/// whether the first is systematically lower. Ties are excluded.
inline SignTestResult sign_test(const std::vector<std::pair<double, double>>& pairs) {
  SignTestResult r;
  for (const auto& [a, b] : pairs) {
    if (a < b)
      ++r.wins;
    else if (a > b)
      ++r.losses;
    else
      ++r.ties;
  }
  const int n = r.wins + r.losses;
  if (n == 0) {
    r.p_one_sided = 1.0;
    return r;
  }
  // exact binomial tail: sum_{k=wins}^{n} C(n,k) / 2^n
  double tail = 0.0;
  double binom = 1.0;  // C(n, 0)
  for (int k = 0; k <= n; ++k) {
    if (k >= r.wins) tail += binom;
    binom = binom * static_cast<double>(n - k) / static_cast<double>(k + 1);
  }
  r.p_one_sided = tail * std::pow(0.5, n);
  return r;
}

}  // namespace pullnav
