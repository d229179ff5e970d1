#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pass/convex_core.hpp"

namespace pass {

struct PowerAllocation {
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<double> power;  // P_k, W
  double se = 0.0;            // sum_k (1/K) log2(1 + P_k g_k)
  double water_level = 0.0;   // mu; 0 when only the QoS floors bind
};

namespace detail {

inline double slot_se(const std::vector<double>& p, const std::vector<double>& g, double users) {
  double se = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) se += std::log2(1.0 + p[k] * g[k]) / users;
  return se;
}

/// Same program with 1/slot in place of 1/K (slot = 1: parallel, non-time-shared users).
inline PowerAllocation waterfill(const std::vector<double>& gains, const std::vector<double>& qos,
                                 double se_floor, double power_cap, double slot) {
  for (double g : gains)
    if (!(g > 0.0) || !std::isfinite(g)) throw std::invalid_argument("gains must be positive");
  if (!(power_cap > 0.0)) throw std::invalid_argument("P_max must be positive");

  const double kd = slot;
  const std::size_t n = gains.size();
  PowerAllocation out;
  std::vector<double> floor_p(n), cap_p(n, power_cap);
  for (std::size_t k = 0; k < n; ++k) {
    floor_p[k] = (std::exp2(kd * qos[k]) - 1.0) / gains[k];
    if (floor_p[k] > power_cap) return out;
  }
  if (detail::slot_se(cap_p, gains, kd) < se_floor - 1e-12) return out;

  out.status = SolveStatus::Optimal;
  if (detail::slot_se(floor_p, gains, kd) >= se_floor) {
    out.power = floor_p;
    out.se = detail::slot_se(floor_p, gains, kd);
    return out;
  }

  auto alloc = [&](double mu) {
    std::vector<double> p(n);
    for (std::size_t k = 0; k < n; ++k) p[k] = std::clamp(mu - 1.0 / gains[k], floor_p[k], power_cap);
    return p;
  };
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    lo = std::min(lo, floor_p[k] + 1.0 / gains[k]);
    hi = std::max(hi, power_cap + 1.0 / gains[k]);
  }
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    const double se = detail::slot_se(alloc(mid), gains, kd);
    if (se >= se_floor) hi = mid;
    else lo = mid;
    if (se >= se_floor && se - se_floor <= 1e-10) break;
  }

  // Closed-form level on the active set found at hi.
  double mu = hi;
  {
    const auto p = alloc(hi);
    double fixed_bits = 0.0;
    double log_gain = 0.0;
    int free_count = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double raw = hi - 1.0 / gains[k];
      if (raw > floor_p[k] && raw < power_cap) {
        ++free_count;
        log_gain += std::log2(gains[k]);
      } else {
        fixed_bits += std::log2(1.0 + p[k] * gains[k]);
      }
    }
    if (free_count > 0) {
      const double candidate = std::exp2((kd * se_floor - fixed_bits - log_gain) / free_count);
      const double se = detail::slot_se(alloc(candidate), gains, kd);
      if (std::abs(se - se_floor) <= 1e-9 && se >= se_floor - 1e-12) mu = candidate;
    }
  }
  out.power = alloc(mu);
  out.se = detail::slot_se(out.power, gains, kd);
  out.water_level = mu;
  return out;
}

}  // namespace detail

/// Minimum total power for time-shared, interference-free users:
///
///   min sum P_k  s.t.  sum_k (1/K) log2(1 + P_k g_k) >= eps,
///                      (1/K) log2(1 + P_k g_k) >= gamma_k,  0 <= P_k <= P_max.
///
/// KKT gives P_k = clamp(mu - 1/g_k, P_k^min, P_max); mu is bracketed by
/// bisection and then solved in closed form on the detected active set.
inline PowerAllocation waterfill_ws(const std::vector<double>& gains, const std::vector<double>& qos,
                                    double se_floor, double power_cap, int users) {
  if (gains.size() != qos.size() || static_cast<int>(gains.size()) != users || users < 1)
    throw std::invalid_argument("water-filling inputs have inconsistent sizes");
  return detail::waterfill(gains, qos, se_floor, power_cap, users);
}

}  // namespace pass
