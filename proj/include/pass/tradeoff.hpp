#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pass/config.hpp"
#include "pass/rng.hpp"
#include "pass/wm_solver.hpp"
#include "pass/ws_solver.hpp"

namespace pass {

enum class Protocol { Wm, Ws, Baseline };

inline const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::Wm: return "wm";
    case Protocol::Ws: return "ws";
    case Protocol::Baseline: return "baseline";
  }
  return "?";
}

inline Protocol parse_protocol(std::string_view s) {
  if (s == "wm") return Protocol::Wm;
  if (s == "ws") return Protocol::Ws;
  if (s == "baseline") return Protocol::Baseline;
  throw std::invalid_argument("unknown protocol '" + std::string(s) + "'");
}

struct TradeoffPoint {
  Protocol protocol = Protocol::Wm;
  double eps_se = 0.0;
  double se = std::numeric_limits<double>::quiet_NaN();
  double power = std::numeric_limits<double>::quiet_NaN();  // W
  double ee = std::numeric_limits<double>::quiet_NaN();     // bit/s/Hz/W
  bool feasible = false;
};

struct TradeoffCurve {
  Protocol protocol = Protocol::Wm;
  std::vector<TradeoffPoint> points;
  int grid = 0;
  int drop = 0;
  std::uint64_t seed = 0;
  double se_max = std::numeric_limits<double>::quiet_NaN();  // NaN when even sum(gamma) is infeasible
};

struct SweepOptions {
  WmOptions wm;
  double bracket = 0.05;  // find_se_max resolution, bit/s/Hz
};

/// K users i.i.d. uniform over the L x L region.
inline UserSet drop_users(const SystemConfig& cfg, std::uint64_t master_seed, int drop) {
  Rng rng(derive_seed(master_seed, {0, static_cast<std::uint64_t>(drop)}));
  UserSet users;
  for (int k = 0; k < cfg.users; ++k) {
    const double x = rng.uniform(-cfg.half_side(), cfg.half_side());
    const double y = rng.uniform(-cfg.half_side(), cfg.half_side());
    users.push_back({x, y});
  }
  return users;
}

/// Conventional antennas: every waveguide's N elements sit at the feed as a
/// half-wavelength array, x_n = -L/2 + n lambda/2 (0-based n).
inline PinchingLayout baseline_layout(const SystemConfig& cfg) {
  PinchingLayout layout;
  for (int m = 0; m < cfg.waveguides; ++m) {
    std::vector<double> w;
    for (int n = 0; n < cfg.pas_per_waveguide; ++n) w.push_back(-cfg.half_side() + n * cfg.wavelength() / 2.0);
    layout.x.push_back(std::move(w));
  }
  return layout;
}

inline WmSolution baseline_conventional(const UserSet& users, const SystemConfig& cfg, double se_floor,
                                        std::uint64_t seed, const WmOptions& opt = {}) {
  return solve_wm_fixed_layout(users, baseline_layout(cfg), cfg, se_floor, seed, opt);
}

/// Interference-free, full-power, phase-aligned SE bound.
inline double se_upper_bound(Protocol protocol, const SystemConfig& cfg) {
  const double mn = static_cast<double>(cfg.waveguides) * cfg.pas_per_waveguide;
  const double h2 = cfg.height * cfg.height;
  if (protocol == Protocol::Ws) return std::log2(1.0 + cfg.max_power_w * mn * cfg.eta() / (h2 * cfg.noise_w));
  const double n = cfg.pas_per_waveguide;
  return cfg.users * std::log2(1.0 + cfg.max_power_w * cfg.waveguides * n * n * cfg.eta() / (h2 * cfg.noise_w));
}

namespace detail {

class ProtocolSolver {
 public:
  ProtocolSolver(Protocol p, const UserSet& users, const SystemConfig& cfg, const SweepOptions& opt)
      : protocol_(p), users_(users), cfg_(cfg), opt_(opt) {
    if (p == Protocol::Ws) placed_ = place_ws_users(users, cfg);
  }

  bool feasible(double eps, std::uint64_t seed) const {
    switch (protocol_) {
      case Protocol::Wm: return wm_feasible(users_, cfg_, eps, seed, opt_.wm);
      case Protocol::Ws: return solve_ws_placed(placed_, cfg_, eps).status == SolveStatus::Optimal;
      case Protocol::Baseline:
        return baseline_conventional(users_, cfg_, eps, seed, opt_.wm).status == SolveStatus::Optimal;
    }
    return false;
  }

  TradeoffPoint solve(double eps, std::uint64_t seed) const {
    TradeoffPoint pt;
    pt.protocol = protocol_;
    pt.eps_se = eps;
    if (protocol_ == Protocol::Ws) {
      const auto s = solve_ws_placed(placed_, cfg_, eps);
      if (s.status != SolveStatus::Optimal) return pt;
      pt.se = s.se;
      pt.power = s.power;
      pt.ee = s.ee;
    } else {
      const auto s = protocol_ == Protocol::Wm ? solve_wm(users_, cfg_, eps, seed, opt_.wm)
                                               : baseline_conventional(users_, cfg_, eps, seed, opt_.wm);
      if (s.status != SolveStatus::Optimal) return pt;
      pt.se = s.se;
      pt.power = s.power;
      pt.ee = s.ee;
    }
    pt.feasible = true;
    return pt;
  }

 private:
  Protocol protocol_;
  const UserSet& users_;
  const SystemConfig& cfg_;
  const SweepOptions& opt_;
  std::vector<WsUser> placed_;
};

inline double find_se_max(const ProtocolSolver& solver, Protocol protocol, const SystemConfig& cfg,
                          std::uint64_t seed, double bracket) {
  double lo = cfg.qos_sum();
  if (!solver.feasible(lo, seed)) return std::numeric_limits<double>::quiet_NaN();
  double hi = se_upper_bound(protocol, cfg);
  if (solver.feasible(hi, seed)) return hi;
  for (;;) {
    while (hi - lo > bracket) {
      const double mid = 0.5 * (lo + hi);
      (solver.feasible(mid, seed) ? lo : hi) = mid;
    }
    // Heuristic feasibility need not be monotone, so the bracket edge is checked directly.
    if (lo + bracket >= hi || !solver.feasible(lo + bracket, seed)) return lo;
    lo += bracket;
  }
}

}  // namespace detail

/// Largest SE target found feasible, located by bisection over [sum(gamma), SE_ub]
/// so that the returned value is feasible and value + bracket is not.
/// NaN when sum(gamma) itself is infeasible.
inline double find_se_max(Protocol protocol, const UserSet& users, const SystemConfig& cfg, std::uint64_t seed,
                          const SweepOptions& opt = {}) {
  cfg.validate();
  validate_users(users, cfg);
  detail::ProtocolSolver solver(protocol, users, cfg, opt);
  return detail::find_se_max(solver, protocol, cfg, seed, opt.bracket);
}

/// Per-point seed; the last grid point shares its seed with find_se_max.
inline std::uint64_t sweep_seed(std::uint64_t master_seed, int drop, int index) {
  return derive_seed(master_seed, {static_cast<std::uint64_t>(drop), static_cast<std::uint64_t>(index)});
}

/// Epsilon-constraint sweep on a uniform grid from sum(gamma) to the protocol's SE maximum.
///
/// A solution found for a larger target also serves every smaller one, so the
/// curve is closed downward: point i takes the cheapest solution among points >= i.
inline TradeoffCurve sweep(Protocol protocol, const UserSet& users, const SystemConfig& cfg, int grid,
                           std::uint64_t master_seed, int drop, const SweepOptions& opt = {}) {
  cfg.validate();
  validate_users(users, cfg);
  if (grid < 1) throw std::invalid_argument("grid must have at least one point");
  TradeoffCurve c;
  c.protocol = protocol;
  c.grid = grid;
  c.drop = drop;
  c.seed = master_seed;
  detail::ProtocolSolver solver(protocol, users, cfg, opt);
  const double lo = cfg.qos_sum();
  if (grid == 1) {
    c.points.push_back(solver.solve(lo, sweep_seed(master_seed, drop, 0)));
    c.se_max = c.points.front().feasible ? lo : std::numeric_limits<double>::quiet_NaN();
    return c;
  }
  c.se_max = detail::find_se_max(solver, protocol, cfg, sweep_seed(master_seed, drop, grid - 1), opt.bracket);
  // With sum(gamma) infeasible the grid is still laid out to the upper bound and every point flagged.
  const double top = std::isnan(c.se_max) ? se_upper_bound(protocol, cfg) : c.se_max;
  for (int i = 0; i < grid; ++i) {
    const double eps = i + 1 == grid ? top : lo + (top - lo) * i / (grid - 1);
    TradeoffPoint pt;
    pt.protocol = protocol;
    pt.eps_se = eps;
    if (!std::isnan(c.se_max)) pt = solver.solve(eps, sweep_seed(master_seed, drop, i));
    c.points.push_back(pt);
  }
  for (int i = grid - 2; i >= 0; --i) {
    auto& cur = c.points[static_cast<std::size_t>(i)];
    const auto& next = c.points[static_cast<std::size_t>(i + 1)];
    if (next.feasible && (!cur.feasible || next.power < cur.power)) {
      const double eps = cur.eps_se;
      cur = next;
      cur.eps_se = eps;
    }
  }
  return c;
}

/// Index of the EE-maximizing feasible point, or -1.
inline int peak_ee_index(const TradeoffCurve& c) {
  int best = -1;
  for (std::size_t i = 0; i < c.points.size(); ++i)
    if (c.points[i].feasible && (best < 0 || c.points[i].ee > c.points[static_cast<std::size_t>(best)].ee))
      best = static_cast<int>(i);
  return best;
}

struct AveragedPoint {
  double eps_se = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
  double power = std::numeric_limits<double>::quiet_NaN();
  double ee = std::numeric_limits<double>::quiet_NaN();
  int feasible_drops = 0;
};

/// Point-by-point mean over drops: eps over all drops, the rest over feasible drops only.
inline std::vector<AveragedPoint> average_curves(const std::vector<TradeoffCurve>& curves) {
  std::vector<AveragedPoint> out;
  if (curves.empty()) return out;
  const std::size_t n = curves.front().points.size();
  for (std::size_t i = 0; i < n; ++i) {
    AveragedPoint a;
    double eps = 0.0, se = 0.0, power = 0.0, ee = 0.0;
    for (const auto& c : curves) {
      if (c.points.size() != n) throw std::invalid_argument("curves have different grid sizes");
      const auto& p = c.points[i];
      eps += p.eps_se;
      if (!p.feasible) continue;
      ++a.feasible_drops;
      se += p.se;
      power += p.power;
      ee += p.ee;
    }
    a.eps_se = eps / static_cast<double>(curves.size());
    if (a.feasible_drops > 0) {
      a.se = se / a.feasible_drops;
      a.power = power / a.feasible_drops;
      a.ee = ee / a.feasible_drops;
    }
    out.push_back(a);
  }
  return out;
}

}  // namespace pass
