#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "pass/channel.hpp"
#include "pass/config.hpp"
#include "pass/waterfill.hpp"

namespace pass {

/// Waveguide whose y_m is nearest the user; ties go to the smaller index.
inline int select_waveguide(const UserPosition& u, const SystemConfig& cfg) {
  int best = 0;
  double best_dist = std::abs(u.y - cfg.waveguide_y(0));
  for (int m = 1; m < cfg.waveguides; ++m) {
    const double d = std::abs(u.y - cfg.waveguide_y(m));
    if (d < best_dist) {
      best = m;
      best_dist = d;
    }
  }
  return best;
}

namespace detail {

// Single-waveguide gain search. Terms drop the common sqrt(eta) factor.
class PlacementSearch {
 public:
  PlacementSearch(const UserPosition& u, int m, const SystemConfig& cfg)
      : u_(u),
        dy2_(std::pow(u.y - cfg.waveguide_y(m), 2) + cfg.height * cfg.height),
        half_(cfg.half_side()),
        delta_(cfg.spacing()),
        lambda_(cfg.wavelength()),
        inv_lambda_(1.0 / cfg.wavelength()),
        inv_lambda_g_(1.0 / cfg.guided_wavelength()) {}

  cdouble term(double x) const {
    const double dx = x - u_.x;
    const double r = std::sqrt(dx * dx + dy2_);
    const double theta = 2.0 * std::numbers::pi * (r * inv_lambda_ + (x + half_) * inv_lambda_g_);
    return std::polar(1.0 / r, -theta);
  }

  cdouble sum(std::span<const double> x) const {
    cdouble s{0.0, 0.0};
    for (double v : x) s += term(v);
    return s;
  }

  /// Stage A: a Delta-spaced block centered on the user, pushed inside the region.
  std::vector<double> anchors(int count) const {
    std::vector<double> a(static_cast<std::size_t>(count));
    for (int n = 0; n < count; ++n) a[static_cast<std::size_t>(n)] = u_.x + (n - (count - 1) / 2.0) * delta_;
    const double shift = std::max(0.0, -half_ - a.front()) - std::max(0.0, a.back() - half_);
    for (auto& v : a) v += shift;
    return a;
  }

  /// Stage B: hold the anchor nearest the user and move every other PA, working
  /// outward, to the offset in +/- lambda whose phase best matches it.
  std::vector<double> align(const std::vector<double>& a) const {
    const int count = static_cast<int>(a.size());
    std::vector<double> x = a;
    int c = 0;
    for (int n = 1; n < count; ++n)
      if (std::abs(a[static_cast<std::size_t>(n)] - u_.x) < std::abs(a[static_cast<std::size_t>(c)] - u_.x)) c = n;
    const cdouble ref = std::polar(1.0, -std::arg(term(a[static_cast<std::size_t>(c)])));
    const double step = lambda_ / kSteps;
    auto place = [&](int n, double lo, double hi) {
      const double anchor = a[static_cast<std::size_t>(n)];
      double best_x = std::clamp(anchor, lo, hi);
      double best_score = -std::numeric_limits<double>::infinity();
      for (int s = -kSteps; s <= kSteps; ++s) {
        const double cand = anchor + s * step;
        if (cand < lo || cand > hi) continue;
        const double score = (term(cand) * ref).real();
        if (score > best_score) {
          best_score = score;
          best_x = cand;
        }
      }
      x[static_cast<std::size_t>(n)] = best_x;
    };
    for (int n = c + 1; n < count; ++n)
      place(n, x[static_cast<std::size_t>(n - 1)] + delta_, half_ - (count - 1 - n) * delta_);
    for (int n = c - 1; n >= 0; --n)
      place(n, -half_ + n * delta_, x[static_cast<std::size_t>(n + 1)] - delta_);
    return x;
  }

  /// Stage C: per-PA coordinate ascent on |h| over +/- lambda windows, keeping
  /// the Delta gaps to both neighbours, until a pass gains < 1e-6 relative.
  void refine(std::vector<double>& x) const {
    const int count = static_cast<int>(x.size());
    const double step = lambda_ / kSteps;
    cdouble s = sum(x);
    for (int pass = 0; pass < 200; ++pass) {
      const double before = std::abs(s);
      for (int n = 0; n < count; ++n) {
        const auto un = static_cast<std::size_t>(n);
        const double lo = n > 0 ? x[un - 1] + delta_ : -half_;
        const double hi = n + 1 < count ? x[un + 1] - delta_ : half_;
        const cdouble rest = s - term(x[un]);
        double best_x = x[un];
        double best = std::abs(s);
        auto consider = [&](double cand) {
          if (cand < lo || cand > hi) return;
          const double v = std::abs(rest + term(cand));
          if (v > best) {
            best = v;
            best_x = cand;
          }
        };
        for (int k = -kSteps; k <= kSteps; ++k) consider(x[un] + k * step);
        consider(lo);
        consider(hi);
        if (best_x != x[un]) {
          x[un] = best_x;
          s = rest + term(best_x);
        }
      }
      if (std::abs(s) - before < 1e-6 * before) break;
    }
  }

  /// Adds one PA just outside the current block at the best-aligned spot.
  std::optional<std::vector<double>> extend(const std::vector<double>& x) const {
    const cdouble s = sum(x);
    const double step = lambda_ / kSteps;
    double best = -1.0;
    double best_x = 0.0;
    bool right = true;
    auto scan = [&](double lo, double hi, bool is_right) {
      for (double cand = lo; cand <= hi + 1e-15; cand += step) {
        const double v = std::abs(s + term(cand));
        if (v > best) {
          best = v;
          best_x = cand;
          right = is_right;
        }
      }
    };
    if (x.back() + delta_ <= half_) scan(x.back() + delta_, std::min(half_, x.back() + delta_ + 2 * lambda_), true);
    if (x.front() - delta_ >= -half_) scan(std::max(-half_, x.front() - delta_ - 2 * lambda_), x.front() - delta_, false);
    if (best < 0.0) return std::nullopt;
    std::vector<double> out = x;
    if (right) out.push_back(best_x);
    else out.insert(out.begin(), best_x);
    return out;
  }

  std::vector<double> place(int count) const {
    std::vector<double> best;
    for (int p = 1; p <= count; ++p) {
      const auto a = anchors(p);
      std::vector<double> x = align(a);
      if (std::abs(sum(x)) < std::abs(sum(a))) x = a;
      refine(x);
      if (!best.empty()) {
        if (auto grown = extend(best)) {
          refine(*grown);
          if (std::abs(sum(*grown)) > std::abs(sum(x))) x = std::move(*grown);
        }
      }
      best = std::move(x);
    }
    return best;
  }

 private:
  static constexpr int kSteps = 512;
  UserPosition u_;
  double dy2_;
  double half_;
  double delta_;
  double lambda_;
  double inv_lambda_;
  double inv_lambda_g_;
};

}  // namespace detail

/// PA coordinates on waveguide m maximizing the served user's channel gain.
/// `count` defaults to M*N (every PA moved onto the active waveguide).
inline std::vector<double> place_pas(const UserPosition& u, int m, const SystemConfig& cfg, int count = 0) {
  if (count <= 0) count = cfg.waveguides * cfg.pas_per_waveguide;
  if (m < 0 || m >= cfg.waveguides) throw std::invalid_argument("waveguide index out of range");
  if (count * cfg.spacing() > cfg.region_side)
    throw std::invalid_argument("infeasible geometry: PAs do not fit on the waveguide");
  detail::PlacementSearch search(u, m, cfg);
  std::vector<double> x = search.place(count);
  PinchingLayout check{{x}};
  if (!layout_is_feasible(check, cfg, 0.0)) repair_waveguide(x, cfg);
  return x;
}

/// sum_k (1/K) log2(1 + P_k g_k): equal time slots per user.
inline double ws_se(std::span<const double> powers, std::span<const double> gains, const SystemConfig& cfg) {
  double se = 0.0;
  for (std::size_t k = 0; k < powers.size(); ++k) se += std::log2(1.0 + powers[k] * gains[k]) / cfg.users;
  return se;
}

/// K * SE / (sum P_k + K P_RF).
inline double ws_ee(double se, std::span<const double> powers, const SystemConfig& cfg) {
  const double total = std::accumulate(powers.begin(), powers.end(), 0.0);
  return cfg.users * se / (total + cfg.users * cfg.rf_chain_power_w);
}

struct WsUser {
  int waveguide = 0;
  std::vector<double> positions;  // M*N coordinates on the active waveguide
  double channel_gain = 0.0;      // |h_k|^2
  double snr_gain = 0.0;          // |h_k|^2 / (M N sigma^2)
  double power = 0.0;             // P_k
  double rate = 0.0;              // (1/K) log2(1 + P_k g_k)
};

struct WsSolution {
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<WsUser> users;
  double se = 0.0;
  double power = 0.0;
  double ee = 0.0;
};

/// Per-user placements on the transmit waveguide; independent of the SE target.
inline std::vector<WsUser> place_ws_users(const UserSet& users, const SystemConfig& cfg) {
  const int active = cfg.waveguides * cfg.pas_per_waveguide;
  std::vector<WsUser> out;
  for (const auto& u : users) {
    WsUser w;
    w.waveguide = select_waveguide(u, cfg);
    w.positions = place_pas(u, w.waveguide, cfg, active);
    const cdouble h = waveguide_channel(u, w.positions, cfg.waveguide_y(w.waveguide), cfg);
    w.channel_gain = std::norm(h);
    w.snr_gain = w.channel_gain / (active * cfg.noise_w);
    out.push_back(std::move(w));
  }
  return out;
}

inline WsSolution solve_ws_placed(std::vector<WsUser> placed, const SystemConfig& cfg, double se_floor) {
  WsSolution s;
  s.users = std::move(placed);
  std::vector<double> gains;
  for (const auto& u : s.users) gains.push_back(u.snr_gain);
  const auto alloc = waterfill_ws(gains, cfg.rate_floors(), se_floor, cfg.max_power_w, cfg.users);
  s.status = alloc.status;
  if (alloc.status != SolveStatus::Optimal) return s;
  for (std::size_t k = 0; k < s.users.size(); ++k) {
    s.users[k].power = alloc.power[k];
    s.users[k].rate = std::log2(1.0 + alloc.power[k] * gains[k]) / cfg.users;
  }
  s.se = ws_se(alloc.power, gains, cfg);
  s.power = std::accumulate(alloc.power.begin(), alloc.power.end(), 0.0);
  s.ee = ws_ee(s.se, alloc.power, cfg);
  return s;
}

/// Waveguide selection and gain-maximizing placement per user, then water-filling.
inline WsSolution solve_ws(const UserSet& users, const SystemConfig& cfg, double se_floor) {
  cfg.validate();
  validate_users(users, cfg);
  return solve_ws_placed(place_ws_users(users, cfg), cfg, se_floor);
}

}  // namespace pass
