#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pass/channel.hpp"
#include "pass/config.hpp"
#include "pass/convex_core.hpp"
#include "pass/pso.hpp"
#include "pass/rng.hpp"
#include "pass/waterfill.hpp"

namespace pass {

struct WmOptions {
  PsoHyperparams pso;
  int max_rounds = 10;            // AO rounds
  double round_tolerance = 1e-4;  // relative power improvement that ends AO
  int restarts = 3;               // random layouts tried when the first baseband solve fails
  int sca_max_iterations = 30;
  double sca_tolerance = 1e-5;    // relative objective decrease that ends SCA
  int restoration_rounds = 30;    // re-expansions while the SCA subproblem is infeasible
  int randomization_candidates = 200;
  double tightness_threshold = 0.999;
};

/// Per-user SINR rates with h_k^H w_i as the effective link gain.
inline std::vector<double> wm_rates(const ChannelMatrix& h, const std::vector<CVector>& beams,
                                    double noise) {
  const std::size_t users = static_cast<std::size_t>(h.rows());
  std::vector<double> rates(users);
  for (std::size_t k = 0; k < users; ++k) {
    const CVector hk = h.row(static_cast<Eigen::Index>(k)).transpose();
    double signal = 0.0;
    double interference = 0.0;
    for (std::size_t i = 0; i < beams.size(); ++i) {
      const double g = std::norm(hk.dot(beams[i]));
      if (i == k) signal = g;
      else interference += g;
    }
    rates[k] = std::log2(1.0 + signal / (interference + noise));
  }
  return rates;
}

inline double wm_se(std::span<const double> rates) {
  return std::accumulate(rates.begin(), rates.end(), 0.0);
}

inline double beam_power(const std::vector<CVector>& beams) {
  double p = 0.0;
  for (const auto& w : beams) p += w.squaredNorm();
  return p;
}

/// SE over total consumption: se / (sum ||w_k||^2 + K P_RF).
inline double wm_ee(double se, const std::vector<CVector>& beams, const SystemConfig& cfg) {
  return se / (beam_power(beams) + cfg.users * cfg.rf_chain_power_w);
}

/// Pinching-stage fitness with the beams held fixed:
///   F = SE - xi * (sum_k [gamma_k - R_k]^+ + [eps - SE]^+) - eta * spacing_penalty.
/// Each waveguide's coordinates are sorted before the channel is evaluated.
inline double pinching_fitness(std::span<const double> x, const std::vector<CVector>& beams,
                               const UserSet& users, const SystemConfig& cfg, double se_floor,
                               const PsoHyperparams& hp) {
  const auto per = static_cast<std::size_t>(cfg.pas_per_waveguide);
  PinchingLayout layout = PinchingLayout::from_flat(x, cfg.waveguides);
  for (auto& w : layout.x) std::sort(w.begin(), w.end());
  const ChannelMatrix h = detail::channel_matrix_unchecked(users, layout, cfg);
  const auto rates = wm_rates(h, beams, cfg.noise_w);
  const double se = wm_se(rates);
  double shortfall = std::max(0.0, se_floor - se);
  for (double r : rates) shortfall += std::max(0.0, cfg.rate_floor - r);
  const double position = spacing_penalty(x, cfg.spacing(), per, -cfg.half_side(), cfg.half_side());
  return se - hp.performance_penalty * shortfall - hp.position_penalty * position;
}

namespace detail {

/// Zero-forcing covariances with water-filled powers reaching the SE target
/// and the floors within P_max, if such an allocation exists.
inline std::optional<MatrixSet> zero_forcing_start(const ChannelMatrix& h, const std::vector<double>& qos,
                                                   double se_floor, const SystemConfig& cfg) {
  const auto users = static_cast<std::size_t>(h.rows());
  if (h.rows() > h.cols()) return std::nullopt;
  // Received signal is h_k^H w, so the nulling rows are conj(h_k).
  const CMatrix rows = h.conjugate();
  const CMatrix gram = rows * rows.adjoint();
  Eigen::LDLT<CMatrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  const CMatrix v = rows.adjoint() * ldlt.solve(CMatrix::Identity(h.rows(), h.rows()));
  std::vector<CVector> dirs(users);
  std::vector<double> gains(users);
  for (std::size_t k = 0; k < users; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double norm = v.col(kk).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) return std::nullopt;
    dirs[k] = v.col(kk) / norm;
    gains[k] = std::norm((rows.row(kk) * dirs[k])(0, 0)) / cfg.noise_w;
  }
  const auto alloc = waterfill(gains, qos, se_floor, cfg.max_power_w, 1.0);
  if (alloc.status != SolveStatus::Optimal) return std::nullopt;
  if (std::accumulate(alloc.power.begin(), alloc.power.end(), 0.0) > cfg.max_power_w) return std::nullopt;
  MatrixSet w;
  for (std::size_t k = 0; k < users; ++k) w.push_back(alloc.power[k] * dirs[k] * dirs[k].adjoint());
  return w;
}

}  // namespace detail

struct BasebandSolution {
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<CVector> beams;
  MatrixSet covariances;
  double power = 0.0;               // sum ||w_k||^2 after extraction
  std::vector<double> tightness;    // per user
  bool used_randomization = false;
  std::vector<double> sca_trace;    // SDP objective per SCA iteration
};

/// Baseband beamforming at a fixed channel: QoS-only SDP start, SCA on the
/// SE-constrained relaxation until the objective settles, then rank-one
/// extraction with exact SINR power re-solve.
///
/// When the subproblem is infeasible at the current expansion point the
/// phase I minimizer becomes the next expansion point; each re-expansion
/// raises the true rates, so this stops either feasible or stuck.
inline BasebandSolution solve_baseband(const ChannelMatrix& h, const SystemConfig& cfg,
                                       double se_floor, Rng& rng, const WmOptions& opt = {}) {
  BasebandSolution out;
  const auto qos = cfg.rate_floors();
  const std::size_t users = qos.size();

  MatrixSet expansion;
  {
    auto start = solve_qos_sdp(h, qos, cfg.max_power_w, cfg.noise_w);
    if (start.status == SolveStatus::Optimal) {
      expansion = start.w;
    } else {
      // Maximum-ratio directions scaled to the QoS floors.
      std::vector<CVector> dirs(users);
      std::vector<double> targets(users);
      for (std::size_t k = 0; k < users; ++k) {
        const CVector hk = h.row(static_cast<Eigen::Index>(k)).transpose();
        dirs[k] = hk / hk.norm();
        targets[k] = std::exp2(qos[k]) - 1.0;
      }
      auto p = power_control(h, dirs, targets, cfg.noise_w, cfg.max_power_w);
      if (!p) return out;
      for (std::size_t k = 0; k < users; ++k) expansion.push_back((*p)[k] * dirs[k] * dirs[k].adjoint());
    }
  }

  SdpProblem problem{h, qos, se_floor, cfg.max_power_w, cfg.noise_w, expansion};
  SdpSolution sol = solve_sdp_subproblem(problem);
  double level = std::numeric_limits<double>::infinity();
  for (int r = 0; r < opt.restoration_rounds && sol.status == SolveStatus::Infeasible; ++r) {
    if (!(sol.infeasibility < level - 1e-6)) break;
    level = sol.infeasibility;
    problem.expansion = sol.w;
    sol = solve_sdp_subproblem(problem);
  }
  if (sol.status == SolveStatus::Infeasible) {
    // High targets: a zero-forcing point that already meets them is a feasible expansion.
    if (auto zf = detail::zero_forcing_start(h, qos, se_floor, cfg)) {
      problem.expansion = std::move(*zf);
      sol = solve_sdp_subproblem(problem);
    }
  }
  if (sol.status != SolveStatus::Optimal) {
    out.status = sol.status;
    return out;
  }

  out.sca_trace.push_back(sol.objective);
  for (int l = 1; l < opt.sca_max_iterations; ++l) {
    problem.expansion = sol.w;
    SdpSolution next = solve_sdp_subproblem(problem);
    if (next.status != SolveStatus::Optimal) break;
    const double decrease = (sol.objective - next.objective) / sol.objective;
    if (next.objective <= sol.objective) sol = std::move(next);
    out.sca_trace.push_back(sol.objective);
    if (decrease < opt.sca_tolerance) break;
  }

  auto beams = extract_beamformers(h, sol.w, cfg.noise_w, cfg.max_power_w, rng,
                                   opt.randomization_candidates, opt.tightness_threshold);
  out.covariances = sol.w;
  out.beams = beams.beams;
  out.tightness = beams.tightness;
  out.used_randomization = beams.used_randomization;
  out.power = beam_power(out.beams);
  out.status = beams.status;
  if (out.status == SolveStatus::Optimal) {
    const auto rates = wm_rates(h, out.beams, cfg.noise_w);
    bool ok = wm_se(rates) >= se_floor - 1e-6 && out.power <= cfg.max_power_w + 1e-9;
    for (std::size_t k = 0; k < users; ++k) ok = ok && rates[k] >= qos[k] - 1e-6;
    if (!ok) out.status = SolveStatus::NumericalFailure;
  }
  return out;
}

struct WmSolution {
  SolveStatus status = SolveStatus::Infeasible;
  PinchingLayout layout;
  std::vector<CVector> beams;
  std::vector<double> rates;
  double se = 0.0;
  double power = 0.0;
  double ee = 0.0;
  std::vector<double> power_trace;  // accepted power after each AO round (entry 0: initial)
  std::vector<double> tightness;    // final SDP rank-one tightness per user
  bool used_randomization = false;
  int rounds = 0;
};

/// N PAs per waveguide centered on the median user x, spaced Delta.
inline PinchingLayout initial_layout(const UserSet& users, const SystemConfig& cfg) {
  std::vector<double> xs;
  for (const auto& u : users) xs.push_back(u.x);
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  const double median = n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
  PinchingLayout layout;
  const int per = cfg.pas_per_waveguide;
  for (int m = 0; m < cfg.waveguides; ++m) {
    std::vector<double> w(static_cast<std::size_t>(per));
    for (int i = 0; i < per; ++i) w[static_cast<std::size_t>(i)] = median + (i - (per - 1) / 2.0) * cfg.spacing();
    const double shift = std::max(0.0, -cfg.half_side() - w.front()) - std::max(0.0, w.back() - cfg.half_side());
    for (auto& x : w) x += shift;
    repair_waveguide(w, cfg);
    layout.x.push_back(std::move(w));
  }
  return layout;
}

inline PinchingLayout random_layout(const SystemConfig& cfg, Rng& rng) {
  PinchingLayout layout;
  for (int m = 0; m < cfg.waveguides; ++m) {
    std::vector<double> w(static_cast<std::size_t>(cfg.pas_per_waveguide));
    for (auto& x : w) x = rng.uniform(-cfg.half_side(), cfg.half_side());
    repair_waveguide(w, cfg);
    layout.x.push_back(std::move(w));
  }
  return layout;
}

namespace detail {

inline void finish(WmSolution& s, const UserSet& users, const SystemConfig& cfg, double se_floor) {
  const ChannelMatrix h = channel_matrix(users, s.layout, cfg);
  s.rates = wm_rates(h, s.beams, cfg.noise_w);
  s.se = wm_se(s.rates);
  s.power = beam_power(s.beams);
  s.ee = wm_ee(s.se, s.beams, cfg);
  bool ok = s.se >= se_floor - 1e-6 && s.power <= cfg.max_power_w + 1e-9 && layout_is_feasible(s.layout, cfg);
  for (double r : s.rates) ok = ok && r >= cfg.rate_floor - 1e-6;
  if (!ok) s.status = SolveStatus::NumericalFailure;
}

inline void adopt(WmSolution& s, const PinchingLayout& layout, const BasebandSolution& bb) {
  s.layout = layout;
  s.beams = bb.beams;
  s.tightness = bb.tightness;
  s.used_randomization = bb.used_randomization;
}

}  // namespace detail

namespace detail {

// Median-centered layout first, then seeded random layouts until one is feasible.
inline std::pair<PinchingLayout, BasebandSolution> starting_point(const UserSet& users, const SystemConfig& cfg,
                                                                   double se_floor, std::uint64_t seed, Rng& rng,
                                                                   const WmOptions& opt) {
  PinchingLayout layout = initial_layout(users, cfg);
  BasebandSolution bb = solve_baseband(channel_matrix(users, layout, cfg), cfg, se_floor, rng, opt);
  for (int r = 0; r < opt.restarts && bb.status != SolveStatus::Optimal; ++r) {
    Rng layout_rng(derive_seed(seed, {1, static_cast<std::uint64_t>(r)}));
    layout = random_layout(cfg, layout_rng);
    bb = solve_baseband(channel_matrix(users, layout, cfg), cfg, se_floor, rng, opt);
  }
  return {std::move(layout), std::move(bb)};
}

}  // namespace detail

/// True when solve_wm with the same arguments returns a feasible solution.
/// Only the starting point is solved; the AO rounds never lose feasibility.
inline bool wm_feasible(const UserSet& users, const SystemConfig& cfg, double se_floor, std::uint64_t seed,
                        const WmOptions& opt = {}) {
  Rng rng(derive_seed(seed, {2}));
  return detail::starting_point(users, cfg, se_floor, seed, rng, opt).second.status == SolveStatus::Optimal;
}

/// Baseband-only solve on a frozen layout.
inline WmSolution solve_wm_fixed_layout(const UserSet& users, const PinchingLayout& layout,
                                        const SystemConfig& cfg, double se_floor,
                                        std::uint64_t seed, const WmOptions& opt = {}) {
  cfg.validate();
  validate_users(users, cfg);
  Rng rng(derive_seed(seed, {2}));
  WmSolution s;
  s.layout = layout;
  const auto bb = solve_baseband(channel_matrix(users, layout, cfg), cfg, se_floor, rng, opt);
  s.status = bb.status;
  if (bb.status != SolveStatus::Optimal) return s;
  detail::adopt(s, layout, bb);
  s.power_trace.push_back(bb.power);
  detail::finish(s, users, cfg, se_floor);
  return s;
}

/// Alternating optimization of baseband beams (SCA) and PA positions (PSO).
///
/// A PSO layout is kept only if the baseband power it leads to does not
/// exceed the incumbent's, so the accepted power never increases.
inline WmSolution solve_wm(const UserSet& users, const SystemConfig& cfg, double se_floor,
                           std::uint64_t seed, const WmOptions& opt = {}) {
  cfg.validate();
  validate_users(users, cfg);
  if (se_floor < cfg.qos_sum() - 1e-12)
    throw std::invalid_argument("SE target is below the sum of QoS floors");

  Rng rng(derive_seed(seed, {2}));
  WmSolution s;
  auto [layout, bb] = detail::starting_point(users, cfg, se_floor, seed, rng, opt);
  if (bb.status != SolveStatus::Optimal) {
    s.status = bb.status == SolveStatus::NumericalFailure ? SolveStatus::NumericalFailure
                                                          : SolveStatus::Infeasible;
    s.layout = layout;
    return s;
  }
  s.status = SolveStatus::Optimal;
  detail::adopt(s, layout, bb);
  double power = bb.power;
  s.power_trace.push_back(power);

  const std::size_t dim = static_cast<std::size_t>(cfg.waveguides * cfg.pas_per_waveguide);
  PsoStart start;
  start.project = [&cfg](std::span<double> x) {
    const auto per = static_cast<std::size_t>(cfg.pas_per_waveguide);
    for (std::size_t off = 0; off < x.size(); off += per) {
      std::vector<double> w(x.begin() + static_cast<std::ptrdiff_t>(off),
                            x.begin() + static_cast<std::ptrdiff_t>(off + per));
      repair_waveguide(w, cfg);
      std::copy(w.begin(), w.end(), x.begin() + static_cast<std::ptrdiff_t>(off));
    }
  };

  for (int round = 0; round < opt.max_rounds; ++round) {
    start.particles = {s.layout.flatten()};
    const auto& beams = s.beams;
    auto fitness = [&](std::span<const double> x) {
      return pinching_fitness(x, beams, users, cfg, se_floor, opt.pso);
    };
    const auto best = pso_optimize(fitness, dim, -cfg.half_side(), cfg.half_side(), opt.pso,
                                   derive_seed(seed, {3, static_cast<std::uint64_t>(round)}), start);
    PinchingLayout candidate = PinchingLayout::from_flat(best.best_position, cfg.waveguides);
    repair_layout(candidate, cfg);
    ++s.rounds;
    BasebandSolution next = solve_baseband(channel_matrix(users, candidate, cfg), cfg, se_floor, rng, opt);
    if (next.status != SolveStatus::Optimal || next.power > power) break;
    const double improvement = (power - next.power) / power;
    detail::adopt(s, candidate, next);
    power = next.power;
    s.power_trace.push_back(power);
    if (improvement < opt.round_tolerance) break;
  }
  detail::finish(s, users, cfg, se_floor);
  return s;
}

}  // namespace pass
