#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pass/barrier.hpp"
#include "pass/channel.hpp"
#include "pass/rng.hpp"

namespace pass {

enum class SolveStatus { Optimal, Infeasible, NumericalFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

using MatrixSet = std::vector<CMatrix>;

/// h^H W h for a Hermitian W.
inline double quad_form(const CVector& h, const CMatrix& w) { return (h.adjoint() * w * h)(0, 0).real(); }

/// Exact SINR-based rate of user k when beam covariances are W_i.
inline double trace_rate(const CVector& h_k, const MatrixSet& w, double noise, std::size_t k) {
  double interference = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (i != k) interference += quad_form(h_k, w[i]);
  return std::log2(1.0 + quad_form(h_k, w[k]) / (interference + noise));
}

/// First-order lower bound on user k's rate around the expansion point W^(l):
///   log2(sum_i h^H W_i h + s2) - log2(I_l + s2) - sum_{i!=k} h^H (W_i - W_i^(l)) h / ((I_l + s2) ln 2)
/// with I_l = sum_{i!=k} h^H W_i^(l) h. Concave in W, tight at W = W^(l).
inline double sca_rate_lower_bound(const CVector& h_k, const MatrixSet& w,
                                   const MatrixSet& expansion, double noise, std::size_t k) {
  double total = 0.0;
  double interference_l = 0.0;
  double shift = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double qi = quad_form(h_k, w[i]);
    total += qi;
    if (i == k) continue;
    const double ql = quad_form(h_k, expansion[i]);
    interference_l += ql;
    shift += qi - ql;
  }
  return std::log2(total + noise) - std::log2(interference_l + noise) -
         shift / ((interference_l + noise) * std::numbers::ln2);
}

/// SCA-linearized power minimization at a fixed channel.
struct SdpProblem {
  ChannelMatrix h;              // K x M, row k = h_k
  std::vector<double> qos;      // gamma_k, bit/s/Hz
  double se_floor = 0.0;        // epsilon_SE, bit/s/Hz
  double power_cap = 0.0;       // P_max, W
  double noise = 0.0;           // sigma^2, W
  MatrixSet expansion;          // W_k^(l), W
};

struct SdpSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  MatrixSet w;                       // W_k, watts
  double objective = 0.0;            // sum_k Tr(W_k), W
  std::vector<double> rate_slacks;   // per-user bound minus gamma_k, then SE bound minus epsilon (bits)
  double power_slack = 0.0;          // P_max - objective, W
  double duality_gap = 0.0;          // relative
  double infeasibility = 0.0;        // phase I level in bits (> 0 when infeasible)
  int newton_steps = 0;
};

namespace detail {

struct Normalized {
  CMatrix h;         // h / max_k ||h_k||
  double scale = 1;  // watts per normalized power unit: sigma^2 / max ||h_k||^2
};

inline Normalized normalize(const ChannelMatrix& h, double noise) {
  double best = 0.0;
  for (Eigen::Index k = 0; k < h.rows(); ++k) best = std::max(best, h.row(k).squaredNorm());
  if (!(best > 0.0)) throw std::invalid_argument("channel matrix is identically zero");
  return {h / std::sqrt(best), noise / best};
}

inline SdpSolution unpack(const HermitianBarrier& solver, const BarrierResult& r, double scale,
                          std::size_t users) {
  SdpSolution out;
  out.newton_steps = r.newton_steps;
  for (std::size_t k = 0; k < users; ++k) out.w.push_back(scale * solver.block(r.z, static_cast<int>(k)));
  out.objective = scale * r.objective;
  out.power_slack = scale * r.power_slack;
  for (double v : r.values) out.rate_slacks.push_back(v / std::numbers::ln2);
  out.duality_gap = r.objective > 0.0 ? r.gap / r.objective : r.gap;
  out.infeasibility = r.phase1_level / std::numbers::ln2;
  switch (r.outcome) {
    case BarrierResult::Outcome::Converged: out.status = SolveStatus::Optimal; break;
    case BarrierResult::Outcome::Infeasible: out.status = SolveStatus::Infeasible; break;
    case BarrierResult::Outcome::Stalled: out.status = SolveStatus::NumericalFailure; break;
  }
  return out;
}

inline double min_eigenvalue(const CMatrix& w) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(w, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace detail

/// Solves min sum Tr(W_k) s.t. R~_k >= gamma_k, sum_k R~_k >= eps, sum Tr(W_k) <= P_max, W_k PSD.
inline SdpSolution solve_sdp_subproblem(const SdpProblem& p) {
  const std::size_t users = static_cast<std::size_t>(p.h.rows());
  if (p.qos.size() != users || p.expansion.size() != users)
    throw std::invalid_argument("SDP problem dimensions are inconsistent");
  if (!(p.noise > 0.0) || !(p.power_cap > 0.0))
    throw std::invalid_argument("SDP problem needs positive noise and power cap");
  for (const auto& w : p.expansion) {
    if (w.rows() != p.h.cols() || w.cols() != p.h.cols())
      throw std::invalid_argument("expansion point has the wrong size");
    if (detail::min_eigenvalue(w) < -1e-9 * std::max(1e-300, w.trace().real()))
      throw std::invalid_argument("expansion point is not PSD");
  }

  const auto norm = detail::normalize(p.h, p.noise);
  detail::HermitianBarrier solver(norm.h, p.power_cap / norm.scale);
  const int kk = static_cast<int>(users);
  const int nq = kk * kk;

  // Expansion point in normalized received-power units (noise = 1).
  Eigen::VectorXd q_l(nq);
  for (int k = 0; k < kk; ++k)
    for (int i = 0; i < kk; ++i)
      q_l(k * kk + i) =
          quad_form(p.h.row(k).transpose(), p.expansion[static_cast<std::size_t>(i)]) / p.noise;

  detail::LogAffine se;
  se.linear = Eigen::VectorXd::Zero(nq);
  se.constant = -p.se_floor * std::numbers::ln2;
  for (int k = 0; k < kk; ++k) {
    detail::LogAffine g;
    Eigen::VectorXd total = Eigen::VectorXd::Zero(nq);
    g.linear = Eigen::VectorXd::Zero(nq);
    double interference = 0.0;
    for (int i = 0; i < kk; ++i) {
      total(k * kk + i) = 1.0;
      if (i != k) interference += q_l(k * kk + i);
    }
    const double denom = interference + 1.0;
    g.constant = -std::log(denom);
    for (int i = 0; i < kk; ++i) {
      if (i == k) continue;
      g.linear(k * kk + i) = -1.0 / denom;
      g.constant += q_l(k * kk + i) / denom;
    }
    g.logs.emplace_back(total, 1.0);
    se.logs.emplace_back(total, 1.0);
    se.linear += g.linear;
    se.constant += g.constant;
    g.constant -= p.qos[static_cast<std::size_t>(k)] * std::numbers::ln2;
    solver.add_constraint(std::move(g));
  }
  solver.add_constraint(std::move(se));
  return detail::unpack(solver, solver.solve(), norm.scale, users);
}

/// QoS-only power minimization (no SE floor). SINR constraints are linear in W,
/// so this SDP is an exact relaxation of the rate-constrained problem.
inline SdpSolution solve_qos_sdp(const ChannelMatrix& h, const std::vector<double>& qos,
                                 double power_cap, double noise) {
  const std::size_t users = static_cast<std::size_t>(h.rows());
  if (qos.size() != users) throw std::invalid_argument("QoS vector has the wrong size");
  const auto norm = detail::normalize(h, noise);
  detail::HermitianBarrier solver(norm.h, power_cap / norm.scale);
  const int kk = static_cast<int>(users);
  for (int k = 0; k < kk; ++k) {
    detail::LogAffine g;
    g.linear = Eigen::VectorXd::Zero(kk * kk);
    const double target = std::exp2(qos[static_cast<std::size_t>(k)]) - 1.0;
    for (int i = 0; i < kk; ++i) g.linear(k * kk + i) = (i == k) ? 1.0 / target : -1.0;
    g.constant = -1.0;
    solver.add_constraint(std::move(g));
  }
  auto out = detail::unpack(solver, solver.solve(), norm.scale, users);
  // Report slacks as rate margins rather than the normalized linear form.
  if (out.status != SolveStatus::Infeasible) {
    out.rate_slacks.clear();
    for (std::size_t k = 0; k < users; ++k)
      out.rate_slacks.push_back(trace_rate(h.row(static_cast<Eigen::Index>(k)).transpose(), out.w,
                                           noise, k) - qos[k]);
  }
  return out;
}

struct RankOne {
  CVector w;               // sqrt(lambda_max) * v_max
  double tightness = 0.0;  // lambda_max / Tr(W)
  bool degenerate = false; // Tr(W) < 1e-14
};

/// Dominant eigenpair extraction from a PSD matrix.
inline RankOne extract_rank_one(const CMatrix& w) {
  RankOne out;
  const double tr = w.trace().real();
  out.w = CVector::Zero(w.rows());
  if (!(tr >= 1e-14)) {
    out.degenerate = true;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(w);
  const Eigen::Index top = w.rows() - 1;
  const double lmax = std::max(0.0, es.eigenvalues()(top));
  out.w = std::sqrt(lmax) * es.eigenvectors().col(top);
  out.tightness = std::clamp(lmax / tr, 0.0, 1.0);
  return out;
}

/// Minimal powers p_k along fixed unit directions u_k meeting SINR_k >= targets_k.
/// Returns nullopt when the targets are unreachable along these directions or exceed the cap.
inline std::optional<std::vector<double>> power_control(const ChannelMatrix& h,
                                                        const std::vector<CVector>& directions,
                                                        const std::vector<double>& sinr_targets,
                                                        double noise, double power_cap) {
  const Eigen::Index users = h.rows();
  Eigen::MatrixXd a(users, users);
  Eigen::VectorXd b(users);
  for (Eigen::Index k = 0; k < users; ++k) {
    const CVector hk = h.row(k).transpose();
    for (Eigen::Index i = 0; i < users; ++i) {
      const double gain = std::norm(hk.dot(directions[static_cast<std::size_t>(i)]));
      a(k, i) = (i == k) ? gain : -sinr_targets[static_cast<std::size_t>(k)] * gain;
    }
    b(k) = sinr_targets[static_cast<std::size_t>(k)] * noise;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) return std::nullopt;
  const Eigen::VectorXd p = lu.solve(b);
  if (!p.allFinite() || (p.array() < 0.0).any()) return std::nullopt;
  // Z-matrix with a positive solution: check the residual to reject garbage.
  if ((a * p - b).lpNorm<Eigen::Infinity>() > 1e-8 * b.lpNorm<Eigen::Infinity>()) return std::nullopt;
  if (p.sum() > power_cap * (1.0 + 1e-12)) return std::nullopt;
  return std::vector<double>(p.data(), p.data() + users);
}

struct BeamExtraction {
  SolveStatus status = SolveStatus::NumericalFailure;
  std::vector<CVector> beams;
  std::vector<double> tightness;
  bool used_randomization = false;
  double power = 0.0;
};

/// Turns SDP covariances into beamformers that reproduce their SINRs.
///
/// Directions come from the dominant eigenvectors; powers are re-solved so
/// every user's SINR equals the covariance solution's exactly. When any
/// tightness falls below `tightness_threshold`, `candidates` Gaussian draws
/// shaped by each W_k are tried as well and the cheapest feasible set wins.
inline BeamExtraction extract_beamformers(const ChannelMatrix& h, const MatrixSet& w, double noise,
                                          double power_cap, Rng& rng, int candidates = 200,
                                          double tightness_threshold = 0.999) {
  const std::size_t users = w.size();
  BeamExtraction out;
  std::vector<double> targets(users);
  for (std::size_t k = 0; k < users; ++k) {
    const double r = trace_rate(h.row(static_cast<Eigen::Index>(k)).transpose(), w, noise, k);
    targets[k] = std::exp2(r) - 1.0;
  }

  std::vector<CVector> dominant(users);
  std::vector<CVector> directions(users);
  bool degenerate = false;
  double min_tight = 1.0;
  for (std::size_t k = 0; k < users; ++k) {
    auto r1 = extract_rank_one(w[k]);
    degenerate = degenerate || r1.degenerate;
    out.tightness.push_back(r1.tightness);
    min_tight = std::min(min_tight, r1.tightness);
    dominant[k] = r1.w;
    const double nrm = r1.w.norm();
    directions[k] = nrm > 0.0 ? CVector(r1.w / nrm) : r1.w;
  }
  out.beams = dominant;
  if (degenerate) return out;

  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](const std::vector<CVector>& dirs) {
    auto p = power_control(h, dirs, targets, noise, power_cap);
    if (!p) return;
    const double total = std::accumulate(p->begin(), p->end(), 0.0);
    if (total < best) {
      best = total;
      for (std::size_t k = 0; k < users; ++k) out.beams[k] = std::sqrt((*p)[k]) * dirs[k];
    }
  };
  consider(directions);

  if (min_tight < tightness_threshold || !std::isfinite(best)) {
    out.used_randomization = true;
    std::vector<Eigen::SelfAdjointEigenSolver<CMatrix>> eig;
    for (const auto& wk : w) eig.emplace_back(wk);
    std::vector<CVector> dirs(users);
    for (int c = 0; c < candidates; ++c) {
      for (std::size_t k = 0; k < users; ++k) {
        const auto& es = eig[k];
        const Eigen::Index m = w[k].rows();
        CVector xi(m);
        for (Eigen::Index a = 0; a < m; ++a)
          xi(a) = cdouble(rng.normal(), rng.normal()) * std::sqrt(0.5 * std::max(0.0, es.eigenvalues()(a)));
        CVector v = es.eigenvectors() * xi;
        const double nrm = v.norm();
        dirs[k] = nrm > 0.0 ? CVector(v / nrm) : directions[k];
      }
      consider(dirs);
    }
  }

  if (std::isfinite(best)) {
    out.status = SolveStatus::Optimal;
    out.power = best;
  } else {
    out.beams = dominant;
    out.power = 0.0;
    for (const auto& b : dominant) out.power += b.squaredNorm();
  }
  return out;
}

}  // namespace pass
