// Brute-force and closed-form reference computations shared by the tests.
// Nothing here calls into the solvers under test.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

constexpr double kC = 2.99792458e8;

inline double sqrt_eta(double fc) { return kC / (4.0 * std::numbers::pi * fc); }

/// Exact WM rates recomputed from scratch: |h_k^H w_k|^2 / (sum_{i!=k} |h_k^H w_i|^2 + s2).
inline std::vector<double> rates(const Eigen::MatrixXcd& h, const std::vector<Eigen::VectorXcd>& w, double s2) {
  std::vector<double> r;
  for (Eigen::Index k = 0; k < h.rows(); ++k) {
    double signal = 0.0, interference = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      std::complex<double> acc = 0.0;
      for (Eigen::Index a = 0; a < h.cols(); ++a) acc += std::conj(h(k, a)) * w[i](a);
      (static_cast<Eigen::Index>(i) == k ? signal : interference) += std::norm(acc);
    }
    r.push_back(std::log2(1.0 + signal / (interference + s2)));
  }
  return r;
}

/// Time-shared minimum power by exhaustive search over K = 3 users: P_1 and
/// P_2 on a uniform grid of `steps` cells, P_3 solved exactly from the SE
/// constraint. The grid spans [floor_i, T] where T is the total of a feasible
/// equal-rate allocation, which bounds every coordinate of the optimum.
inline double waterfill_grid(const std::vector<double>& g, double gamma, double eps, int steps) {
  const double k = static_cast<double>(g.size());
  std::vector<double> floor(g.size());
  double feasible_total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    floor[i] = (std::exp2(k * gamma) - 1.0) / g[i];
    feasible_total += std::max(std::exp2(eps) - 1.0, std::exp2(k * gamma) - 1.0) / g[i];
  }
  double best = feasible_total;
  for (int a = 0; a <= steps; ++a) {
    const double p1 = floor[0] + (feasible_total - floor[0]) * a / steps;
    const double b1 = std::log2(1.0 + p1 * g[0]);
    for (int b = 0; b <= steps; ++b) {
      const double p2 = floor[1] + (feasible_total - floor[1]) * b / steps;
      const double need = k * eps - b1 - std::log2(1.0 + p2 * g[1]);
      const double p3 = std::max(floor[2], (std::exp2(need) - 1.0) / g[2]);
      best = std::min(best, p1 + p2 + p3);
    }
  }
  return best;
}

/// Single-waveguide coefficient written out directly from the path model.
inline std::complex<double> path(double xu, double yu, double xp, double yw, double H, double fc, double neff,
                                 double L) {
  const double lambda = kC / fc;
  const double r = std::sqrt((xu - xp) * (xu - xp) + (yu - yw) * (yu - yw) + H * H);
  const double phase = 2.0 * std::numbers::pi * (r / lambda + (xp + L / 2.0) * neff / lambda);
  return sqrt_eta(fc) / r * std::exp(std::complex<double>(0.0, -phase));
}

}  // namespace oracle
