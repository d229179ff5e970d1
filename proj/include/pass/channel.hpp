#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "pass/config.hpp"

namespace pass {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Entry (k, m) is h_k(x_m), the coefficient from waveguide m to user k.
/// Row k is the user's channel vector h_k across the M waveguide feeds.
using ChannelMatrix = CMatrix;

/// Per-waveguide PA x-coordinates. The feed point (-L/2, y_m, H) is implicit.
struct PinchingLayout {
  std::vector<std::vector<double>> x;

  std::size_t waveguides() const { return x.size(); }
  std::size_t total_pas() const {
    std::size_t n = 0;
    for (const auto& w : x) n += w.size();
    return n;
  }
  /// Waveguide-major flattening, PA (m, n) at index m*N + n.
  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(total_pas());
    for (const auto& w : x) out.insert(out.end(), w.begin(), w.end());
    return out;
  }
  static PinchingLayout from_flat(std::span<const double> flat, int waveguides) {
    PinchingLayout layout;
    const std::size_t per = flat.size() / static_cast<std::size_t>(waveguides);
    layout.x.resize(static_cast<std::size_t>(waveguides));
    for (std::size_t m = 0; m < layout.x.size(); ++m)
      layout.x[m].assign(flat.begin() + static_cast<std::ptrdiff_t>(m * per),
                         flat.begin() + static_cast<std::ptrdiff_t>((m + 1) * per));
    return layout;
  }
};

namespace detail {

inline void check_coordinates(std::span<const double> x, const SystemConfig& cfg) {
  const double half = cfg.half_side();
  for (std::size_t n = 0; n < x.size(); ++n) {
    if (!(x[n] >= -half && x[n] <= half))
      throw std::invalid_argument("PA coordinate outside [-L/2, L/2]");
    if (n > 0 && !(x[n] > x[n - 1]))
      throw std::invalid_argument("PA coordinates must be strictly increasing");
  }
}

/// Sum over PAs of sqrt(eta) exp(-j 2pi (r/lambda + (x + L/2)/lambda_g)) / r.
/// No ordering or range checks; coincident PAs are allowed.
inline cdouble waveguide_channel_unchecked(const UserPosition& u, std::span<const double> x,
                                           double y_m, const SystemConfig& cfg) {
  const double inv_lambda = 1.0 / cfg.wavelength();
  const double inv_lambda_g = 1.0 / cfg.guided_wavelength();
  const double dy = u.y - y_m;
  const double d2 = dy * dy + cfg.height * cfg.height;
  const double half = cfg.half_side();
  cdouble sum{0.0, 0.0};
  for (double xn : x) {
    const double dx = u.x - xn;
    const double r = std::sqrt(dx * dx + d2);
    const double phase = 2.0 * std::numbers::pi * (r * inv_lambda + (xn + half) * inv_lambda_g);
    sum += std::polar(1.0 / r, -phase);
  }
  return cfg.sqrt_eta() * sum;
}

inline ChannelMatrix channel_matrix_unchecked(const UserSet& users, const PinchingLayout& layout,
                                              const SystemConfig& cfg) {
  ChannelMatrix h(static_cast<Eigen::Index>(users.size()),
                  static_cast<Eigen::Index>(layout.waveguides()));
  for (std::size_t k = 0; k < users.size(); ++k)
    for (std::size_t m = 0; m < layout.waveguides(); ++m)
      h(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) = waveguide_channel_unchecked(
          users[k], layout.x[m], cfg.waveguide_y(static_cast<int>(m)), cfg);
  return h;
}

}  // namespace detail

/// In-waveguide propagation from the feed to each PA: exp(-j 2pi (x_n + L/2) / lambda_g).
inline CVector inwaveguide_vector(std::span<const double> x, const SystemConfig& cfg) {
  detail::check_coordinates(x, cfg);
  CVector e(static_cast<Eigen::Index>(x.size()));
  const double k_g = 2.0 * std::numbers::pi / cfg.guided_wavelength();
  for (std::size_t n = 0; n < x.size(); ++n)
    e(static_cast<Eigen::Index>(n)) = std::polar(1.0, -k_g * (x[n] + cfg.half_side()));
  return e;
}

/// Line-of-sight coefficients sqrt(eta) exp(-j 2pi r_n / lambda) / r_n from each PA to the user.
inline CVector freespace_vector(const UserPosition& u, std::span<const double> x, double y_m,
                                const SystemConfig& cfg) {
  detail::check_coordinates(x, cfg);
  CVector h(static_cast<Eigen::Index>(x.size()));
  const double k0 = 2.0 * std::numbers::pi / cfg.wavelength();
  const double dy = u.y - y_m;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double dx = u.x - x[n];
    const double r = std::sqrt(dx * dx + dy * dy + cfg.height * cfg.height);
    h(static_cast<Eigen::Index>(n)) = cfg.sqrt_eta() * std::polar(1.0 / r, -k0 * r);
  }
  return h;
}

/// Complete coefficient h_k(x_m): the free-space and in-waveguide phases
/// accumulate along each PA path and the N path contributions add.
inline cdouble waveguide_channel(const UserPosition& u, std::span<const double> x, double y_m,
                                 const SystemConfig& cfg) {
  detail::check_coordinates(x, cfg);
  return detail::waveguide_channel_unchecked(u, x, y_m, cfg);
}

inline ChannelMatrix channel_matrix(const UserSet& users, const PinchingLayout& layout,
                                    const SystemConfig& cfg) {
  for (const auto& w : layout.x) detail::check_coordinates(w, cfg);
  return detail::channel_matrix_unchecked(users, layout, cfg);
}

/// True when every waveguide is sorted with gaps >= Delta and inside [-L/2, L/2].
inline bool layout_is_feasible(const PinchingLayout& layout, const SystemConfig& cfg,
                               double tol = 1e-12) {
  const double half = cfg.half_side();
  const double delta = cfg.spacing();
  for (const auto& w : layout.x) {
    for (std::size_t n = 0; n < w.size(); ++n) {
      if (w[n] < -half - tol || w[n] > half + tol) return false;
      if (n > 0 && w[n] - w[n - 1] < delta - tol) return false;
    }
  }
  return true;
}

/// Sort, push left-to-right to enforce Delta, then pull back from +L/2 and
/// clamp at -L/2. Requires N*Delta <= L.
inline void repair_waveguide(std::vector<double>& x, const SystemConfig& cfg) {
  if (x.empty()) return;
  const double half = cfg.half_side();
  const double delta = cfg.spacing();
  std::sort(x.begin(), x.end());
  x.front() = std::clamp(x.front(), -half, half);
  for (std::size_t n = 1; n < x.size(); ++n) x[n] = std::max(x[n], x[n - 1] + delta);
  if (x.back() > half) {
    x.back() = half;
    for (std::size_t n = x.size() - 1; n-- > 0;) x[n] = std::min(x[n], x[n + 1] - delta);
  }
  if (x.front() < -half) {
    // Only reachable when the block barely fits; lay it out from the left edge.
    x.front() = -half;
    for (std::size_t n = 1; n < x.size(); ++n) x[n] = std::max(x[n], x[n - 1] + delta);
  }
}

inline void repair_layout(PinchingLayout& layout, const SystemConfig& cfg) {
  for (auto& w : layout.x) repair_waveguide(w, cfg);
}

}  // namespace pass
