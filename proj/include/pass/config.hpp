#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace pass {

inline constexpr double kSpeedOfLight = 2.99792458e8;  // m/s

/// Physical and budget parameters of a pinching-antenna downlink.
///
/// Lengths are in meters, powers in watts, rates in bit/s/Hz. Defaults are
/// the desk-scale setup: 28 GHz, 10 m x 10 m region, waveguides 3 m high and
/// 1 m apart, 100 mW budget, 31.6 mW per RF chain, -90 dBm noise, 1 bit/s/Hz
/// per-user floor.
struct SystemConfig {
  double region_side = 10.0;         // L
  double height = 3.0;               // H
  double waveguide_spacing = 1.0;    // d
  int waveguides = 2;                // M
  int users = 2;                     // K
  int pas_per_waveguide = 4;         // N
  double carrier_hz = 28e9;          // f_c
  double refractive_index = 1.4;     // n_eff
  double noise_w = 1e-12;            // sigma^2
  double max_power_w = 0.1;          // P_max
  double rf_chain_power_w = 0.0316;  // P_RF
  double rate_floor = 1.0;           // gamma_k, same for every user
  double min_spacing = 0.0;          // Delta; <= 0 means lambda/2

  double wavelength() const { return kSpeedOfLight / carrier_hz; }
  double guided_wavelength() const { return wavelength() / refractive_index; }
  /// sqrt(eta) = c / (4 pi f_c).
  double sqrt_eta() const { return kSpeedOfLight / (4.0 * std::numbers::pi * carrier_hz); }
  double eta() const { return sqrt_eta() * sqrt_eta(); }
  double spacing() const { return min_spacing > 0.0 ? min_spacing : wavelength() / 2.0; }
  double half_side() const { return region_side / 2.0; }

  /// y-coordinate of waveguide m (0-based), centered on the origin.
  double waveguide_y(int m) const {
    return (static_cast<double>(m) - (waveguides - 1) / 2.0) * waveguide_spacing;
  }

  std::vector<double> rate_floors() const {
    return std::vector<double>(static_cast<std::size_t>(users), rate_floor);
  }
  double qos_sum() const { return rate_floor * users; }

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw std::invalid_argument(what);
    };
    require(std::isfinite(region_side) && region_side > 0, "L must be positive");
    require(std::isfinite(height) && height > 0, "H must be positive");
    require(std::isfinite(waveguide_spacing) && waveguide_spacing > 0, "d must be positive");
    require(waveguides >= 1, "M must be at least 1");
    require(users >= 1, "K must be at least 1");
    require(waveguides == users, "M must equal K");
    require(pas_per_waveguide >= 1, "N must be at least 1");
    require(std::isfinite(carrier_hz) && carrier_hz > 0, "f_c must be positive");
    require(std::isfinite(refractive_index) && refractive_index > 0, "n_eff must be positive");
    require(std::isfinite(noise_w) && noise_w > 0, "sigma2 must be positive");
    require(std::isfinite(max_power_w) && max_power_w > 0, "P_max must be positive");
    require(std::isfinite(rf_chain_power_w) && rf_chain_power_w > 0, "P_RF must be positive");
    require(std::isfinite(rate_floor) && rate_floor > 0, "gamma must be positive");
    require(std::isfinite(min_spacing) && min_spacing >= 0, "delta_min must be positive");
    require(spacing() * waveguides * pas_per_waveguide <= region_side,
            "M*N*delta_min must fit inside L");
  }
};

/// Ground-level user position; z = 0 is implicit.
struct UserPosition {
  double x = 0.0;
  double y = 0.0;
};

using UserSet = std::vector<UserPosition>;

inline void validate_users(const UserSet& users, const SystemConfig& cfg) {
  if (static_cast<int>(users.size()) != cfg.users)
    throw std::invalid_argument("user count does not match K");
  for (const auto& u : users) {
    if (!(std::abs(u.x) <= cfg.half_side() && std::abs(u.y) <= cfg.half_side()))
      throw std::invalid_argument("user outside the L x L region");
  }
}

}  // namespace pass
