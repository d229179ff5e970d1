#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "pass/ws_solver.hpp"

using namespace pass;

namespace {

double gain_of(const UserPosition& u, const std::vector<double>& x, double y_m) {
  std::complex<double> s = 0.0;
  for (double v : x) s += oracle::path(u.x, u.y, v, y_m, 3.0, 28e9, 1.4, 10.0);
  return std::abs(s);
}

// Best |h| over pairs on a lambda/1024 grid covering [x_k - 10 lambda, x_k + 10 lambda]^2.
double pair_grid_optimum(const UserPosition& u, double y_m, const SystemConfig& cfg) {
  const double lambda = cfg.wavelength();
  const double step = lambda / 1024.0;
  const int n = 20 * 1024;
  std::vector<std::complex<double>> t(n + 1);
  std::vector<double> xs(n + 1);
  for (int i = 0; i <= n; ++i) {
    xs[i] = u.x - 10.0 * lambda + i * step;
    t[i] = oracle::path(u.x, u.y, xs[i], y_m, 3.0, 28e9, 1.4, 10.0);
  }
  const int gap = static_cast<int>(std::ceil(cfg.spacing() / step - 1e-9));
  double best = 0.0;
  for (int i = 0; i <= n; ++i)
    for (int j = i + gap; j <= n; ++j) best = std::max(best, std::abs(t[i] + t[j]));
  return best;
}

}  // namespace

TEST(SelectWaveguide, NearestWins) {
  SystemConfig cfg;
  EXPECT_EQ(select_waveguide({0.0, 0.3}, cfg), 1);
  EXPECT_EQ(select_waveguide({0.0, -4.0}, cfg), 0);
}

TEST(SelectWaveguide, TieGoesToSmallerIndex) {
  SystemConfig cfg;
  EXPECT_EQ(select_waveguide({2.0, 0.0}, cfg), 0);
}

TEST(SelectWaveguide, ThreeWaveguides) {
  SystemConfig cfg;
  cfg.waveguides = 3;
  cfg.users = 3;
  EXPECT_DOUBLE_EQ(cfg.waveguide_y(0), -1.0);
  EXPECT_EQ(select_waveguide({0.0, -0.6}, cfg), 0);
}

TEST(PlacePas, SinglePaSitsAboveUser) {
  SystemConfig cfg;
  cfg.waveguides = 1;
  cfg.users = 1;
  cfg.pas_per_waveguide = 1;
  const UserPosition u{1.234, 0.7};
  const auto x = place_pas(u, 0, cfg);
  ASSERT_EQ(x.size(), 1u);
  EXPECT_EQ(x[0], u.x);
}

TEST(PlacePas, PairNearGridOptimum) {
  SystemConfig cfg;
  cfg.waveguides = 1;
  cfg.users = 1;
  cfg.pas_per_waveguide = 2;
  const UserPosition u{-0.8, 0.25};
  const auto x = place_pas(u, 0, cfg);
  const double grid = pair_grid_optimum(u, cfg.waveguide_y(0), cfg);
  EXPECT_GE(gain_of(u, x, cfg.waveguide_y(0)), 0.995 * grid);
}

TEST(PlacePas, NeverWorseThanCenteredBlock) {
  SystemConfig cfg;
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const UserPosition u{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
    const int m = select_waveguide(u, cfg);
    const int count = 8;
    const auto x = place_pas(u, m, cfg, count);
    ASSERT_EQ(static_cast<int>(x.size()), count);
    EXPECT_TRUE(layout_is_feasible(PinchingLayout{{x}}, cfg));
    // Delta-spaced block centered on the user, shifted inside the region.
    std::vector<double> block(count);
    for (int n = 0; n < count; ++n) block[n] = u.x + (n - (count - 1) / 2.0) * cfg.spacing();
    const double shift = std::max(0.0, -5.0 - block.front()) - std::max(0.0, block.back() - 5.0);
    for (auto& v : block) v += shift;
    EXPECT_GE(gain_of(u, x, cfg.waveguide_y(m)), gain_of(u, block, cfg.waveguide_y(m)));
  }
}

TEST(PlacePas, GainGrowsWithCount) {
  SystemConfig cfg;
  const UserPosition u{2.5, -1.2};
  double previous = 0.0;
  for (int count = 1; count <= 8; ++count) {
    const auto x = place_pas(u, 0, cfg, count);
    const double g = gain_of(u, x, cfg.waveguide_y(0));
    EXPECT_GE(g, previous);
    previous = g;
  }
  // Close to coherent combining of 8 near-overhead paths.
  EXPECT_GT(previous, 0.95 * 8.0 * oracle::sqrt_eta(28e9) / std::sqrt(9.0 + 0.7 * 0.7));
}

TEST(PlacePas, TooManyPasThrows) {
  SystemConfig cfg;
  EXPECT_THROW(place_pas({0.0, 0.0}, 0, cfg, 2000), std::invalid_argument);
}

TEST(WsMetrics, ZeroPower) {
  SystemConfig cfg;
  const std::vector<double> p = {0.0, 0.0};
  const std::vector<double> g = {1e8, 2e8};
  EXPECT_EQ(ws_se(p, g, cfg), 0.0);
  EXPECT_EQ(ws_ee(0.0, p, cfg), 0.0);
}

TEST(WsMetrics, TimeSharingAverage) {
  SystemConfig cfg;
  const std::vector<double> g = {1e8, 3e8};
  const std::vector<double> p = {15.0 / 1e8, 15.0 / 3e8};
  EXPECT_NEAR(ws_se(p, g, cfg), 4.0, 1e-12);
}

TEST(WsMetrics, EnergyEfficiencyIdentity) {
  SystemConfig cfg;
  cfg.waveguides = 3;
  cfg.users = 3;
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p = {rng.uniform(0, 0.1), rng.uniform(0, 0.1), rng.uniform(0, 0.1)};
    const double se = rng.uniform(1.0, 20.0);
    const double mean = (p[0] + p[1] + p[2]) / 3.0;
    EXPECT_NEAR(ws_ee(se, p, cfg), se / (mean + cfg.rf_chain_power_w), 1e-12 * se);
  }
}

TEST(SolveWs, SingleUserClosedForm) {
  SystemConfig cfg;
  cfg.waveguides = 1;
  cfg.users = 1;
  cfg.pas_per_waveguide = 3;
  const UserSet users = {{0.4, 1.1}};
  const auto s = solve_ws(users, cfg, 6.0);
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  const double g = std::pow(gain_of(users[0], s.users[0].positions, 0.0), 2) / (3.0 * 1e-12);
  EXPECT_NEAR(s.power / ((std::exp2(6.0) - 1.0) / g), 1.0, 1e-9);
  EXPECT_NEAR(s.ee, s.se / (s.power + cfg.rf_chain_power_w), 1e-12 * s.ee);
}

TEST(SolveWs, QosSumUsesFloors) {
  SystemConfig cfg;
  const UserSet users = {{-2.0, -3.0}, {3.0, 2.0}};
  const auto s = solve_ws(users, cfg, 2.0);
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  for (const auto& u : s.users) EXPECT_NEAR(u.power, (std::exp2(2.0) - 1.0) / u.snr_gain, 1e-12 * u.power);
}

TEST(SolveWs, Deterministic) {
  SystemConfig cfg;
  const UserSet users = {{-1.0, 0.4}, {2.0, -2.0}};
  const auto a = solve_ws(users, cfg, 9.0);
  const auto b = solve_ws(users, cfg, 9.0);
  EXPECT_EQ(a.power, b.power);
  for (std::size_t k = 0; k < a.users.size(); ++k) EXPECT_EQ(a.users[k].positions, b.users[k].positions);
}

TEST(SolveWs, PastPowerCapIsInfeasible) {
  SystemConfig cfg;
  const UserSet users = {{-1.0, 0.4}, {2.0, -2.0}};
  EXPECT_EQ(solve_ws(users, cfg, 40.0).status, SolveStatus::Infeasible);
}
