// Solves one user drop at a single SE target with every protocol.
// usage: single_target [config.toml] [eps_se]
#include <cstdio>
#include <cstdlib>
#include <exception>

#include "pass/config_file.hpp"
#include "pass/tradeoff.hpp"

int main(int argc, char** argv) {
  try {
    const pass::SystemConfig cfg = argc > 1 ? pass::load_config(argv[1]) : pass::SystemConfig{};
    const double eps = argc > 2 ? std::atof(argv[2]) : 6.0;
    const auto users = pass::drop_users(cfg, 1, 0);
    for (const auto& u : users) std::printf("user (%.3f, %.3f)\n", u.x, u.y);
    for (auto p : {pass::Protocol::Wm, pass::Protocol::Ws, pass::Protocol::Baseline}) {
      const auto pt = pass::detail::ProtocolSolver(p, users, cfg, {}).solve(eps, 1);
      if (pt.feasible)
        std::printf("%-8s se %.3f  power %.4g W  ee %.2f\n", pass::to_string(p), pt.se, pt.power, pt.ee);
      else
        std::printf("%-8s infeasible\n", pass::to_string(p));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
