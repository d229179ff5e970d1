#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "pass/rng.hpp"

namespace pass {

struct PsoHyperparams {
  int swarm_size = 50;              // I
  int max_iterations = 300;         // T
  double inertia = 0.72;            // alpha
  double cognitive = 1.49;          // c1
  double social = 1.49;             // c2
  double velocity_cap_fraction = 0.2;
  double performance_penalty = 1000.0;  // xi
  double position_penalty = 1000.0;     // eta

  void validate() const {
    if (swarm_size < 2) throw std::invalid_argument("PSO swarm needs at least 2 particles");
    if (max_iterations < 1) throw std::invalid_argument("PSO needs at least 1 iteration");
    if (!(inertia >= 0.0 && inertia <= 1.0)) throw std::invalid_argument("inertia must be in [0, 1]");
    if (!(cognitive >= 0.0) || !(social >= 0.0))
      throw std::invalid_argument("learning factors must be non-negative");
    if (!(performance_penalty >= 0.0) || !(position_penalty >= 0.0))
      throw std::invalid_argument("penalty weights must be non-negative");
    if (!(velocity_cap_fraction > 0.0)) throw std::invalid_argument("velocity cap must be positive");
  }
};

struct Particle {
  std::vector<double> position;
  std::vector<double> velocity;
  std::vector<double> best_position;
  double best_fitness = -std::numeric_limits<double>::infinity();
};

struct PsoResult {
  std::vector<double> best_position;
  double best_fitness = -std::numeric_limits<double>::infinity();
  /// Global-best fitness after initialization (entry 0) and after each iteration.
  std::vector<double> history;
};

/// Optional swarm initialization: explicit starting particles (particle 0 is
/// usually the incumbent) and a projection applied to the random ones.
struct PsoStart {
  std::vector<std::vector<double>> particles;
  std::function<void(std::span<double>)> project;
};

/// Maximizes `fitness` over the box [lo, hi]^D.
///
///   V <- alpha V + c1 b1 (P_best - X) + c2 b2 (G_best - X),  X <- X + V
///
/// b1, b2 ~ U[0, 1] are drawn per particle per iteration. Positions are
/// clamped to the box and velocities to +/- v_frac (hi - lo).
template <class Fitness>
PsoResult pso_optimize(Fitness&& fitness, std::size_t dim, double lo, double hi,
                       const PsoHyperparams& hp, std::uint64_t seed, const PsoStart& start = {}) {
  hp.validate();
  if (dim == 0) throw std::invalid_argument("PSO dimension must be positive");
  if (!(hi > lo)) throw std::invalid_argument("PSO bounds are empty");

  Rng rng(seed);
  const double vmax = hp.velocity_cap_fraction * (hi - lo);
  std::vector<Particle> swarm(static_cast<std::size_t>(hp.swarm_size));
  PsoResult out;

  for (std::size_t i = 0; i < swarm.size(); ++i) {
    auto& p = swarm[i];
    if (i < start.particles.size()) {
      if (start.particles[i].size() != dim) throw std::invalid_argument("seed particle has wrong size");
      p.position = start.particles[i];
      for (auto& x : p.position) x = std::clamp(x, lo, hi);
    } else {
      p.position.resize(dim);
      for (auto& x : p.position) x = rng.uniform(lo, hi);
      if (start.project) start.project(p.position);
    }
    p.velocity.assign(dim, 0.0);
    p.best_position = p.position;
    p.best_fitness = fitness(std::span<const double>(p.position));
    if (p.best_fitness > out.best_fitness) {
      out.best_fitness = p.best_fitness;
      out.best_position = p.position;
    }
  }
  out.history.push_back(out.best_fitness);

  for (int t = 0; t < hp.max_iterations; ++t) {
    for (auto& p : swarm) {
      const double b1 = rng.uniform();
      const double b2 = rng.uniform();
      for (std::size_t d = 0; d < dim; ++d) {
        double v = hp.inertia * p.velocity[d] +
                   hp.cognitive * b1 * (p.best_position[d] - p.position[d]) +
                   hp.social * b2 * (out.best_position[d] - p.position[d]);
        v = std::clamp(v, -vmax, vmax);
        p.velocity[d] = v;
        p.position[d] = std::clamp(p.position[d] + v, lo, hi);
      }
    }
    // Global best is only refreshed after the whole swarm moved (synchronous update).
    for (auto& p : swarm) {
      const double f = fitness(std::span<const double>(p.position));
      if (f > p.best_fitness) {
        p.best_fitness = f;
        p.best_position = p.position;
      }
    }
    for (const auto& p : swarm) {
      if (p.best_fitness > out.best_fitness) {
        out.best_fitness = p.best_fitness;
        out.best_position = p.best_position;
      }
    }
    out.history.push_back(out.best_fitness);
  }
  return out;
}

/// Spacing and range violation of a grouped coordinate vector.
///
/// Each group (one waveguide) is sorted first, then the Delta deficits of
/// consecutive gaps and any overshoot beyond [lo, hi] are summed.
inline double spacing_penalty(std::span<const double> x, double delta, std::size_t group_size,
                              double lo, double hi) {
  if (group_size == 0 || x.size() % group_size != 0)
    throw std::invalid_argument("coordinate vector does not split into equal groups");
  double penalty = 0.0;
  std::vector<double> g(group_size);
  for (std::size_t start = 0; start < x.size(); start += group_size) {
    std::copy(x.begin() + static_cast<std::ptrdiff_t>(start),
              x.begin() + static_cast<std::ptrdiff_t>(start + group_size), g.begin());
    std::sort(g.begin(), g.end());
    for (std::size_t n = 0; n < group_size; ++n) {
      penalty += std::max(0.0, lo - g[n]) + std::max(0.0, g[n] - hi);
      if (n > 0) penalty += std::max(0.0, delta - (g[n] - g[n - 1]));
    }
  }
  return penalty;
}

}  // namespace pass
