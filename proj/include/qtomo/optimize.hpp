// Copyright 2026 The qtomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Derivative-free box-constrained maximization with a real-coded genetic algorithm.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "qtomo/errors.hpp"
#include "qtomo/random.hpp"

namespace qtomo {

struct OptimizerConfig {
  int population = 60;
  int generations = 300;
  /// Initial mutation standard deviation as a fraction of each box width.
  double mutation_scale = 0.1;
  double elite_fraction = 0.1;
  int restarts = 5;
  RandomSeed seed{20201101};
  /// A restart stops once the best value improves by less than this over `stall_generations`.
  double tolerance = 1e-12;
  int stall_generations = 80;
  /// Mutation width decays geometrically to mutation_scale * final_mutation_ratio at the last generation.
  double final_mutation_ratio = 1e-6;
  /// Evaluation budget of the Nelder-Mead refinement of the best GA point; 0 disables it.
  int polish_evaluations = 20000;

  void validate() const {
    detail::require(population >= 4, "OptimizerConfig: population must be at least 4");
    detail::require(generations >= 1, "OptimizerConfig: generations must be positive");
    detail::require(mutation_scale > 0.0, "OptimizerConfig: mutation_scale must be positive");
    detail::require(elite_fraction > 0.0 && elite_fraction < 1.0, "OptimizerConfig: elite_fraction must lie in (0, 1)");
    detail::require(restarts >= 1, "OptimizerConfig: restarts must be positive");
    detail::require(tolerance > 0.0, "OptimizerConfig: tolerance must be positive");
    detail::require(stall_generations >= 1, "OptimizerConfig: stall_generations must be positive");
    detail::require(final_mutation_ratio > 0.0 && final_mutation_ratio <= 1.0,
                    "OptimizerConfig: final_mutation_ratio must lie in (0, 1]");
    detail::require(polish_evaluations >= 0, "OptimizerConfig: polish_evaluations must be nonnegative");
  }
};

struct Bound {
  double lower = 0.0;
  double upper = 1.0;
};

struct OptimizeResult {
  std::vector<double> params;
  double value = -std::numeric_limits<double>::infinity();
  std::int64_t evaluations = 0;
  int generations_run = 0;
};

using Objective = std::function<double(std::span<const double>)>;

namespace detail {

inline std::vector<double> clamp_to(std::vector<double> x, const std::vector<Bound>& bounds) {
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = std::clamp(x[j], bounds[j].lower, bounds[j].upper);
  return x;
}

}  // namespace detail

/// Bounded Nelder-Mead maximization from `start`; trial points are clamped into the box.
///
/// The simplex is rebuilt around the incumbent (edge `step` times each box width, halved on
/// each rebuild) until a rebuild gains less than `tolerance` or the budget is spent.
[[nodiscard]] inline OptimizeResult nelder_mead_polish(const Objective& objective, const std::vector<Bound>& bounds,
                                                       std::vector<double> start, double start_value, int max_evaluations,
                                                       double tolerance, double step = 1e-2) {
  const std::size_t n = bounds.size();
  detail::require(start.size() == n, "nelder_mead_polish: start point has the wrong size");
  OptimizeResult out;
  out.params = detail::clamp_to(std::move(start), bounds);
  out.value = start_value;
  auto evaluate = [&](const std::vector<double>& x) {
    ++out.evaluations;
    const double v = objective(std::span<const double>(x));
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  };

  while (out.evaluations < max_evaluations && step > 1e-12) {
    std::vector<std::vector<double>> simplex{out.params};
    std::vector<double> values{out.value};
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> x = out.params;
      const double width = bounds[j].upper - bounds[j].lower;
      x[j] += (x[j] + step * width <= bounds[j].upper ? 1.0 : -1.0) * step * width;
      simplex.push_back(detail::clamp_to(std::move(x), bounds));
      values.push_back(evaluate(simplex.back()));
    }
    const double before = out.value;
    std::vector<std::size_t> order(n + 1);
    while (out.evaluations < max_evaluations) {
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
      const std::size_t best = order.front();
      const std::size_t worst = order.back();
      const std::size_t second = order[n - 1];
      if (values[best] - values[worst] <= tolerance * 1e-3) break;

      std::vector<double> centroid(n, 0.0);
      for (std::size_t i = 0; i <= n; ++i) {
        if (i == worst) continue;
        for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);
      }
      auto along = [&](double t) {
        std::vector<double> x(n);
        for (std::size_t j = 0; j < n; ++j) x[j] = centroid[j] + t * (simplex[worst][j] - centroid[j]);
        return detail::clamp_to(std::move(x), bounds);
      };
      auto reflected = along(-1.0);
      const double fr = evaluate(reflected);
      if (fr > values[best]) {
        auto expanded = along(-2.0);
        const double fe = evaluate(expanded);
        if (fe > fr) {
          simplex[worst] = std::move(expanded);
          values[worst] = fe;
        } else {
          simplex[worst] = std::move(reflected);
          values[worst] = fr;
        }
      } else if (fr > values[second]) {
        simplex[worst] = std::move(reflected);
        values[worst] = fr;
      } else {
        const bool outside = fr > values[worst];
        auto contracted = along(outside ? -0.5 : 0.5);
        const double fc = evaluate(contracted);
        if (fc > std::max(fr, values[worst])) {
          simplex[worst] = std::move(contracted);
          values[worst] = fc;
        } else {
          for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < n; ++j) simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
            values[i] = evaluate(simplex[i]);
          }
        }
      }
    }
    const auto it = std::max_element(values.begin(), values.end());
    if (*it > out.value) {
      out.value = *it;
      out.params = simplex[static_cast<std::size_t>(it - values.begin())];
    }
    if (out.value - before < tolerance) break;
    step *= 0.5;
  }
  return out;
}

/// Maximizes `objective` over the box.
///
/// Uniform initial population, size-3 tournament selection, BLX-0.5 blend crossover,
/// Gaussian mutation scaled to box width with geometric annealing, elitism and a fixed
/// generation budget per restart.  The best point across restarts is then refined with
/// nelder_mead_polish when `polish_evaluations` is positive.
[[nodiscard]] inline OptimizeResult genetic_optimize(const Objective& objective, const std::vector<Bound>& bounds,
                                                     const OptimizerConfig& config = {}) {
  config.validate();
  detail::require(!bounds.empty(), "genetic_optimize: no parameters");
  for (const auto& b : bounds) {
    detail::require(std::isfinite(b.lower) && std::isfinite(b.upper) && b.lower < b.upper,
                    "genetic_optimize: invalid bounds");
  }
  const std::size_t n = bounds.size();
  const auto pop_size = static_cast<std::size_t>(config.population);
  const std::size_t elites = std::max<std::size_t>(1, static_cast<std::size_t>(config.elite_fraction * config.population));

  OptimizeResult best;
  auto evaluate = [&](const std::vector<double>& x) {
    ++best.evaluations;
    const double v = objective(std::span<const double>(x));
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  };

  for (int restart = 0; restart < config.restarts; ++restart) {
    auto rng = config.seed.derive("ga-restart", static_cast<std::uint64_t>(restart)).engine();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<std::vector<double>> pop(pop_size, std::vector<double>(n));
    std::vector<double> fit(pop_size);
    for (std::size_t i = 0; i < pop_size; ++i) {
      for (std::size_t j = 0; j < n; ++j) pop[i][j] = bounds[j].lower + unit(rng) * (bounds[j].upper - bounds[j].lower);
      fit[i] = evaluate(pop[i]);
    }

    auto tournament = [&]() -> std::size_t {
      std::size_t winner = static_cast<std::size_t>(unit(rng) * pop_size) % pop_size;
      for (int t = 1; t < 3; ++t) {
        const std::size_t c = static_cast<std::size_t>(unit(rng) * pop_size) % pop_size;
        if (fit[c] > fit[winner]) winner = c;
      }
      return winner;
    };

    double restart_best = *std::max_element(fit.begin(), fit.end());
    double stall_reference = restart_best;
    int stall = 0;
    const double decay = config.generations > 1
                             ? std::pow(config.final_mutation_ratio, 1.0 / static_cast<double>(config.generations - 1))
                             : 1.0;
    double sigma_fraction = config.mutation_scale;

    int gen = 0;
    for (; gen < config.generations; ++gen) {
      std::vector<std::size_t> order(pop_size);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fit[a] > fit[b]; });

      std::vector<std::vector<double>> next;
      std::vector<double> next_fit;
      next.reserve(pop_size);
      for (std::size_t e = 0; e < elites; ++e) {
        next.push_back(pop[order[e]]);
        next_fit.push_back(fit[order[e]]);
      }
      while (next.size() < pop_size) {
        const auto& pa = pop[tournament()];
        const auto& pb = pop[tournament()];
        std::vector<double> child(n);
        for (std::size_t j = 0; j < n; ++j) {
          const double lo = std::min(pa[j], pb[j]);
          const double hi = std::max(pa[j], pb[j]);
          const double span = hi - lo;
          double x = lo - 0.5 * span + unit(rng) * 2.0 * span;
          const double width = bounds[j].upper - bounds[j].lower;
          x += sigma_fraction * width * normal(rng);
          child[j] = std::clamp(x, bounds[j].lower, bounds[j].upper);
        }
        next_fit.push_back(evaluate(child));
        next.push_back(std::move(child));
      }
      pop = std::move(next);
      fit = std::move(next_fit);
      sigma_fraction *= decay;

      const double gen_best = *std::max_element(fit.begin(), fit.end());
      restart_best = std::max(restart_best, gen_best);
      if (restart_best - stall_reference > config.tolerance) {
        stall_reference = restart_best;
        stall = 0;
      } else if (++stall >= config.stall_generations) {
        ++gen;
        break;
      }
    }
    best.generations_run += gen;

    const auto it = std::max_element(fit.begin(), fit.end());
    if (*it > best.value || best.params.empty()) {
      best.value = *it;
      best.params = pop[static_cast<std::size_t>(it - fit.begin())];
    }
  }
  if (config.polish_evaluations > 0) {
    const auto polished =
        nelder_mead_polish(objective, bounds, best.params, best.value, config.polish_evaluations, config.tolerance);
    best.evaluations += polished.evaluations;
    if (polished.value > best.value) {
      best.value = polished.value;
      best.params = polished.params;
    }
  }
  return best;
}

}  // namespace qtomo
