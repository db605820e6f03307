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

#include "qtomo/optimize.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace qtomo;

TEST(genetic_optimize, convex_bowl) {
  const auto f = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s -= (v - 0.3) * (v - 0.3);
    return s;
  };
  const auto r = genetic_optimize(f, std::vector<Bound>(3, Bound{0.0, 1.0}));
  ASSERT_EQ(r.params.size(), 3u);
  for (double v : r.params) EXPECT_NEAR(v, 0.3, 1e-3);
  EXPECT_GT(r.evaluations, 0);
}

TEST(genetic_optimize, multimodal_matches_grid_search) {
  const auto f = [](std::span<const double> x) { return std::sin(5.0 * x[0]) + x[0]; };
  double best_x = 0.0;
  double best_v = -1e300;
  for (int i = 0; i <= 2000000; ++i) {
    const double x = 2.0 * i / 2000000.0;
    const double v = std::sin(5.0 * x) + x;
    if (v > best_v) {
      best_v = v;
      best_x = x;
    }
  }
  OptimizerConfig config;
  config.restarts = 10;
  const auto r = genetic_optimize(f, {Bound{0.0, 2.0}}, config);
  EXPECT_NEAR(r.params[0], best_x, 1e-2);
  EXPECT_NEAR(r.value, best_v, 1e-6);
}

TEST(genetic_optimize, deterministic_under_seed) {
  const auto f = [](std::span<const double> x) { return -std::abs(x[0] - 0.7) - std::abs(x[1] + 0.2); };
  const std::vector<Bound> box{{0.0, 1.0}, {-1.0, 1.0}};
  OptimizerConfig config;
  config.generations = 50;
  const auto a = genetic_optimize(f, box, config);
  const auto b = genetic_optimize(f, box, config);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.value, b.value);
  config.seed = RandomSeed{1};
  const auto c = genetic_optimize(f, box, config);
  EXPECT_NE(a.params, c.params);
}

TEST(genetic_optimize, respects_bounds_and_rejects_bad_input) {
  const auto f = [](std::span<const double> x) { return x[0]; };
  const auto r = genetic_optimize(f, {Bound{-2.0, 3.0}});
  EXPECT_LE(r.params[0], 3.0);
  EXPECT_NEAR(r.params[0], 3.0, 1e-9);
  EXPECT_THROW((void)genetic_optimize(f, {Bound{1.0, 1.0}}), DomainError);
  EXPECT_THROW((void)genetic_optimize(f, {Bound{0.0, INFINITY}}), DomainError);
  EXPECT_THROW((void)genetic_optimize(f, {}), DomainError);
  OptimizerConfig bad;
  bad.elite_fraction = 1.0;
  EXPECT_THROW((void)genetic_optimize(f, {Bound{0.0, 1.0}}, bad), DomainError);
}

TEST(genetic_optimize, non_finite_objective_values_lose) {
  const auto f = [](std::span<const double> x) { return x[0] < 0.5 ? std::nan("") : -x[0]; };
  const auto r = genetic_optimize(f, {Bound{0.0, 1.0}});
  EXPECT_NEAR(r.params[0], 0.5, 1e-3);
}

TEST(genetic_optimize, polish_reaches_narrow_ridge_optimum) {
  // Maximum at (0.5, 0.5) on a ridge 100x narrower across than along.
  const auto f = [](std::span<const double> x) {
    const double across = x[0] - x[1];
    const double along = x[0] + x[1] - 1.0;
    return -1e4 * across * across - along * along;
  };
  const std::vector<Bound> box(2, Bound{0.0, 1.0});
  OptimizerConfig config;
  config.generations = 40;
  config.restarts = 1;
  config.polish_evaluations = 0;
  const auto rough = genetic_optimize(f, box, config);
  config.polish_evaluations = 5000;
  const auto polished = genetic_optimize(f, box, config);
  EXPECT_GE(polished.value, rough.value);
  EXPECT_NEAR(polished.params[0], 0.5, 1e-5);
  EXPECT_NEAR(polished.params[1], 0.5, 1e-5);
  EXPECT_GT(polished.evaluations, rough.evaluations);
}

TEST(nelder_mead_polish, stays_in_bounds) {
  const auto f = [](std::span<const double> x) { return x[0] + 2.0 * x[1]; };
  const std::vector<Bound> box{{0.0, 1.0}, {-1.0, 0.5}};
  const auto r = nelder_mead_polish(f, box, {0.2, 0.0}, f(std::vector<double>{0.2, 0.0}), 5000, 1e-12);
  EXPECT_NEAR(r.params[0], 1.0, 1e-6);
  EXPECT_NEAR(r.params[1], 0.5, 1e-6);
  EXPECT_THROW((void)nelder_mead_polish(f, box, {0.2}, 0.0, 10, 1e-12), DomainError);
}
