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

#include "qtomo/readout.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "qtomo/circuits.hpp"
#include "test_util.hpp"

using namespace qtomo;

namespace {

RealVector diag_of(const Matrix& m) { return m.diagonal().real(); }

RealVector vec3(double a, double b, double c) {
  RealVector v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST(level_readout_operator, noiseless_is_projector) {
  for (int j = 0; j < 3; ++j) {
    EXPECT_EQ(level_readout_operator(3, j, {}), DensityMatrix::basis(3, j).matrix());
  }
}

TEST(level_readout_operator, substitutes_false_rates) {
  const LevelReadoutParams params{0.01, 0.02};
  RealVector d2(2);
  d2 << 0.02, 0.99;
  EXPECT_LE((diag_of(level_readout_operator(2, 1, params)) - d2).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((diag_of(level_readout_operator(3, 2, params)) - vec3(0.02, 0.02, 0.99)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW((void)level_readout_operator(3, 3, params), DomainError);
  EXPECT_THROW((void)level_readout_operator(3, -1, params), DomainError);
}

TEST(cascade_povm, ideal_levels_give_projectors) {
  for (int d = 2; d <= 5; ++d) {
    const PovmSet povm = noisy_cascade_povm(d, {});
    for (int k = 0; k < d; ++k) EXPECT_EQ(povm[static_cast<std::size_t>(k)], DensityMatrix::basis(d, k).matrix());
  }
}

TEST(cascade_povm, noisy_qutrit_diagonals) {
  const PovmSet povm = noisy_cascade_povm(3, {0.01, 0.02});
  EXPECT_LE((diag_of(povm[0]) - vec3(0.9604, 0.0098, 0.0098)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((diag_of(povm[1]) - vec3(0.02, 0.99, 0.02)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((diag_of(povm[2]) - vec3(0.0196, 0.0002, 0.9702)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(cascade_povm, fuzzed_diagonal_levels_sum_to_identity) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    auto rng = RandomSeed{s}.engine();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int d = 2 + static_cast<int>(s % 5);
    std::vector<Matrix> levels;
    for (int j = 1; j < d; ++j) {
      Matrix e = Matrix::Zero(d, d);
      for (int i = 0; i < d; ++i) e(i, i) = unit(rng);
      levels.push_back(e);
    }
    const PovmSet povm = cascade_povm(levels);
    Matrix sum = Matrix::Zero(d, d);
    for (const auto& op : povm.operators()) {
      EXPECT_GE(linalg::min_eigenvalue(op), -1e-12);
      sum += op;
    }
    EXPECT_LE(linalg::max_abs(sum - Matrix::Identity(d, d)), 1e-12);
  }
}

TEST(cascade_povm, rejects_bad_spectrum_and_noncommuting_levels) {
  Matrix big = Matrix::Identity(2, 2) * 1.5;
  EXPECT_THROW((void)cascade_povm({big}), DomainError);

  // Two rank-one projectors that do not commute.
  const Matrix e1 = DensityMatrix::basis(3, 1).matrix();
  Vector v(3);
  v << 0.0, 1.0, 1.0;
  v /= std::sqrt(2.0);
  const Matrix e2 = v * v.adjoint();
  EXPECT_THROW((void)cascade_povm({e1, e2}), DomainError);
}

TEST(gibbs_populations, reference_values) {
  const RealVector a = gibbs_populations({1.0, {0.0, 4.0, 6.0}});
  EXPECT_LE((a - vec3(0.97962921, 0.01794253, 0.00242826)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((gibbs_populations({1e9, {0.0, 4.0, 6.0}}) - RealVector::Constant(3, 1.0 / 3.0)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((gibbs_populations({1.0, {0.0, 0.0, 0.0}}) - RealVector::Constant(3, 1.0 / 3.0)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(gibbs_populations, monotone_for_increasing_levels) {
  for (double t : {0.1, 0.5, 1.0, 3.0, 50.0}) {
    const RealVector a = gibbs_populations({t, {0.0, 1.0, 2.5, 7.0}});
    for (Eigen::Index j = 1; j < a.size(); ++j) EXPECT_LE(a(j), a(j - 1));
  }
}

TEST(gibbs_populations, rejects_nonpositive_temperature) {
  EXPECT_THROW((void)gibbs_populations({0.0, {0.0, 1.0}}), DomainError);
  EXPECT_THROW((void)gibbs_populations({-1.0, {0.0, 1.0}}), DomainError);
  EXPECT_THROW((void)gibbs_populations({1.0, {0.5, 1.0}}), DomainError);
}

TEST(diagonal_spam, trivial_models) {
  EXPECT_EQ(diagonal_spam_state(vec3(1.0, 0.0, 0.0)).matrix(), DensityMatrix::basis(3, 0).matrix());
  const PovmSet povm = diagonal_spam_povm(RealMatrix::Identity(3, 3));
  for (int k = 0; k < 3; ++k) EXPECT_EQ(povm[static_cast<std::size_t>(k)], DensityMatrix::basis(3, k).matrix());
}

TEST(diagonal_spam, rounded_reference_fit_is_valid) {
  RealMatrix b(3, 3);
  b << 0.98, 0.0, 0.01, 0.0, 1.0, 0.0, 0.02, 0.0, 0.99;
  const DiagonalSpamModel model{vec3(0.97, 0.03, 0.0), b};
  EXPECT_NO_THROW(model.validate());
  EXPECT_NO_THROW((void)diagonal_spam_state(model.a));
  const PovmSet povm = diagonal_spam_povm(model.b);
  EXPECT_LE((povm.diagonal_confusion() - b).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(diagonal_spam, rejects_constraint_violations) {
  EXPECT_THROW((void)diagonal_spam_state(vec3(0.9, 0.2, 0.0)), DomainError);
  RealMatrix b = RealMatrix::Identity(3, 3);
  b(0, 0) = 0.9;
  EXPECT_THROW((void)diagonal_spam_povm(b), DomainError);
}

TEST(gauge_transform, zero_is_identity_and_uniform_is_fixed) {
  RealMatrix b(3, 3);
  b << 0.9, 0.05, 0.0, 0.1, 0.9, 0.1, 0.0, 0.05, 0.9;
  const DiagonalSpamModel model{vec3(0.9, 0.07, 0.03), b};
  const auto same = gauge_transform(model, 0.0);
  EXPECT_LE((same.a - model.a).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((same.b - model.b).cwiseAbs().maxCoeff(), 1e-15);

  RealVector half(2);
  half << 0.5, 0.5;
  const DiagonalSpamModel uniform{half, RealMatrix::Identity(2, 2)};
  EXPECT_LE((gauge_transform(uniform, 0.2).a - half).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW((void)gauge_transform(model, 0.5), DomainError);
}

TEST(gauge_transform, preserves_unitary_circuit_probabilities) {
  RealMatrix b(3, 3);
  b << 0.9604, 0.0098, 0.0098, 0.02, 0.99, 0.02, 0.0196, 0.0002, 0.9702;
  const DiagonalSpamModel model{gibbs_populations({1.0, {0.0, 4.0, 6.0}}), b};
  const double p = 0.005;
  const DiagonalSpamModel moved = gauge_transform(model, p);
  EXPECT_NO_THROW(moved.validate());
  const Matrix rho = diagonal_spam_state(model.a).matrix();
  const Matrix rho2 = diagonal_spam_state(moved.a).matrix();
  const PovmSet povm = diagonal_spam_povm(model.b);
  const PovmSet povm2 = diagonal_spam_povm(moved.b);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Matrix u = haar_random_unitary(3, RandomSeed{s}.derive("gauge")).matrix();
    for (std::size_t k = 0; k < 3; ++k) {
      const double p1 = (u * rho * u.adjoint() * povm[k]).trace().real();
      const double p2 = (u * rho2 * u.adjoint() * povm2[k]).trace().real();
      EXPECT_NEAR(p1, p2, 1e-12);
    }
  }
}

TEST(spam, noiseless_limit_is_ideal) {
  const RealVector a = gibbs_populations({1e-3, {0.0, 4.0, 6.0}});
  EXPECT_LE(linalg::max_abs(diagonal_spam_state(a).matrix() - DensityMatrix::basis(3, 0).matrix()), 1e-15);
  const PovmSet povm = noisy_cascade_povm(3, {0.0, 0.0});
  EXPECT_LE((povm.diagonal_confusion() - RealMatrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(LevelReadoutParams, identifiability_threshold) {
  EXPECT_TRUE((LevelReadoutParams{0.01, 0.02}.identifiable()));
  EXPECT_FALSE((LevelReadoutParams{0.3, 0.3}.identifiable()));
  EXPECT_THROW((LevelReadoutParams{1.2, 0.0}.validate()), DomainError);
}
