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

#include "qtomo/qcore.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace qtomo;

TEST(DensityMatrix, rejects_invalid_matrices) {
  Matrix m = Matrix::Identity(2, 2);
  EXPECT_THROW(DensityMatrix{m}, DomainError);  // trace 2
  Matrix neg(2, 2);
  neg << 1.5, 0, 0, -0.5;
  EXPECT_THROW(DensityMatrix{neg}, DomainError);
  Matrix nonherm(2, 2);
  nonherm << 0.5, 0.1, 0.0, 0.5;
  EXPECT_THROW(DensityMatrix{nonherm}, DomainError);
  EXPECT_NO_THROW(DensityMatrix{Matrix::Identity(3, 3) / 3.0});
}

TEST(depolarize, identity_and_full) {
  const auto rho = DensityMatrix::pure(haar_random_state(3, RandomSeed{7}));
  EXPECT_LE(linalg::max_abs(depolarize(rho, 0.0).matrix() - rho.matrix()), 1e-15);
  const auto full = depolarize(DensityMatrix::basis(2, 0), 1.0);
  EXPECT_LE(linalg::max_abs(full.matrix() - Matrix::Identity(2, 2) / 2.0), 1e-15);
  EXPECT_THROW((void)depolarize(rho, -0.1), DomainError);
  EXPECT_THROW((void)depolarize(rho, 1.1), DomainError);
}

TEST(depolarize, pure_state_overlap) {
  // <psi| ((1-p)|psi><psi| + p I/d) |psi> = 1 - p + p/d
  const auto rho = DensityMatrix::pure(haar_random_state(3, RandomSeed{11}));
  EXPECT_NEAR(fidelity_states(depolarize(rho, 0.01), rho), 0.99 + 0.01 / 3.0, 1e-10);
}

TEST(depolarize, commutes_with_unitary_conjugation) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto u = haar_random_unitary(3, RandomSeed{s}.derive("u"));
    const auto rho = test::random_density(3, RandomSeed{s}.derive("rho"));
    const double p = 0.37;
    const auto lhs = depolarize(u.conjugate(rho), p);
    const auto rhs = u.conjugate(depolarize(rho, p));
    EXPECT_LE(linalg::max_abs(lhs.matrix() - rhs.matrix()), 1e-12);
    EXPECT_NEAR(lhs.matrix().trace().real(), 1.0, 1e-12);
    EXPECT_LE(linalg::hermiticity_error(lhs.matrix()), 1e-12);
  }
}

TEST(fidelity_states, basic_values) {
  const auto rho = test::random_density(3, RandomSeed{3});
  EXPECT_NEAR(fidelity_states(rho, rho), 1.0, 1e-10);
  EXPECT_NEAR(fidelity_states(DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)), 0.0, 1e-12);
  // Commuting pair: (sum_i sqrt(p_i q_i))^2 = (sqrt(1 * 1/2))^2
  EXPECT_NEAR(fidelity_states(DensityMatrix::basis(2, 0), DensityMatrix::maximally_mixed(2)), 0.5, 1e-12);
  EXPECT_THROW((void)fidelity_states(DensityMatrix::basis(2, 0), DensityMatrix::basis(3, 0)), DomainError);
}

TEST(fidelity_states, properties) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto a = test::random_density(3, RandomSeed{s}.derive("a"));
    const auto b = test::random_density(3, RandomSeed{s}.derive("b"));
    const double fab = fidelity_states(a, b);
    EXPECT_GE(fab, 0.0);
    EXPECT_LE(fab, 1.0);
    EXPECT_NEAR(fab, fidelity_states(b, a), 1e-10);

    const Vector psi = haar_random_state(3, RandomSeed{s}.derive("psi"));
    const Vector phi = haar_random_state(3, RandomSeed{s}.derive("phi"));
    const double overlap = std::norm(psi.dot(phi));
    EXPECT_NEAR(fidelity_states(DensityMatrix::pure(psi), DensityMatrix::pure(phi)), overlap, 1e-9);
  }
}

TEST(haar_random_state, normalized_deterministic_and_unbiased) {
  EXPECT_THROW((void)haar_random_state(1, RandomSeed{1}), DomainError);
  const Vector a = haar_random_state(3, RandomSeed{42});
  const Vector b = haar_random_state(3, RandomSeed{42});
  EXPECT_NEAR(a.norm(), 1.0, 1e-12);
  EXPECT_EQ(a, b);

  // E|<0|psi>|^2 = 1/d under the Haar measure.
  double mean = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) mean += std::norm(haar_random_state(3, RandomSeed{99}.derive("s", i))(0));
  EXPECT_NEAR(mean / draws, 1.0 / 3.0, 0.01);
}

TEST(haar_random_unitary, unitary_deterministic_and_unbiased) {
  const auto u = haar_random_unitary(3, RandomSeed{5});
  EXPECT_LE(linalg::max_abs(u.matrix().adjoint() * u.matrix() - Matrix::Identity(3, 3)), 1e-12);
  EXPECT_EQ(u.matrix(), haar_random_unitary(3, RandomSeed{5}).matrix());
  double mean = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) mean += std::norm(haar_random_unitary(3, RandomSeed{17}.derive("u", i)).matrix()(0, 0));
  EXPECT_NEAR(mean / draws, 1.0 / 3.0, 0.01);
}

TEST(choi, identity_channel_and_full_depolarization) {
  const auto rho = test::random_density(3, RandomSeed{21});
  const auto id = choi_from_unitary(UnitaryMatrix::identity(3));
  EXPECT_LE(linalg::max_abs(apply_choi(id, rho).matrix() - rho.matrix()), 1e-12);
  const auto dep = choi_compose_depolarize(id, 1.0);
  EXPECT_LE(linalg::max_abs(apply_choi(dep, rho).matrix() - Matrix::Identity(3, 3) / 3.0), 1e-12);
}

TEST(choi, matches_direct_conjugation) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto u = haar_random_unitary(3, RandomSeed{s}.derive("u"));
    const auto rho = test::random_density(3, RandomSeed{s}.derive("rho"));
    const auto out = apply_choi(choi_from_unitary(u), rho);
    EXPECT_LE(linalg::max_abs(out.matrix() - u.matrix() * rho.matrix() * u.matrix().adjoint()), 1e-12);

    const double p = 0.2;
    const auto noisy = apply_choi(choi_compose_depolarize(choi_from_unitary(u), p), rho);
    EXPECT_LE(linalg::max_abs(noisy.matrix() - depolarize(u.conjugate(rho), p).matrix()), 1e-12);
  }
}

TEST(choi, probability_rule_is_linear_in_choi) {
  const auto u = haar_random_unitary(3, RandomSeed{8});
  const auto rho = test::random_density(3, RandomSeed{9});
  const auto choi = choi_compose_depolarize(choi_from_unitary(u), 0.1);
  const Matrix effect = test::random_density(3, RandomSeed{10}).matrix();
  const double direct = (apply_choi(choi, rho).matrix() * effect).trace().real();
  const double via_choi = (choi.matrix() * linalg::kron(rho.matrix().transpose(), effect)).trace().real();
  EXPECT_NEAR(direct, via_choi, 1e-12);
}

TEST(choi, rejects_non_trace_preserving) {
  const Matrix half = choi_from_unitary(UnitaryMatrix::identity(2)).matrix() * 0.5;
  EXPECT_THROW(ChoiMatrix{half}, DomainError);
  const ChoiMatrix cp_only(half, ChoiMatrix::Check::kCpOnly);
  EXPECT_THROW((void)apply_choi(cp_only, DensityMatrix::basis(2, 0)), DomainError);
}

TEST(process_fidelity, values_and_invariance) {
  const auto u = haar_random_unitary(3, RandomSeed{12});
  const auto ju = choi_from_unitary(u);
  EXPECT_NEAR(process_fidelity(ju, ju), 1.0, 1e-10);
  // (1 - p) + p / d^2 for a pure Choi state against its depolarized version.
  EXPECT_NEAR(process_fidelity(ju, choi_compose_depolarize(ju, 0.01)), 1.0 - 0.01 * (1.0 - 1.0 / 9.0), 1e-10);

  const auto v = haar_random_unitary(3, RandomSeed{13});
  const auto a = choi_compose_depolarize(choi_from_unitary(haar_random_unitary(3, RandomSeed{14})), 0.05);
  const auto b = choi_compose_depolarize(ju, 0.02);
  // Post-composing both channels with the same unitary V maps J -> (I (x) V) J (I (x) V)^dagger.
  const Matrix w = linalg::kron(Matrix::Identity(3, 3), v.matrix());
  const ChoiMatrix a2(linalg::hermitian_part(w * a.matrix() * w.adjoint()));
  const ChoiMatrix b2(linalg::hermitian_part(w * b.matrix() * w.adjoint()));
  EXPECT_NEAR(process_fidelity(a, b), process_fidelity(a2, b2), 1e-10);
  EXPECT_THROW((void)process_fidelity(ju, choi_from_unitary(UnitaryMatrix::identity(2))), DomainError);
}

TEST(RandomSeed, derive_is_deterministic_and_label_sensitive) {
  const RandomSeed root{123};
  EXPECT_EQ(root.derive("a", 1), root.derive("a", 1));
  EXPECT_NE(root.derive("a", 1), root.derive("a", 2));
  EXPECT_NE(root.derive("a", 1), root.derive("b", 1));
}
