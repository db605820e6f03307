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

// Quantum primitives on a single qudit: states, unitaries, channels in Choi
// form, fidelities and Haar sampling.

#pragma once

#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "qtomo/errors.hpp"
#include "qtomo/linalg.hpp"
#include "qtomo/random.hpp"

namespace qtomo {

namespace tol {
inline constexpr double kHermitian = 1e-12;
inline constexpr double kTrace = 1e-12;
inline constexpr double kPsd = 1e-10;
inline constexpr double kUnitary = 1e-12;
inline constexpr double kTracePreserving = 1e-10;
}  // namespace tol

/// d x d Hermitian, positive semidefinite, unit-trace matrix.
class DensityMatrix {
 public:
  /// Validates every invariant; throws DomainError on violation.
  explicit DensityMatrix(Matrix mat) : mat_(std::move(mat)) {
    detail::require(mat_.rows() == mat_.cols() && mat_.rows() >= 1, "DensityMatrix: matrix must be square");
    detail::require(mat_.allFinite(), "DensityMatrix: non-finite entries");
    detail::require(linalg::hermiticity_error(mat_) <= tol::kHermitian, "DensityMatrix: not Hermitian");
    detail::require(std::abs(mat_.trace() - Complex(1.0)) <= tol::kTrace, "DensityMatrix: trace differs from 1");
    detail::require(linalg::min_eigenvalue(mat_) >= -tol::kPsd, "DensityMatrix: not positive semidefinite");
  }

  /// Hermitizes and trace-normalizes a matrix known to be PSD, skipping the eigenvalue check.
  [[nodiscard]] static DensityMatrix from_trusted(const Matrix& mat) {
    Matrix h = linalg::hermitian_part(mat);
    h /= h.trace().real();
    return DensityMatrix(std::move(h), Trusted{});
  }

  [[nodiscard]] static DensityMatrix pure(const Vector& psi) {
    const double n = psi.norm();
    detail::require(n > 0.0 && std::isfinite(n), "DensityMatrix::pure: zero or non-finite vector");
    const Vector u = psi / n;
    return from_trusted(u * u.adjoint());
  }

  [[nodiscard]] static DensityMatrix basis(int d, int k) {
    detail::require(d >= 1 && k >= 0 && k < d, "DensityMatrix::basis: level out of range");
    Matrix m = Matrix::Zero(d, d);
    m(k, k) = 1.0;
    return DensityMatrix(std::move(m), Trusted{});
  }

  [[nodiscard]] static DensityMatrix maximally_mixed(int d) {
    detail::require(d >= 1, "DensityMatrix::maximally_mixed: bad dimension");
    return DensityMatrix(Matrix::Identity(d, d) / static_cast<double>(d), Trusted{});
  }

  [[nodiscard]] int dim() const { return static_cast<int>(mat_.rows()); }
  [[nodiscard]] const Matrix& matrix() const { return mat_; }

 private:
  struct Trusted {};
  DensityMatrix(Matrix mat, Trusted) : mat_(std::move(mat)) {}

  Matrix mat_;
};

class UnitaryMatrix {
 public:
  explicit UnitaryMatrix(Matrix mat) : mat_(std::move(mat)) {
    detail::require(mat_.rows() == mat_.cols() && mat_.rows() >= 1, "UnitaryMatrix: matrix must be square");
    detail::require(mat_.allFinite(), "UnitaryMatrix: non-finite entries");
    const auto n = mat_.rows();
    detail::require(linalg::max_abs(mat_.adjoint() * mat_ - Matrix::Identity(n, n)) <= tol::kUnitary,
                    "UnitaryMatrix: U^dagger U differs from identity");
  }

  [[nodiscard]] static UnitaryMatrix identity(int d) { return UnitaryMatrix(Matrix::Identity(d, d)); }

  [[nodiscard]] int dim() const { return static_cast<int>(mat_.rows()); }
  [[nodiscard]] const Matrix& matrix() const { return mat_; }
  [[nodiscard]] UnitaryMatrix adjoint() const { return UnitaryMatrix(mat_.adjoint()); }

  /// U rho U^dagger
  [[nodiscard]] DensityMatrix conjugate(const DensityMatrix& rho) const {
    detail::require(rho.dim() == dim(), "UnitaryMatrix::conjugate: dimension mismatch");
    return DensityMatrix::from_trusted(mat_ * rho.matrix() * mat_.adjoint());
  }

  friend UnitaryMatrix operator*(const UnitaryMatrix& a, const UnitaryMatrix& b) {
    detail::require(a.dim() == b.dim(), "UnitaryMatrix product: dimension mismatch");
    return UnitaryMatrix(a.mat_ * b.mat_);
  }

 private:
  Matrix mat_;
};

/// Choi matrix J = sum_ij |i><j| (x) L(|i><j|) of a channel on a d-level system.
///
/// Row/column index of J is (input * d + output).  Outcome probabilities follow
/// Tr(L(rho) P) = Tr(J (rho^T (x) P)).
class ChoiMatrix {
 public:
  enum class Check { kCptp, kCpOnly };

  explicit ChoiMatrix(Matrix mat, Check check = Check::kCptp) : mat_(std::move(mat)) {
    detail::require(mat_.rows() == mat_.cols(), "ChoiMatrix: matrix must be square");
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(mat_.rows()))));
    detail::require(d >= 1 && d * d == mat_.rows(), "ChoiMatrix: size is not a perfect square");
    dim_ = static_cast<int>(d);
    detail::require(mat_.allFinite(), "ChoiMatrix: non-finite entries");
    detail::require(linalg::hermiticity_error(mat_) <= tol::kHermitian, "ChoiMatrix: not Hermitian");
    detail::require(linalg::min_eigenvalue(mat_) >= -tol::kPsd, "ChoiMatrix: not positive semidefinite");
    if (check == Check::kCptp) {
      detail::require(trace_preserving_error() <= tol::kTracePreserving, "ChoiMatrix: not trace preserving");
    }
  }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] const Matrix& matrix() const { return mat_; }

  /// Max-norm distance of the output partial trace from the identity.
  [[nodiscard]] double trace_preserving_error() const {
    return linalg::max_abs(linalg::partial_trace_second(mat_, dim_) - Matrix::Identity(dim_, dim_));
  }

 private:
  Matrix mat_;
  int dim_ = 0;
};

inline void require_probability(double p, const char* what) {
  detail::require(std::isfinite(p) && p >= 0.0 && p <= 1.0, std::string(what) + ": probability outside [0, 1]");
}

/// (1 - p) rho + p I / d
[[nodiscard]] inline DensityMatrix depolarize(const DensityMatrix& rho, double p) {
  require_probability(p, "depolarize");
  const int d = rho.dim();
  Matrix out = (1.0 - p) * rho.matrix();
  out.diagonal().array() += p / d;
  return DensityMatrix::from_trusted(out);
}

/// Depolarizing map on an arbitrary operator (used for effective operators and adjoints; self-adjoint).
[[nodiscard]] inline Matrix depolarize_operator(const Matrix& x, double p) {
  const auto d = x.rows();
  Matrix out = (1.0 - p) * x;
  out.diagonal().array() += p * x.trace() / static_cast<double>(d);
  return out;
}

[[nodiscard]] inline double fidelity_states(const DensityMatrix& rho, const DensityMatrix& sigma) {
  detail::require(rho.dim() == sigma.dim(), "fidelity_states: dimension mismatch");
  return linalg::uhlmann_fidelity(rho.matrix(), sigma.matrix());
}

[[nodiscard]] inline Vector haar_random_state(int d, RandomSeed seed) {
  detail::require(d >= 2, "haar_random_state: dimension must be at least 2");
  auto rng = seed.engine();
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector psi(d);
  for (int i = 0; i < d; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    psi(i) = Complex(re, im);
  }
  return psi / psi.norm();
}

/// Ginibre matrix followed by QR with the phases of diag(R) moved into Q.
[[nodiscard]] inline UnitaryMatrix haar_random_unitary(int d, RandomSeed seed) {
  detail::require(d >= 2, "haar_random_unitary: dimension must be at least 2");
  auto rng = seed.engine();
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      z(i, j) = Complex(re, im);
    }
  }
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < d; ++k) {
    const double mag = std::abs(r(k, k));
    const Complex phase = mag > 0.0 ? r(k, k) / mag : Complex(1.0);
    q.col(k) *= phase;
  }
  return UnitaryMatrix(q);
}

[[nodiscard]] inline ChoiMatrix choi_from_unitary(const UnitaryMatrix& u) {
  const int d = u.dim();
  Vector omega = Vector::Zero(static_cast<Eigen::Index>(d) * d);
  for (int i = 0; i < d; ++i) {
    for (int a = 0; a < d; ++a) omega(i * d + a) = u.matrix()(a, i);
  }
  return ChoiMatrix(omega * omega.adjoint());
}

/// Choi matrix of depolarize(., p) composed after the channel.
[[nodiscard]] inline ChoiMatrix choi_compose_depolarize(const ChoiMatrix& choi, double p) {
  require_probability(p, "choi_compose_depolarize");
  const int d = choi.dim();
  const Matrix in_marginal = linalg::partial_trace_second(choi.matrix(), d);
  Matrix out = (1.0 - p) * choi.matrix() + (p / d) * linalg::kron(in_marginal, Matrix::Identity(d, d));
  return ChoiMatrix(linalg::hermitian_part(out));
}

/// L(rho)_{ab} = sum_ij rho_ij J(i d + a, j d + b)
[[nodiscard]] inline Matrix apply_choi_operator(const Matrix& j, const Matrix& rho) {
  const auto d = rho.rows();
  Matrix out = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      if (rho(i, k) == Complex(0.0)) continue;
      out += rho(i, k) * j.block(i * d, k * d, d, d);
    }
  }
  return out;
}

[[nodiscard]] inline DensityMatrix apply_choi(const ChoiMatrix& choi, const DensityMatrix& rho) {
  detail::require(choi.dim() == rho.dim(), "apply_choi: dimension mismatch");
  detail::require(choi.trace_preserving_error() <= tol::kTracePreserving, "apply_choi: channel is not trace preserving");
  return DensityMatrix::from_trusted(apply_choi_operator(choi.matrix(), rho.matrix()));
}

/// Uhlmann fidelity of the unit-trace Choi states J_a / d and J_b / d.
[[nodiscard]] inline double process_fidelity(const ChoiMatrix& a, const ChoiMatrix& b) {
  detail::require(a.dim() == b.dim(), "process_fidelity: dimension mismatch");
  const double d = a.dim();
  return linalg::uhlmann_fidelity(a.matrix() / d, b.matrix() / d);
}

}  // namespace qtomo
