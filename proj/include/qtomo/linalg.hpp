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

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Dense>

#include "qtomo/errors.hpp"

namespace qtomo {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

namespace linalg {

/// Eigenvalues in [-kPsdClip, 0) are treated as round-off and clipped before square roots.
inline constexpr double kPsdClip = 1e-10;

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline Matrix hermitian_part(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

inline double hermiticity_error(const Matrix& m) { return max_abs(m - m.adjoint()); }

inline double real_trace(const Matrix& m) { return m.trace().real(); }

inline RealVector hermitian_eigenvalues(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(h), Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

inline double min_eigenvalue(const Matrix& h) { return hermitian_eigenvalues(h).minCoeff(); }

/// Square root of a PSD matrix; eigenvalues in [-kPsdClip, 0) count as zero.
///
/// Eigenvalues below the solver's round-off floor are zeroed too, otherwise a rank-deficient
/// input picks up sqrt(1e-17) ~ 3e-9 contributions from round-off.
inline Matrix psd_sqrt(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(h));
  RealVector ev = solver.eigenvalues();
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -kPsdClip) throw DomainError("psd_sqrt: matrix has a negative eigenvalue");
    ev(i) = ev(i) <= floor ? 0.0 : std::sqrt(ev(i));
  }
  const Matrix& v = solver.eigenvectors();
  return v * ev.cast<Complex>().asDiagonal() * v.adjoint();
}

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues set to zero).
inline Matrix project_psd(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(h));
  RealVector ev = solver.eigenvalues().cwiseMax(0.0);
  const Matrix& v = solver.eigenvectors();
  return v * ev.cast<Complex>().asDiagonal() * v.adjoint();
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Trace over the second tensor factor of a (d*d)x(d*d) matrix.
inline Matrix partial_trace_second(const Matrix& m, Eigen::Index d) {
  Matrix out = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      Complex s{0.0, 0.0};
      for (Eigen::Index a = 0; a < d; ++a) s += m(i * d + a, j * d + a);
      out(i, j) = s;
    }
  }
  return out;
}

/// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2 of two unit-trace PSD matrices, clamped to [0, 1].
///
/// Evaluated as the squared trace norm of sqrt(a) sqrt(b); singular values carry absolute
/// round-off where the eigenvalue route would take its square root.
inline double uhlmann_fidelity(const Matrix& a, const Matrix& b) {
  const Matrix m = psd_sqrt(a) * psd_sqrt(b);
  const double s = Eigen::JacobiSVD<Matrix>(m).singularValues().sum();
  return std::clamp(s * s, 0.0, 1.0);
}

/// Real coordinates of a Hermitian matrix: diagonal, then Re and Im of the strict upper triangle.
inline RealVector hermitian_coordinates(const Matrix& h) {
  const Eigen::Index n = h.rows();
  RealVector out(n * n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) out(k++) = h(i, i).real();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      out(k++) = std::sqrt(2.0) * h(i, j).real();
      out(k++) = std::sqrt(2.0) * h(i, j).imag();
    }
  }
  return out;
}

/// Numerical rank: singular values >= rel_tol * largest singular value.
inline int numerical_rank(const RealMatrix& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<RealMatrix> svd(m);
  const RealVector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) >= rel_tol * sv(0)) ++rank;
  }
  return rank;
}

}  // namespace linalg
}  // namespace qtomo
