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

// Readout and initialization models: the sequential level-readout cascade,
// false-negative/false-positive level reads, thermal initialization and the
// diagonal (classical) SPAM model together with its gauge freedom.

#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "qtomo/errors.hpp"
#include "qtomo/linalg.hpp"
#include "qtomo/qcore.hpp"

namespace qtomo {

/// Ordered measurement operators Pi_0 ... Pi_{d-1}; outcome 0 is "no click".
class PovmSet {
 public:
  explicit PovmSet(std::vector<Matrix> operators) : ops_(std::move(operators)) {
    detail::require(ops_.size() >= 2, "PovmSet: need at least two outcomes");
    const auto d = ops_.front().rows();
    Matrix sum = Matrix::Zero(d, d);
    for (const auto& op : ops_) {
      detail::require(op.rows() == d && op.cols() == d, "PovmSet: operator dimension mismatch");
      detail::require(op.allFinite(), "PovmSet: non-finite operator");
      detail::require(linalg::hermiticity_error(op) <= 1e-10, "PovmSet: operator is not Hermitian");
      detail::require(linalg::min_eigenvalue(op) >= -1e-10, "PovmSet: operator is not positive semidefinite");
      sum += op;
    }
    detail::require(linalg::max_abs(sum - Matrix::Identity(d, d)) <= 1e-10, "PovmSet: operators do not sum to identity");
  }

  [[nodiscard]] static PovmSet computational(int d) {
    std::vector<Matrix> ops;
    for (int k = 0; k < d; ++k) ops.push_back(DensityMatrix::basis(d, k).matrix());
    return PovmSet(std::move(ops));
  }

  [[nodiscard]] int dim() const { return static_cast<int>(ops_.front().rows()); }
  [[nodiscard]] std::size_t size() const { return ops_.size(); }
  [[nodiscard]] const std::vector<Matrix>& operators() const { return ops_; }
  [[nodiscard]] const Matrix& operator[](std::size_t k) const { return ops_[k]; }

  /// b_{kj} = <j|Pi_k|j>: the classical confusion matrix of a diagonal POVM.
  [[nodiscard]] RealMatrix diagonal_confusion() const {
    const int d = dim();
    RealMatrix b(static_cast<Eigen::Index>(ops_.size()), d);
    for (std::size_t k = 0; k < ops_.size(); ++k) {
      for (int j = 0; j < d; ++j) b(static_cast<Eigen::Index>(k), j) = ops_[k](j, j).real();
    }
    return b;
  }

 private:
  std::vector<Matrix> ops_;
};

/// False-negative (b0) and false-positive (b1) probabilities of a single level read.
struct LevelReadoutParams {
  double b0 = 0.0;
  double b1 = 0.0;

  void validate() const {
    require_probability(b0, "LevelReadoutParams.b0");
    require_probability(b1, "LevelReadoutParams.b1");
  }
  /// Below this the click/no-click labels are not dominated by flips.
  [[nodiscard]] bool identifiable() const { return b0 + b1 <= 0.5; }
};

/// Thermal initialization: populations exp(-omega_j / T) / Z.
struct GibbsInitParams {
  double temperature = 1.0;
  std::vector<double> omegas;

  void validate() const {
    detail::require(std::isfinite(temperature) && temperature > 0.0, "GibbsInitParams: temperature must be positive");
    detail::require(omegas.size() >= 2, "GibbsInitParams: need at least two levels");
    detail::require(omegas.front() == 0.0, "GibbsInitParams: omegas[0] must be 0");
    for (double w : omegas) detail::require(std::isfinite(w), "GibbsInitParams: non-finite level energy");
  }
};

/// E_j = (1 - b0)|j><j| + b1 (I - |j><j|)
[[nodiscard]] inline Matrix level_readout_operator(int d, int j, const LevelReadoutParams& params) {
  detail::require(d >= 2, "level_readout_operator: dimension must be at least 2");
  detail::require(j >= 0 && j < d, "level_readout_operator: level out of range");
  params.validate();
  Matrix e = Matrix::Identity(d, d) * params.b1;
  e(j, j) = 1.0 - params.b0;
  return e;
}

/// Sequential readout of levels 1..d-1 that stops at the first click.
///
/// Pi_1 = E_1, Pi_k = E_k (I - E_{k-1}) ... (I - E_1), Pi_0 = (I - E_{d-1}) ... (I - E_1).
/// `levels[i]` holds E_{i+1}.
[[nodiscard]] inline PovmSet cascade_povm(const std::vector<Matrix>& levels) {
  detail::require(!levels.empty(), "cascade_povm: need at least one level operator");
  const auto d = levels.front().rows();
  detail::require(static_cast<Eigen::Index>(levels.size()) == d - 1, "cascade_povm: expected d - 1 level operators");
  for (const auto& e : levels) {
    detail::require(e.rows() == d && e.cols() == d, "cascade_povm: operator dimension mismatch");
    detail::require(linalg::hermiticity_error(e) <= 1e-12, "cascade_povm: level operator is not Hermitian");
    const RealVector ev = linalg::hermitian_eigenvalues(e);
    detail::require(ev.minCoeff() >= -1e-12 && ev.maxCoeff() <= 1.0 + 1e-12,
                    "cascade_povm: level operator spectrum outside [0, 1]");
  }
  const Matrix id = Matrix::Identity(d, d);
  std::vector<Matrix> ops(static_cast<std::size_t>(d));
  Matrix no_click = id;  // (I - E_{k-1}) ... (I - E_1)
  for (Eigen::Index k = 1; k < d; ++k) {
    const Matrix& e = levels[static_cast<std::size_t>(k - 1)];
    ops[static_cast<std::size_t>(k)] = e * no_click;
    no_click = (id - e) * no_click;
  }
  ops[0] = no_click;
  for (const auto& op : ops) {
    if (linalg::hermiticity_error(op) > 1e-10) {
      throw DomainError("cascade_povm: non-commuting level operators give a non-Hermitian outcome operator");
    }
  }
  for (auto& op : ops) op = linalg::hermitian_part(op);
  return PovmSet(std::move(ops));
}

/// Cascade built from identical noisy level reads.
[[nodiscard]] inline PovmSet noisy_cascade_povm(int d, const LevelReadoutParams& params) {
  std::vector<Matrix> levels;
  for (int j = 1; j < d; ++j) levels.push_back(level_readout_operator(d, j, params));
  return cascade_povm(levels);
}

[[nodiscard]] inline RealVector gibbs_populations(const GibbsInitParams& params) {
  params.validate();
  const auto d = static_cast<Eigen::Index>(params.omegas.size());
  const double lowest = *std::min_element(params.omegas.begin(), params.omegas.end());
  RealVector a(d);
  for (Eigen::Index j = 0; j < d; ++j) a(j) = std::exp(-(params.omegas[static_cast<std::size_t>(j)] - lowest) / params.temperature);
  return a / a.sum();
}

/// Classical initialization populations `a` and confusion matrix `b` (b(k, j) = P(outcome k | level j)).
struct DiagonalSpamModel {
  RealVector a;
  RealMatrix b;

  [[nodiscard]] int dim() const { return static_cast<int>(a.size()); }

  void validate(double tolerance = 1e-9) const {
    const auto d = a.size();
    detail::require(d >= 2, "DiagonalSpamModel: dimension must be at least 2");
    detail::require(b.rows() == d && b.cols() == d, "DiagonalSpamModel: B must be d x d");
    detail::require(a.allFinite() && b.allFinite(), "DiagonalSpamModel: non-finite entries");
    detail::require(a.minCoeff() >= -tolerance, "DiagonalSpamModel: negative initialization population");
    detail::require(std::abs(a.sum() - 1.0) <= tolerance, "DiagonalSpamModel: populations do not sum to 1");
    detail::require(b.minCoeff() >= -tolerance, "DiagonalSpamModel: negative readout probability");
    for (Eigen::Index j = 0; j < d; ++j) {
      detail::require(std::abs(b.col(j).sum() - 1.0) <= tolerance, "DiagonalSpamModel: readout column does not sum to 1");
    }
  }
};

[[nodiscard]] inline DensityMatrix diagonal_spam_state(const RealVector& a) {
  detail::require(a.size() >= 2 && a.allFinite(), "diagonal_spam_state: bad population vector");
  detail::require(a.minCoeff() >= -1e-9 && std::abs(a.sum() - 1.0) <= 1e-9, "diagonal_spam_state: not a probability vector");
  Matrix m = Matrix::Zero(a.size(), a.size());
  for (Eigen::Index j = 0; j < a.size(); ++j) m(j, j) = std::max(a(j), 0.0);
  return DensityMatrix::from_trusted(m);
}

[[nodiscard]] inline PovmSet diagonal_spam_povm(const RealMatrix& b) {
  const auto d = b.cols();
  detail::require(d >= 2 && b.rows() == d && b.allFinite(), "diagonal_spam_povm: B must be a finite d x d matrix");
  detail::require(b.minCoeff() >= -1e-9, "diagonal_spam_povm: negative readout probability");
  for (Eigen::Index j = 0; j < d; ++j) {
    detail::require(std::abs(b.col(j).sum() - 1.0) <= 1e-9, "diagonal_spam_povm: column does not sum to 1");
  }
  std::vector<Matrix> ops;
  for (Eigen::Index k = 0; k < d; ++k) {
    Matrix op = Matrix::Zero(d, d);
    for (Eigen::Index j = 0; j < d; ++j) op(j, j) = std::max(b(k, j), 0.0);
    ops.push_back(std::move(op));
  }
  // Renormalize clipped round-off so the identity sum holds exactly.
  for (Eigen::Index j = 0; j < d; ++j) {
    double s = 0.0;
    for (const auto& op : ops) s += op(j, j).real();
    for (auto& op : ops) op(j, j) /= s;
  }
  return PovmSet(std::move(ops));
}

/// Moves a depolarizing component of strength p from the initial state into the readout.
///
/// a'_j = (a_j - p/d) / (1 - p),  b'_{kj} = (1 - p) b_{kj} + (p/d) sum_m b_{km}.
/// Both models assign identical probabilities to every unitary circuit.
[[nodiscard]] inline DiagonalSpamModel gauge_transform(const DiagonalSpamModel& model, double p) {
  model.validate();
  detail::require(std::isfinite(p) && p >= 0.0 && p < 1.0, "gauge_transform: p must lie in [0, 1)");
  const double d = model.dim();
  DiagonalSpamModel out;
  out.a = (model.a.array() - p / d) / (1.0 - p);
  detail::require(out.a.minCoeff() >= -1e-12, "gauge_transform: p makes an initialization population negative");
  out.a = out.a.cwiseMax(0.0);
  const RealVector row_sums = model.b.rowwise().sum();
  out.b = (1.0 - p) * model.b;
  out.b.colwise() += (p / d) * row_sums;
  return out;
}

}  // namespace qtomo
