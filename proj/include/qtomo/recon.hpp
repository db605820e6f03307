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

// Maximum-likelihood reconstruction of states, processes and SPAM parameters.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qtomo/circuits.hpp"
#include "qtomo/errors.hpp"
#include "qtomo/linalg.hpp"
#include "qtomo/optimize.hpp"
#include "qtomo/protocols.hpp"
#include "qtomo/qcore.hpp"
#include "qtomo/readout.hpp"
#include "qtomo/sim.hpp"

namespace qtomo {

/// Initial state and readout POVM assumed by a reconstruction model.
struct SpamAssumption {
  std::string label;
  DensityMatrix rho0;
  PovmSet povm;

  [[nodiscard]] static SpamAssumption ideal(int d) {
    return {"ideal", DensityMatrix::basis(d, 0), PovmSet::computational(d)};
  }
  [[nodiscard]] static SpamAssumption diagonal(const DiagonalSpamModel& model) {
    model.validate();
    return {"diagonal", diagonal_spam_state(model.a), diagonal_spam_povm(model.b)};
  }
  [[nodiscard]] static SpamAssumption gibbs(const GibbsInitParams& init, const LevelReadoutParams& readout) {
    const int d = static_cast<int>(init.omegas.size());
    return {"gibbs", diagonal_spam_state(gibbs_populations(init)), noisy_cascade_povm(d, readout)};
  }
  /// The simulator's own initialization and readout.
  [[nodiscard]] static SpamAssumption from_noise(const NoiseConfig& noise, int d) {
    return {"true", initial_state(noise, d), readout_povm(noise, d)};
  }
};

struct CircuitModel {
  Matrix rho;
  PovmSet effects;
};

/// Effective (rho_i, P_ik) per circuit.
struct MeasurementModel {
  ProtocolKind kind = ProtocolKind::kQst;
  int dim = 0;
  std::vector<CircuitModel> circuits;
};

/// rho_i = U_i^p(rho0), P_ik = U_i^m adjoint applied to Pi_k.  With `folded_gate_depol`, every
/// gate is followed by the depolarizing channel inside the effective operators.
[[nodiscard]] inline MeasurementModel build_measurement_model(const TomographyProtocol& protocol,
                                                              const SpamAssumption& spam,
                                                              std::optional<double> folded_gate_depol = std::nullopt) {
  const int d = protocol.dim();
  detail::require(spam.rho0.dim() == d && spam.povm.dim() == d, "build_measurement_model: SPAM dimension mismatch");
  const double p = folded_gate_depol.value_or(0.0);
  require_probability(p, "build_measurement_model");
  MeasurementModel model;
  model.kind = protocol.kind();
  model.dim = d;
  for (const auto& c : protocol.circuits()) {
    Matrix rho = linalg::hermitian_part(evolve(c.prep, spam.rho0.matrix(), p));
    model.circuits.push_back(CircuitModel{std::move(rho), PovmSet(effective_measurement(c.meas, spam.povm, p))});
  }
  return model;
}

/// Outcome weights per circuit.  Counts are usually integers; exact-probability
/// datasets (shots * p) are allowed for self-consistency checks.
struct Observations {
  std::vector<std::vector<double>> counts;

  [[nodiscard]] static Observations from_counts(const CountsDataset& data) {
    Observations obs;
    for (const auto& c : data.circuits) obs.counts.emplace_back(c.counts.begin(), c.counts.end());
    return obs;
  }

  [[nodiscard]] static Observations exact(const ProbabilityTable& table, const std::vector<std::uint64_t>& shots) {
    detail::require(table.size() == shots.size(), "Observations::exact: size mismatch");
    Observations obs;
    for (std::size_t i = 0; i < table.size(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(table[i].size()));
      for (Eigen::Index k = 0; k < table[i].size(); ++k) row[static_cast<std::size_t>(k)] = static_cast<double>(shots[i]) * table[i](k);
      obs.counts.push_back(std::move(row));
    }
    return obs;
  }

  [[nodiscard]] double total() const {
    double t = 0.0;
    for (const auto& row : counts) {
      for (double n : row) t += n;
    }
    return t;
  }

  void validate() const {
    detail::require(!counts.empty(), "Observations: no circuits");
    for (const auto& row : counts) {
      for (double n : row) detail::require(std::isfinite(n) && n >= 0.0, "Observations: counts must be finite and nonnegative");
    }
    detail::require(total() > 0.0, "Observations: all counts are zero");
  }
};

template <class Estimate>
struct FitReport {
  Estimate estimate;
  /// Sum over outcomes of n log p (not normalized).
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  /// max |p_model - n / shots| over all circuits and outcomes.
  double max_residual = 0.0;
  /// Outcomes with nonzero count whose model probability hit the floor.
  int floored_outcomes = 0;
  ProbabilityTable predicted;
  /// Per-shot log-likelihood after every iteration, when requested.
  std::vector<double> trace;
};

struct MleOptions {
  /// Weight kept on the current iterate in the diluted state update.
  double dilution = 0.1;
  int max_iterations = 10000;
  /// Per-shot log-likelihood tolerance of the stopping rules.
  double tolerance = 1e-10;
  bool record_trace = false;
  /// Max alternations per CPTP projection.
  int projection_alternations = 200;
};

inline constexpr double kProbabilityFloor = 1e-12;

namespace detail {

/// p_r = Re Tr(X A_r) for a stack of Hermitian operators A_r, stored as rows vec(A_r^T).
class LinearLikelihood {
 public:
  LinearLikelihood(const std::vector<Matrix>& operators, std::vector<double> weights, std::vector<std::size_t> circuit_of)
      : n_(operators.front().rows()), weights_(std::move(weights)), circuit_of_(std::move(circuit_of)) {
    rows_.resize(static_cast<Eigen::Index>(operators.size()), n_ * n_);
    for (std::size_t r = 0; r < operators.size(); ++r) {
      const Matrix at = operators[r].transpose();
      rows_.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Eigen::RowVectorXcd>(at.data(), n_ * n_);
    }
    double total = 0.0;
    for (double w : weights_) total += w;
    total_ = total;
    freq_ = RealVector(static_cast<Eigen::Index>(weights_.size()));
    for (std::size_t r = 0; r < weights_.size(); ++r) freq_(static_cast<Eigen::Index>(r)) = weights_[r] / total;
  }

  [[nodiscard]] RealVector probabilities(const Matrix& x) const {
    const Eigen::Map<const Eigen::VectorXcd> v(x.data(), n_ * n_);
    return (rows_ * v).real();
  }

  /// Per-shot log-likelihood sum_r f_r log max(p_r, floor).
  [[nodiscard]] double per_shot(const RealVector& p) const {
    double s = 0.0;
    for (Eigen::Index r = 0; r < p.size(); ++r) {
      if (freq_(r) > 0.0) s += freq_(r) * std::log(std::max(p(r), kProbabilityFloor));
    }
    return s;
  }

  /// sum_r (f_r / p_r) A_r
  [[nodiscard]] Matrix gradient(const RealVector& p) const {
    Eigen::VectorXcd w(p.size());
    for (Eigen::Index r = 0; r < p.size(); ++r) w(r) = freq_(r) > 0.0 ? freq_(r) / std::max(p(r), kProbabilityFloor) : 0.0;
    const Eigen::VectorXcd g = rows_.transpose() * w;
    const Eigen::Map<const Matrix> gt(g.data(), n_, n_);
    return linalg::hermitian_part(gt.transpose());
  }

  [[nodiscard]] double total() const { return total_; }

  [[nodiscard]] int floored(const RealVector& p) const {
    int count = 0;
    for (Eigen::Index r = 0; r < p.size(); ++r) {
      if (freq_(r) > 0.0 && p(r) < kProbabilityFloor) ++count;
    }
    return count;
  }

  [[nodiscard]] const std::vector<std::size_t>& circuit_of() const { return circuit_of_; }
  [[nodiscard]] const std::vector<double>& weights() const { return weights_; }

 private:
  Eigen::Index n_;
  Eigen::MatrixXcd rows_;
  std::vector<double> weights_;
  std::vector<std::size_t> circuit_of_;
  RealVector freq_;
  double total_ = 0.0;
};

inline void check_shapes(const Observations& data, const MeasurementModel& model) {
  data.validate();
  require(data.counts.size() == model.circuits.size(), "reconstruction: circuit count differs between data and model");
  for (std::size_t i = 0; i < data.counts.size(); ++i) {
    require(data.counts[i].size() == model.circuits[i].effects.size(), "reconstruction: outcome count mismatch");
  }
}

/// Predicted per-circuit probabilities and the max deviation from empirical frequencies.
inline std::pair<ProbabilityTable, double> predictive_table(const RealVector& p, const Observations& data) {
  ProbabilityTable table;
  double residual = 0.0;
  Eigen::Index r = 0;
  for (const auto& row : data.counts) {
    double shots = 0.0;
    for (double n : row) shots += n;
    RealVector pi(static_cast<Eigen::Index>(row.size()));
    for (std::size_t k = 0; k < row.size(); ++k, ++r) {
      pi(static_cast<Eigen::Index>(k)) = p(r);
      if (shots > 0.0) residual = std::max(residual, std::abs(p(r) - row[k] / shots));
    }
    table.push_back(std::move(pi));
  }
  return {std::move(table), residual};
}

/// Orthogonal projection onto {J : Tr_out J = I}.
inline Matrix project_trace_preserving(const Matrix& j, int d) {
  const Matrix excess = linalg::partial_trace_second(j, d) - Matrix::Identity(d, d);
  return j - linalg::kron(excess, Matrix::Identity(d, d)) / static_cast<double>(d);
}

/// Dykstra alternation between the PSD cone and the trace-preserving affine set, finished by
/// a PSD clip and the congruence (S^-1/2 (x) I) J (S^-1/2 (x) I) that restores Tr_out J = I exactly.
inline Matrix project_cptp(const Matrix& x0, int d, int max_alternations) {
  Matrix x = linalg::hermitian_part(x0);
  Matrix p = Matrix::Zero(x.rows(), x.cols());
  Matrix q = Matrix::Zero(x.rows(), x.cols());
  for (int k = 0; k < max_alternations; ++k) {
    const Matrix y = linalg::project_psd(x + p);
    p = x + p - y;
    const Matrix x_next = project_trace_preserving(y + q, d);
    q = y + q - x_next;
    const double change = linalg::max_abs(x_next - x);
    x = x_next;
    if (change < 1e-13 && linalg::max_abs(x - y) < 1e-12) break;
  }
  Matrix y = linalg::project_psd(x);
  const Matrix s = linalg::partial_trace_second(y, d);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(linalg::hermitian_part(s));
  RealVector ev = solver.eigenvalues();
  if (ev.minCoeff() <= 1e-12) throw NumericalFailure("project_cptp: input marginal is singular");
  const Matrix inv_sqrt = solver.eigenvectors() * ev.cwiseSqrt().cwiseInverse().cast<Complex>().asDiagonal() *
                          solver.eigenvectors().adjoint();
  const Matrix k = linalg::kron(inv_sqrt, Matrix::Identity(d, d));
  return linalg::hermitian_part(k * y * k.adjoint());
}

}  // namespace detail

/// Diluted fixed-point state MLE: rho <- (1 - eps) N[R rho R] + eps rho with
/// R = sum_ik (f_ik / p_ik) P_ik.  The mixing weight on N[R rho R] is halved until the
/// log-likelihood increases, so the iteration is monotone.
///
/// Stops when lambda_max(R) - 1 < tolerance.  By concavity this bounds the per-shot
/// log-likelihood still attainable over all density matrices.  It also stops, as converged,
/// once no mixing weight improves the likelihood in floating point.
[[nodiscard]] inline FitReport<DensityMatrix> mle_state(const Observations& data, const MeasurementModel& model,
                                                        const MleOptions& options = {}) {
  detail::check_shapes(data, model);
  detail::require(options.dilution >= 0.0 && options.dilution < 1.0, "mle_state: dilution must lie in [0, 1)");
  const int d = model.dim;
  std::vector<Matrix> ops;
  std::vector<double> weights;
  std::vector<std::size_t> circuit_of;
  for (std::size_t i = 0; i < model.circuits.size(); ++i) {
    for (std::size_t k = 0; k < model.circuits[i].effects.size(); ++k) {
      ops.push_back(model.circuits[i].effects[k]);
      weights.push_back(data.counts[i][k]);
      circuit_of.push_back(i);
    }
  }
  const detail::LinearLikelihood like(ops, std::move(weights), std::move(circuit_of));

  Matrix rho = Matrix::Identity(d, d) / static_cast<double>(d);
  RealVector p = like.probabilities(rho);
  double ll = like.per_shot(p);
  FitReport<DensityMatrix> report{DensityMatrix::maximally_mixed(d)};
  if (options.record_trace) report.trace.push_back(ll);

  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const Matrix r = like.gradient(p);
    if (linalg::hermitian_eigenvalues(r).maxCoeff() - 1.0 < options.tolerance) {
      report.converged = true;
      break;
    }
    Matrix target = r * rho * r;
    const double norm = target.trace().real();
    if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericalFailure("mle_state: degenerate R rho R");
    target /= norm;
    double step = 1.0 - options.dilution;
    bool accepted = false;
    Matrix candidate;
    RealVector cand_p;
    double cand_ll = ll;
    for (int back = 0; back < 40; ++back) {
      candidate = linalg::hermitian_part(step * target + (1.0 - step) * rho);
      cand_p = like.probabilities(candidate);
      cand_ll = like.per_shot(cand_p);
      if (cand_ll > ll) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      report.converged = true;
      break;
    }
    rho = std::move(candidate);
    p = std::move(cand_p);
    ll = cand_ll;
    if (options.record_trace) report.trace.push_back(ll);
  }
  if (!rho.allFinite()) throw NumericalFailure("mle_state: non-finite estimate");
  report.estimate = DensityMatrix::from_trusted(rho);
  report.iterations = it;
  report.log_likelihood = ll * like.total();
  report.floored_outcomes = like.floored(p);
  auto [table, residual] = detail::predictive_table(p, data);
  report.predicted = std::move(table);
  report.max_residual = residual;
  return report;
}

/// Projected-gradient process MLE over CPTP Choi matrices.
///
/// Likelihood terms are Tr(J (rho_i^T (x) P_ik)).  Each iteration projects J + mu G onto
/// CPTP and runs an Armijo backtracking search along the projected direction; mu adapts
/// to the accepted step length.  Stops when the per-shot log-likelihood gained over the last
/// ten iterations is below the tolerance.
[[nodiscard]] inline FitReport<ChoiMatrix> mle_process(const Observations& data, const MeasurementModel& model,
                                                       const MleOptions& options = {}) {
  detail::check_shapes(data, model);
  detail::require(model.kind == ProtocolKind::kQpt, "mle_process: model is not a process-tomography model");
  const int d = model.dim;
  std::vector<Matrix> ops;
  std::vector<double> weights;
  std::vector<std::size_t> circuit_of;
  for (std::size_t i = 0; i < model.circuits.size(); ++i) {
    const Matrix rho_t = model.circuits[i].rho.transpose();
    for (std::size_t k = 0; k < model.circuits[i].effects.size(); ++k) {
      ops.push_back(linalg::kron(rho_t, model.circuits[i].effects[k]));
      weights.push_back(data.counts[i][k]);
      circuit_of.push_back(i);
    }
  }
  const detail::LinearLikelihood like(ops, std::move(weights), std::move(circuit_of));

  const int n = d * d;
  Matrix j = Matrix::Identity(n, n) / static_cast<double>(d);
  RealVector p = like.probabilities(j);
  double ll = like.per_shot(p);
  FitReport<ChoiMatrix> report{ChoiMatrix(j)};
  if (options.record_trace) report.trace.push_back(ll);

  double mu = static_cast<double>(n);
  constexpr double kArmijo = 1e-4;
  // Single Armijo steps can be short; the stopping rule looks at the gain over this many iterations.
  constexpr std::size_t kGainWindow = 10;
  std::vector<double> history{ll};
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const Matrix g = like.gradient(p);
    const Matrix target = detail::project_cptp(j + mu * g, d, options.projection_alternations);
    const Matrix dir = target - j;
    const double slope = (g * dir).trace().real();
    if (!(slope > 0.0)) {
      report.converged = true;
      break;
    }
    double alpha = 1.0;
    bool accepted = false;
    Matrix candidate;
    RealVector cand_p;
    double cand_ll = ll;
    for (int back = 0; back < 40; ++back) {
      candidate = j + alpha * dir;
      cand_p = like.probabilities(candidate);
      cand_ll = like.per_shot(cand_p);
      if (cand_ll >= ll + kArmijo * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      report.converged = true;
      break;
    }
    mu = alpha == 1.0 ? std::min(mu * 2.0, 1e6) : std::max(mu * alpha, 1e-6);
    j = std::move(candidate);
    p = std::move(cand_p);
    ll = cand_ll;
    if (options.record_trace) report.trace.push_back(ll);
    history.push_back(ll);
    if (history.size() > kGainWindow && ll - history[history.size() - 1 - kGainWindow] < options.tolerance) {
      report.converged = true;
      ++it;
      break;
    }
  }
  if (!j.allFinite()) throw NumericalFailure("mle_process: non-finite estimate");
  report.estimate = ChoiMatrix(linalg::hermitian_part(j));
  report.iterations = it;
  report.log_likelihood = ll * like.total();
  report.floored_outcomes = like.floored(p);
  auto [table, residual] = detail::predictive_table(p, data);
  report.predicted = std::move(table);
  report.max_residual = residual;
  return report;
}

// ---------------------------------------------------------------------------
// SPAM parameter estimation

namespace detail {

/// Column l: diagonal of the circuit's (noisy) preparation applied to |l><l|.
inline std::vector<RealMatrix> population_transfers(const std::vector<MeasurementCircuit>& circuits, double gate_depol_p) {
  std::vector<RealMatrix> out;
  for (const auto& c : circuits) {
    const int d = c.dim();
    RealMatrix t(d, d);
    for (int l = 0; l < d; ++l) {
      const Matrix rho = evolve(c.prep, DensityMatrix::basis(d, l).matrix(), gate_depol_p);
      t.col(l) = rho.diagonal().real();
    }
    out.push_back(std::move(t));
  }
  return out;
}

inline double multinomial_log_likelihood(const std::vector<double>& counts, const RealVector& p) {
  double s = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] > 0.0) s += counts[k] * std::log(std::max(p(static_cast<Eigen::Index>(k)), kProbabilityFloor));
  }
  return s;
}

/// Softmax with a fixed zero logit at `reference`; `free` holds the other d - 1 logits.
inline RealVector softmax_with_reference(std::span<const double> free, int d, int reference) {
  RealVector logits(d);
  std::size_t f = 0;
  for (int i = 0; i < d; ++i) logits(i) = i == reference ? 0.0 : free[f++];
  const double m = logits.maxCoeff();
  RealVector e = (logits.array() - m).exp();
  return e / e.sum();
}

inline DiagonalSpamModel decode_spam(std::span<const double> x, int d) {
  const auto per = static_cast<std::size_t>(d - 1);
  DiagonalSpamModel model;
  model.a = softmax_with_reference(x.subspan(0, per), d, 0);
  model.b = RealMatrix(d, d);
  for (int j = 0; j < d; ++j) model.b.col(j) = softmax_with_reference(x.subspan(per * (j + 1), per), d, j);
  return model;
}

}  // namespace detail

/// Predicted outcome probabilities of the calibration circuits under a diagonal SPAM model.
[[nodiscard]] inline ProbabilityTable spam_calibration_probabilities(const DiagonalSpamModel& model, double gate_depol_p) {
  model.validate();
  const auto transfers = detail::population_transfers(spam_calibration_circuits(model.dim()), gate_depol_p);
  ProbabilityTable table;
  for (const auto& t : transfers) table.push_back(model.b * (t * model.a));
  return table;
}

/// Sum of n log p over the calibration circuits.
[[nodiscard]] inline double spam_general_log_likelihood(const Observations& data, const DiagonalSpamModel& model,
                                                        double gate_depol_p) {
  const auto table = spam_calibration_probabilities(model, gate_depol_p);
  detail::require(data.counts.size() == table.size(), "spam_general_log_likelihood: expected one row per calibration circuit");
  double s = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) s += detail::multinomial_log_likelihood(data.counts[i], table[i]);
  return s;
}

inline constexpr double kSpamLogitBound = 15.0;

/// Fits (a, B) to calibration-circuit data by maximizing the multinomial likelihood
/// with the genetic optimizer.  Each simplex is softmax-parametrized relative to its
/// dominant entry (a_0 for a, b_jj for column j), giving d^2 - 1 free logits.
[[nodiscard]] inline FitReport<DiagonalSpamModel> estimate_spam_general(const Observations& data, double gate_depol_p,
                                                                        const OptimizerConfig& config = {}) {
  data.validate();
  require_probability(gate_depol_p, "estimate_spam_general");
  const int d = static_cast<int>(data.counts.size());
  detail::require(d >= 2, "estimate_spam_general: need d >= 2 calibration circuits");
  for (const auto& row : data.counts) {
    detail::require(static_cast<int>(row.size()) == d, "estimate_spam_general: each circuit needs d outcomes");
    double shots = 0.0;
    for (double n : row) shots += n;
    detail::require(shots > 0.0, "estimate_spam_general: a calibration circuit has zero shots");
  }
  const auto transfers = detail::population_transfers(spam_calibration_circuits(d), gate_depol_p);
  const double total = data.total();

  auto objective = [&](std::span<const double> x) {
    const DiagonalSpamModel m = detail::decode_spam(x, d);
    double s = 0.0;
    for (std::size_t i = 0; i < transfers.size(); ++i) {
      s += detail::multinomial_log_likelihood(data.counts[i], m.b * (transfers[i] * m.a));
    }
    return s / total;
  };
  const std::vector<Bound> bounds(static_cast<std::size_t>(d * d - 1), Bound{-kSpamLogitBound, kSpamLogitBound});
  const OptimizeResult best = genetic_optimize(objective, bounds, config);

  FitReport<DiagonalSpamModel> report{detail::decode_spam(best.params, d)};
  report.log_likelihood = best.value * total;
  report.iterations = best.generations_run;
  report.converged = true;
  report.predicted = spam_calibration_probabilities(report.estimate, gate_depol_p);
  for (std::size_t i = 0; i < report.predicted.size(); ++i) {
    double shots = 0.0;
    for (double n : data.counts[i]) shots += n;
    for (int k = 0; k < d; ++k) {
      const double emp = data.counts[i][static_cast<std::size_t>(k)] / shots;
      report.max_residual = std::max(report.max_residual, std::abs(report.predicted[i](k) - emp));
      if (data.counts[i][static_cast<std::size_t>(k)] > 0.0 && report.predicted[i](k) < kProbabilityFloor) ++report.floored_outcomes;
    }
  }
  return report;
}

struct GibbsSpamEstimate {
  double temperature = 1.0;
  double b0 = 0.0;
  double b1 = 0.0;
};

inline constexpr double kGibbsMinTemperature = 1e-3;
inline constexpr double kGibbsMaxTemperature = 100.0;
inline constexpr double kGibbsMaxReadoutError = 0.5;

/// Click probability of each isolated level read: a_j (1 - b0) + (1 - a_j) b1.
[[nodiscard]] inline ProbabilityTable gibbs_level_read_probabilities(const GibbsSpamEstimate& est,
                                                                     const std::vector<double>& omegas) {
  return level_read_probabilities(gibbs_populations(GibbsInitParams{est.temperature, omegas}),
                                  LevelReadoutParams{est.b0, est.b1});
}

/// Fits (T, b0, b1) to isolated level-read data (outcome 0 = no click, 1 = click).
///
/// The temperature is searched on a log scale over [1e-3, 100]; b0, b1 over [0, 0.5].
[[nodiscard]] inline FitReport<GibbsSpamEstimate> estimate_spam_gibbs(const Observations& data,
                                                                      const std::vector<double>& omegas,
                                                                      const OptimizerConfig& config = {}) {
  data.validate();
  const int d = static_cast<int>(omegas.size());
  GibbsInitParams{1.0, omegas}.validate();
  detail::require(static_cast<int>(data.counts.size()) == d, "estimate_spam_gibbs: expected one read per level");
  for (const auto& row : data.counts) detail::require(row.size() == 2, "estimate_spam_gibbs: level reads are binary");
  const double total = data.total();

  auto decode = [&](std::span<const double> x) { return GibbsSpamEstimate{std::exp(x[0]), x[1], x[2]}; };
  auto objective = [&](std::span<const double> x) {
    const auto table = gibbs_level_read_probabilities(decode(x), omegas);
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += detail::multinomial_log_likelihood(data.counts[static_cast<std::size_t>(j)], table[static_cast<std::size_t>(j)]);
    return s / total;
  };
  const std::vector<Bound> bounds{{std::log(kGibbsMinTemperature), std::log(kGibbsMaxTemperature)},
                                  {0.0, kGibbsMaxReadoutError},
                                  {0.0, kGibbsMaxReadoutError}};
  const OptimizeResult best = genetic_optimize(objective, bounds, config);

  FitReport<GibbsSpamEstimate> report{decode(best.params)};
  report.log_likelihood = best.value * total;
  report.iterations = best.generations_run;
  report.converged = true;
  report.predicted = gibbs_level_read_probabilities(report.estimate, omegas);
  for (int j = 0; j < d; ++j) {
    const auto& row = data.counts[static_cast<std::size_t>(j)];
    const double shots = row[0] + row[1];
    if (shots > 0.0) {
      report.max_residual = std::max(report.max_residual, std::abs(report.predicted[static_cast<std::size_t>(j)](1) - row[1] / shots));
    }
  }
  return report;
}

}  // namespace qtomo
