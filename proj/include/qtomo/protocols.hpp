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

// Measurement protocols: the 2-level state and process tomography protocols,
// the mutually-unbiased-basis reference protocol, SPAM calibration circuits and
// the informational-completeness test.

#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qtomo/circuits.hpp"
#include "qtomo/errors.hpp"
#include "qtomo/linalg.hpp"
#include "qtomo/qcore.hpp"
#include "qtomo/readout.hpp"

namespace qtomo {

struct MeasurementCircuit {
  GateSequence prep;
  GateSequence meas;
  std::string label;

  MeasurementCircuit(GateSequence prep_, GateSequence meas_, std::string label_)
      : prep(std::move(prep_)), meas(std::move(meas_)), label(std::move(label_)) {
    detail::require(prep.dim() == meas.dim(), "MeasurementCircuit: prep/meas dimension mismatch");
  }

  [[nodiscard]] int dim() const { return prep.dim(); }
  [[nodiscard]] std::size_t gate_count() const { return prep.size() + meas.size(); }
};

enum class ProtocolKind { kQst, kQpt };

inline const char* protocol_kind_name(ProtocolKind k) { return k == ProtocolKind::kQst ? "QST" : "QPT"; }

class TomographyProtocol {
 public:
  TomographyProtocol(ProtocolKind kind, std::vector<MeasurementCircuit> circuits, std::string name = {})
      : kind_(kind), circuits_(std::move(circuits)), name_(std::move(name)) {
    detail::require(!circuits_.empty(), "TomographyProtocol: no circuits");
    for (const auto& c : circuits_) {
      detail::require(c.dim() == circuits_.front().dim(), "TomographyProtocol: circuit dimensions differ");
    }
  }

  [[nodiscard]] ProtocolKind kind() const { return kind_; }
  [[nodiscard]] int dim() const { return circuits_.front().dim(); }
  [[nodiscard]] const std::vector<MeasurementCircuit>& circuits() const { return circuits_; }
  [[nodiscard]] std::size_t size() const { return circuits_.size(); }
  [[nodiscard]] const std::string& name() const { return name_; }

  [[nodiscard]] std::size_t max_gate_count() const {
    std::size_t m = 0;
    for (const auto& c : circuits_) m = std::max(m, c.gate_count());
    return m;
  }

 private:
  ProtocolKind kind_;
  std::vector<MeasurementCircuit> circuits_;
  std::string name_;
};

namespace detail {

inline GateSequence single_gate(int d, Axis axis, double angle, int low, int high) {
  GateSequence s(d);
  s.push_back(TwoLevelGate(axis, angle, low, high, d));
  return s;
}

inline std::vector<std::pair<int, int>> level_pairs(int d) {
  std::vector<std::pair<int, int>> pairs;
  for (int j = 0; j < d; ++j) {
    for (int k = j + 1; k < d; ++k) pairs.emplace_back(j, k);
  }
  return pairs;
}

/// Basis-change sequences of the 2-level state protocol: none, Ry(pi/2) per pair, Rx(3pi/2) per pair.
inline std::vector<std::pair<GateSequence, std::string>> two_level_bases(int d) {
  constexpr double kPi = std::numbers::pi;
  std::vector<std::pair<GateSequence, std::string>> out;
  out.emplace_back(GateSequence(d), "comp");
  for (auto [j, k] : level_pairs(d)) {
    auto s = single_gate(d, Axis::kY, kPi / 2.0, j, k);
    auto label = gate_label(s.gates().front());
    out.emplace_back(std::move(s), std::move(label));
  }
  for (auto [j, k] : level_pairs(d)) {
    auto s = single_gate(d, Axis::kX, 3.0 * kPi / 2.0, j, k);
    auto label = gate_label(s.gates().front());
    out.emplace_back(std::move(s), std::move(label));
  }
  return out;
}

inline bool is_prime(int n) {
  if (n < 2) return false;
  for (int f = 2; f * f <= n; ++f) {
    if (n % f == 0) return false;
  }
  return true;
}

inline std::string sequence_label(const GateSequence& s) {
  if (s.empty()) return "id";
  std::string out;
  for (const auto& g : s.gates()) {
    if (!out.empty()) out += "*";
    out += gate_label(g);
  }
  return out;
}

}  // namespace detail

/// Computational basis, then Ry(pi/2) and Rx(3pi/2) on every level pair: 1 + d(d-1) circuits.
[[nodiscard]] inline TomographyProtocol qst_two_level(int d) {
  detail::require(d >= 2, "qst_two_level: dimension must be at least 2");
  std::vector<MeasurementCircuit> circuits;
  for (auto& [seq, label] : detail::two_level_bases(d)) circuits.emplace_back(GateSequence(d), std::move(seq), label);
  return TomographyProtocol(ProtocolKind::kQst, std::move(circuits), "2-level");
}

/// The d^2 input-state preparations of the 2-level process protocol.
///
/// For base level m: prefix Rx(pi) on (0, m) when m > 0 (moves |0> to |m>), then the
/// bare state, Ry(pi/2) on (m, j) for each j > m, and Rx(3pi/2) on (m, j) for each j > m.
[[nodiscard]] inline std::vector<GateSequence> qpt_two_level_preparations(int d) {
  detail::require(d >= 2, "qpt_two_level_preparations: dimension must be at least 2");
  constexpr double kPi = std::numbers::pi;
  std::vector<GateSequence> preps;
  for (int m = 0; m < d; ++m) {
    GateSequence prefix(d);
    if (m > 0) prefix.push_back(TwoLevelGate(Axis::kX, kPi, 0, m, d));
    preps.push_back(prefix);
    for (int j = m + 1; j < d; ++j) {
      GateSequence s = prefix;
      s.push_back(TwoLevelGate(Axis::kY, kPi / 2.0, m, j, d));
      preps.push_back(std::move(s));
    }
    for (int j = m + 1; j < d; ++j) {
      GateSequence s = prefix;
      s.push_back(TwoLevelGate(Axis::kX, 3.0 * kPi / 2.0, m, j, d));
      preps.push_back(std::move(s));
    }
  }
  return preps;
}

/// Every preparation crossed with every 2-level measurement basis: d^2 (1 + d(d-1)) circuits.
[[nodiscard]] inline TomographyProtocol qpt_two_level(int d) {
  detail::require(d >= 2, "qpt_two_level: dimension must be at least 2");
  const auto bases = detail::two_level_bases(d);
  std::vector<MeasurementCircuit> circuits;
  for (const auto& prep : qpt_two_level_preparations(d)) {
    const std::string prep_label = detail::sequence_label(prep);
    for (const auto& [meas, meas_label] : bases) {
      circuits.emplace_back(prep, meas, "prep=" + prep_label + ";meas=" + meas_label);
    }
  }
  return TomographyProtocol(ProtocolKind::kQpt, std::move(circuits), "2-level");
}

/// Wootters-Fields mutually unbiased bases for prime d, excluding the computational basis.
///
/// Entry (n, m) of basis k is omega^(k n^2 + m n) / sqrt(d); for d = 2 the phases are
/// i^(k n) (-1)^(m n).  Columns are the basis vectors.
[[nodiscard]] inline std::vector<Matrix> mub_bases(int d) {
  if (!detail::is_prime(d)) throw UnsupportedDimension("mub_bases: dimension must be prime");
  std::vector<Matrix> bases;
  const double norm = 1.0 / std::sqrt(static_cast<double>(d));
  for (int k = 0; k < d; ++k) {
    Matrix f(d, d);
    for (int n = 0; n < d; ++n) {
      for (int m = 0; m < d; ++m) {
        double phase = 0.0;
        if (d == 2) {
          phase = std::numbers::pi * (0.5 * k * n + m * n);
        } else {
          phase = 2.0 * std::numbers::pi * static_cast<double>((k * n * n + m * n) % d) / d;
        }
        f(n, m) = norm * std::polar(1.0, phase);
      }
    }
    bases.push_back(std::move(f));
  }
  return bases;
}

/// Givens elimination of a measurement basis change into two-level rotations.
///
/// Returns gates G_1 ... G_n (time order) with basis_unitary = D * (G_n ... G_1) for some
/// diagonal unitary D.  D only rephases readout levels and is not compiled.  Each two-level
/// factor is emitted in Rx(gamma) Ry(beta) Rx(alpha) form with zero-angle factors dropped.
[[nodiscard]] inline GateSequence mub_gate_compile(const UnitaryMatrix& basis_unitary) {
  const int d = basis_unitary.dim();
  detail::require(d >= 2, "mub_gate_compile: dimension must be at least 2");
  Matrix a = basis_unitary.matrix().adjoint();
  GateSequence seq(d);
  constexpr double kZero = 1e-14;
  for (int c = 0; c + 1 < d; ++c) {
    for (int r = d - 1; r > c; --r) {
      const Complex x = a(c, c);
      const Complex y = a(r, c);
      if (std::abs(y) < kZero) continue;
      const double n = std::hypot(std::abs(x), std::abs(y));
      Eigen::Matrix2cd g;
      g << std::conj(x) / n, std::conj(y) / n, -y / n, x / n;
      const Eigen::RowVectorXcd rc = a.row(c);
      const Eigen::RowVectorXcd rr = a.row(r);
      a.row(c) = g(0, 0) * rc + g(0, 1) * rr;
      a.row(r) = g(1, 0) * rc + g(1, 1) * rr;
      a(r, c) = 0.0;
      const EulerAngles e = euler_decompose_exact(g);
      if (e.alpha != 0.0) seq.push_back(TwoLevelGate(Axis::kX, e.alpha, c, r, d));
      if (e.beta != 0.0) seq.push_back(TwoLevelGate(Axis::kY, e.beta, c, r, d));
      if (e.gamma != 0.0) seq.push_back(TwoLevelGate(Axis::kX, e.gamma, c, r, d));
    }
  }
  return seq;
}

/// Computational basis plus the d Wootters-Fields bases, each compiled to two-level gates.
[[nodiscard]] inline TomographyProtocol mub_protocol(int d) {
  const auto bases = mub_bases(d);
  std::vector<MeasurementCircuit> circuits;
  circuits.emplace_back(GateSequence(d), GateSequence(d), "comp");
  for (std::size_t k = 0; k < bases.size(); ++k) {
    // Measuring in basis {f_m} means rotating f_m onto |m> before readout.
    const UnitaryMatrix change(bases[k].adjoint());
    circuits.emplace_back(GateSequence(d), mub_gate_compile(change), "mub" + std::to_string(k));
  }
  return TomographyProtocol(ProtocolKind::kQst, std::move(circuits), "MUB");
}

/// Circuit 0: initialization and readout only; circuit j: Rx(pi) on (0, j) before readout.
[[nodiscard]] inline std::vector<MeasurementCircuit> spam_calibration_circuits(int d) {
  detail::require(d >= 2, "spam_calibration_circuits: dimension must be at least 2");
  std::vector<MeasurementCircuit> circuits;
  circuits.emplace_back(GateSequence(d), GateSequence(d), "init");
  for (int j = 1; j < d; ++j) {
    auto prep = detail::single_gate(d, Axis::kX, std::numbers::pi, 0, j);
    auto label = gate_label(prep.gates().front());
    circuits.emplace_back(std::move(prep), GateSequence(d), std::move(label));
  }
  return circuits;
}

[[nodiscard]] inline TomographyProtocol spam_calibration_protocol(int d) {
  return TomographyProtocol(ProtocolKind::kQst, spam_calibration_circuits(d), "spam-calibration");
}

/// Measurement operators seen by the input of a circuit's basis change: U^dagger Pi_k U.
[[nodiscard]] inline std::vector<Matrix> effective_measurement(const GateSequence& meas, const PovmSet& povm,
                                                               double depol_p = 0.0) {
  std::vector<Matrix> out;
  out.reserve(povm.size());
  for (const auto& op : povm.operators()) out.push_back(linalg::hermitian_part(evolve_adjoint(meas, op, depol_p)));
  return out;
}

struct CompletenessResult {
  int rank = 0;
  int full_rank = 0;
  bool complete = false;
};

inline constexpr double kCompletenessRelTol = 1e-8;

/// Numerical rank of the design matrix of vectorized effective measurement operators.
///
/// QST rows are U_i^dagger Pi_k U_i; QPT rows are rho_i^T (x) P_ik.  Without a SPAM model the
/// initial state is |0><0| and readout is computational.
[[nodiscard]] inline CompletenessResult completeness_check(const TomographyProtocol& protocol,
                                                           const std::optional<DiagonalSpamModel>& spam = std::nullopt) {
  const int d = protocol.dim();
  const PovmSet povm = spam ? diagonal_spam_povm(spam->b) : PovmSet::computational(d);
  const DensityMatrix rho0 = spam ? diagonal_spam_state(spam->a) : DensityMatrix::basis(d, 0);
  const bool process = protocol.kind() == ProtocolKind::kQpt;
  const Eigen::Index width = process ? static_cast<Eigen::Index>(d) * d * d * d : static_cast<Eigen::Index>(d) * d;
  std::vector<RealVector> rows;
  for (const auto& c : protocol.circuits()) {
    const auto eff = effective_measurement(c.meas, povm);
    if (process) {
      const Matrix rho = evolve(c.prep, rho0.matrix());
      const Matrix rho_t = rho.transpose();
      for (const auto& p : eff) rows.push_back(linalg::hermitian_coordinates(linalg::kron(rho_t, p)));
    } else {
      for (const auto& p : eff) rows.push_back(linalg::hermitian_coordinates(p));
    }
  }
  RealMatrix design(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i) design.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  CompletenessResult result;
  result.full_rank = static_cast<int>(width);
  result.rank = linalg::numerical_rank(design, kCompletenessRelTol);
  result.complete = result.rank == result.full_rank;
  return result;
}

/// Largest deviation of |<e|f>|^2 from 1/d over vectors e, f of the measured bases of
/// two different circuits.  Zero means the bases are pairwise mutually unbiased.
[[nodiscard]] inline double mutual_unbiasedness_deviation(const TomographyProtocol& protocol) {
  const int d = protocol.dim();
  std::vector<Matrix> bases;
  for (const auto& c : protocol.circuits()) bases.push_back(sequence_unitary(c.meas).matrix().adjoint());
  double worst = 0.0;
  for (std::size_t a = 0; a < bases.size(); ++a) {
    for (std::size_t b = a + 1; b < bases.size(); ++b) {
      const Matrix overlaps = bases[a].adjoint() * bases[b];
      worst = std::max(worst, (overlaps.cwiseAbs2().array() - 1.0 / d).abs().maxCoeff());
    }
  }
  return worst;
}

}  // namespace qtomo
