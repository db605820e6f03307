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

// Noisy circuit semantics and Monte Carlo generation of outcome counts.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qtomo/circuits.hpp"
#include "qtomo/errors.hpp"
#include "qtomo/protocols.hpp"
#include "qtomo/qcore.hpp"
#include "qtomo/random.hpp"
#include "qtomo/readout.hpp"

namespace qtomo {

struct IdealInit {};
struct IdealReadout {};

/// Initialization: |0><0|, thermal populations, or explicit populations.
using InitModel = std::variant<IdealInit, GibbsInitParams, RealVector>;
/// Readout: projective, noisy level-read cascade, or explicit confusion matrix b(k, j).
using ReadoutModel = std::variant<IdealReadout, LevelReadoutParams, RealMatrix>;

struct NoiseConfig {
  /// Depolarizing strength attached after every elementary gate.
  double gate_depol_p = 0.0;
  InitModel init = IdealInit{};
  ReadoutModel readout = IdealReadout{};
  /// Depolarizing strength applied once to the state or process under study.
  double truth_depol_p = 0.0;

  void validate() const {
    require_probability(gate_depol_p, "NoiseConfig.gate_depol_p");
    require_probability(truth_depol_p, "NoiseConfig.truth_depol_p");
    if (const auto* g = std::get_if<GibbsInitParams>(&init)) g->validate();
    if (const auto* r = std::get_if<LevelReadoutParams>(&readout)) r->validate();
  }
};

[[nodiscard]] inline DensityMatrix initial_state(const NoiseConfig& noise, int d) {
  if (const auto* g = std::get_if<GibbsInitParams>(&noise.init)) {
    detail::require(static_cast<int>(g->omegas.size()) == d, "initial_state: Gibbs level count differs from dimension");
    return diagonal_spam_state(gibbs_populations(*g));
  }
  if (const auto* a = std::get_if<RealVector>(&noise.init)) {
    detail::require(a->size() == d, "initial_state: population vector length differs from dimension");
    return diagonal_spam_state(*a);
  }
  return DensityMatrix::basis(d, 0);
}

[[nodiscard]] inline PovmSet readout_povm(const NoiseConfig& noise, int d) {
  if (const auto* r = std::get_if<LevelReadoutParams>(&noise.readout)) return noisy_cascade_povm(d, *r);
  if (const auto* b = std::get_if<RealMatrix>(&noise.readout)) {
    detail::require(b->cols() == d, "readout_povm: confusion matrix size differs from dimension");
    return diagonal_spam_povm(*b);
  }
  return PovmSet::computational(d);
}

/// Initial state followed by the preparation gates, each followed by the gate channel.
[[nodiscard]] inline DensityMatrix noisy_prep_state(const MeasurementCircuit& circuit, const NoiseConfig& noise) {
  noise.validate();
  const DensityMatrix rho0 = initial_state(noise, circuit.dim());
  return DensityMatrix::from_trusted(evolve(circuit.prep, rho0.matrix(), noise.gate_depol_p));
}

/// What sits between preparation and measurement: nothing (calibration), a state
/// replacing the preparation (QST), or a channel (QPT).
using Truth = std::variant<std::monostate, DensityMatrix, ChoiMatrix>;

namespace detail {

inline constexpr double kNegativeClamp = 1e-12;

inline RealVector clamp_probabilities(RealVector p) {
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) < 0.0) {
      if (p(k) < -kNegativeClamp) throw NumericalFailure("circuit_probabilities: negative outcome probability");
      p(k) = 0.0;
    }
  }
  return p / p.sum();
}

inline RealVector born_probabilities(const Matrix& rho, const PovmSet& povm) {
  RealVector p(static_cast<Eigen::Index>(povm.size()));
  for (std::size_t k = 0; k < povm.size(); ++k) {
    p(static_cast<Eigen::Index>(k)) = (rho * povm[k]).trace().real();
  }
  return p;
}

}  // namespace detail

/// Outcome probabilities of one circuit.  The state is pushed forward through the
/// measurement gates (each followed by the gate channel) and contracted with the readout POVM.
[[nodiscard]] inline RealVector circuit_probabilities(const MeasurementCircuit& circuit, const Truth& truth,
                                                      const NoiseConfig& noise) {
  noise.validate();
  const int d = circuit.dim();
  Matrix rho;
  if (const auto* state = std::get_if<DensityMatrix>(&truth)) {
    detail::require(state->dim() == d, "circuit_probabilities: state dimension mismatch");
    rho = state->matrix();
  } else if (const auto* choi = std::get_if<ChoiMatrix>(&truth)) {
    detail::require(choi->dim() == d, "circuit_probabilities: channel dimension mismatch");
    rho = apply_choi(*choi, noisy_prep_state(circuit, noise)).matrix();
  } else {
    rho = noisy_prep_state(circuit, noise).matrix();
  }
  rho = evolve(circuit.meas, std::move(rho), noise.gate_depol_p);
  return detail::clamp_probabilities(detail::born_probabilities(rho, readout_povm(noise, d)));
}

using ProbabilityTable = std::vector<RealVector>;

[[nodiscard]] inline ProbabilityTable protocol_probabilities(const TomographyProtocol& protocol, const Truth& truth,
                                                             const NoiseConfig& noise) {
  ProbabilityTable table;
  table.reserve(protocol.size());
  for (const auto& c : protocol.circuits()) table.push_back(circuit_probabilities(c, truth, noise));
  return table;
}

inline void validate_probability_vector(const RealVector& p) {
  detail::require(p.size() >= 1 && p.allFinite(), "probability vector must be finite and nonempty");
  detail::require(p.minCoeff() >= 0.0, "probability vector has a negative entry");
  detail::require(std::abs(p.sum() - 1.0) <= 1e-10, "probability vector does not sum to 1");
}

/// Multinomial draw by sequential conditional binomials.
[[nodiscard]] inline std::vector<std::uint64_t> sample_counts(const RealVector& p, std::uint64_t shots, RandomSeed seed) {
  validate_probability_vector(p);
  auto rng = seed.engine();
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(p.size()), 0);
  std::uint64_t remaining = shots;
  double mass = 1.0;
  for (Eigen::Index k = 0; k + 1 < p.size() && remaining > 0; ++k) {
    const double q = mass > 0.0 ? std::clamp(p(k) / mass, 0.0, 1.0) : 0.0;
    std::binomial_distribution<std::uint64_t> binom(remaining, q);
    const std::uint64_t n = q >= 1.0 ? remaining : (q <= 0.0 ? 0 : binom(rng));
    counts[static_cast<std::size_t>(k)] = n;
    remaining -= n;
    mass -= p(k);
  }
  counts.back() += remaining;
  return counts;
}

struct CircuitCounts {
  std::string label;
  std::uint64_t shots = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t seed = 0;
};

struct CountsDataset {
  std::string protocol_ref;
  std::uint64_t seed = 0;
  std::vector<CircuitCounts> circuits;

  [[nodiscard]] std::uint64_t total_shots() const {
    std::uint64_t t = 0;
    for (const auto& c : circuits) t += c.shots;
    return t;
  }
};

/// Equal split; the first `total % circuits` circuits get one extra shot.
[[nodiscard]] inline std::vector<std::uint64_t> allocate_shots(std::size_t circuits, std::uint64_t total) {
  detail::require(circuits > 0, "allocate_shots: no circuits");
  detail::require(total >= circuits, "allocate_shots: fewer shots than circuits");
  const std::uint64_t base = total / circuits;
  const std::uint64_t extra = total % circuits;
  std::vector<std::uint64_t> out(circuits, base);
  for (std::uint64_t i = 0; i < extra; ++i) out[i] += 1;
  return out;
}

/// Samples counts for precomputed per-circuit probabilities.
[[nodiscard]] inline CountsDataset sample_dataset(std::string protocol_ref, const std::vector<std::string>& labels,
                                                  const ProbabilityTable& table, std::uint64_t total_shots,
                                                  RandomSeed seed) {
  detail::require(labels.size() == table.size(), "sample_dataset: label count differs from table size");
  const auto alloc = allocate_shots(table.size(), total_shots);
  CountsDataset data;
  data.protocol_ref = std::move(protocol_ref);
  data.seed = seed.value;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const RandomSeed child = seed.derive("circuit", i);
    data.circuits.push_back(CircuitCounts{labels[i], alloc[i], sample_counts(table[i], alloc[i], child), child.value});
  }
  return data;
}

[[nodiscard]] inline CountsDataset run_protocol(const TomographyProtocol& protocol, const Truth& truth,
                                                const NoiseConfig& noise, std::uint64_t total_shots, RandomSeed seed) {
  detail::require(total_shots >= protocol.size(), "run_protocol: fewer shots than circuits");
  std::vector<std::string> labels;
  for (const auto& c : protocol.circuits()) labels.push_back(c.label);
  const std::string ref = std::string(protocol_kind_name(protocol.kind())) + ":" + protocol.name() + ":d=" +
                          std::to_string(protocol.dim());
  return sample_dataset(ref, labels, protocol_probabilities(protocol, truth, noise), total_shots, seed);
}

/// Isolated level reads: for each level j, (no click, click) with P(click) = Tr(rho0 E_j).
[[nodiscard]] inline ProbabilityTable level_read_probabilities(const RealVector& populations,
                                                               const LevelReadoutParams& readout) {
  readout.validate();
  const int d = static_cast<int>(populations.size());
  const DensityMatrix rho0 = diagonal_spam_state(populations);
  ProbabilityTable table;
  for (int j = 0; j < d; ++j) {
    const double click = (rho0.matrix() * level_readout_operator(d, j, readout)).trace().real();
    RealVector p(2);
    p << 1.0 - click, click;
    table.push_back(std::move(p));
  }
  return table;
}

[[nodiscard]] inline std::vector<std::string> level_read_labels(int d) {
  std::vector<std::string> labels;
  for (int j = 0; j < d; ++j) labels.push_back("read" + std::to_string(j));
  return labels;
}

/// Level-read calibration data under the configured initialization and level readout.
[[nodiscard]] inline CountsDataset run_level_reads(const NoiseConfig& noise, int d, std::uint64_t total_shots,
                                                   RandomSeed seed) {
  noise.validate();
  LevelReadoutParams params;
  if (const auto* r = std::get_if<LevelReadoutParams>(&noise.readout)) {
    params = *r;
  } else {
    detail::require(std::holds_alternative<IdealReadout>(noise.readout),
                    "run_level_reads: level reads need ideal or level-parameter readout");
  }
  const RealVector a = initial_state(noise, d).matrix().diagonal().real();
  return sample_dataset("level-reads:d=" + std::to_string(d), level_read_labels(d), level_read_probabilities(a, params),
                        total_shots, seed);
}

}  // namespace qtomo
