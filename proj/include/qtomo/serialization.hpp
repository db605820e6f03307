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


// JSON and CSV interchange for protocols, count datasets and fit reports.

#pragma once

#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "qtomo/circuits.hpp"
#include "qtomo/errors.hpp"
#include "qtomo/protocols.hpp"
#include "qtomo/qcore.hpp"
#include "qtomo/readout.hpp"
#include "qtomo/recon.hpp"
#include "qtomo/sim.hpp"

namespace qtomo {

using Json = nlohmann::ordered_json;

namespace detail {

template <class T>
T json_field(const Json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string(what) + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(what) + ": field '" + key + "' has the wrong type");
  }
}

inline Axis axis_from_name(const std::string& name) {
  if (name == "x") return Axis::kX;
  if (name == "y") return Axis::kY;
  throw ConfigError("gate: unknown axis '" + name + "'");
}

}  // namespace detail

// ---- circuits and protocols ----

[[nodiscard]] inline Json to_json(const GateSequence& seq) {
  Json arr = Json::array();
  for (const auto& g : seq.gates()) {
    arr.push_back({{"axis", axis_name(g.axis())}, {"angle", g.angle()}, {"levels", {g.low(), g.high()}}});
  }
  return arr;
}

[[nodiscard]] inline GateSequence gate_sequence_from_json(const Json& j, int d) {
  if (!j.is_array()) throw ConfigError("gate sequence: expected an array");
  GateSequence seq(d);
  for (const auto& g : j) {
    const auto levels = detail::json_field<std::vector<int>>(g, "levels", "gate");
    if (levels.size() != 2) throw ConfigError("gate: 'levels' must hold two indices");
    const Axis axis = detail::axis_from_name(detail::json_field<std::string>(g, "axis", "gate"));
    const double angle = detail::json_field<double>(g, "angle", "gate");
    try {
      seq.push_back(TwoLevelGate(axis, angle, levels[0], levels[1], d));
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  return seq;
}

[[nodiscard]] inline Json to_json(const TomographyProtocol& protocol) {
  Json circuits = Json::array();
  for (const auto& c : protocol.circuits()) {
    circuits.push_back({{"label", c.label}, {"prep", to_json(c.prep)}, {"meas", to_json(c.meas)}});
  }
  return {{"kind", protocol_kind_name(protocol.kind())},
          {"name", protocol.name()},
          {"dim", protocol.dim()},
          {"circuits", std::move(circuits)}};
}

[[nodiscard]] inline TomographyProtocol protocol_from_json(const Json& j) {
  const auto kind_name = detail::json_field<std::string>(j, "kind", "protocol");
  ProtocolKind kind;
  if (kind_name == "QST") {
    kind = ProtocolKind::kQst;
  } else if (kind_name == "QPT") {
    kind = ProtocolKind::kQpt;
  } else {
    throw ConfigError("protocol: unknown kind '" + kind_name + "'");
  }
  const int d = detail::json_field<int>(j, "dim", "protocol");
  if (d < 2) throw ConfigError("protocol: dim must be at least 2");
  const auto& arr = j.contains("circuits") ? j.at("circuits") : Json();
  if (!arr.is_array() || arr.empty()) throw ConfigError("protocol: 'circuits' must be a nonempty array");
  std::vector<MeasurementCircuit> circuits;
  for (const auto& c : arr) {
    if (!c.is_object()) throw ConfigError("protocol: circuit entries must be objects");
    circuits.emplace_back(gate_sequence_from_json(c.value("prep", Json::array()), d),
                          gate_sequence_from_json(c.value("meas", Json::array()), d),
                          detail::json_field<std::string>(c, "label", "circuit"));
  }
  return TomographyProtocol(kind, std::move(circuits), j.value("name", std::string{}));
}

// ---- count datasets ----

[[nodiscard]] inline Json to_json(const CountsDataset& data) {
  Json circuits = Json::array();
  for (const auto& c : data.circuits) {
    circuits.push_back({{"label", c.label}, {"shots", c.shots}, {"counts", c.counts}, {"seed", c.seed}});
  }
  return {{"protocol_ref", data.protocol_ref}, {"seed", data.seed}, {"circuits", std::move(circuits)}};
}

[[nodiscard]] inline CountsDataset counts_from_json(const Json& j) {
  CountsDataset data;
  data.protocol_ref = detail::json_field<std::string>(j, "protocol_ref", "counts");
  data.seed = detail::json_field<std::uint64_t>(j, "seed", "counts");
  const auto& arr = j.contains("circuits") ? j.at("circuits") : Json();
  if (!arr.is_array()) throw ConfigError("counts: 'circuits' must be an array");
  for (const auto& c : arr) {
    CircuitCounts cc;
    cc.label = detail::json_field<std::string>(c, "label", "counts circuit");
    cc.shots = detail::json_field<std::uint64_t>(c, "shots", "counts circuit");
    cc.counts = detail::json_field<std::vector<std::uint64_t>>(c, "counts", "counts circuit");
    cc.seed = c.value("seed", std::uint64_t{0});
    std::uint64_t sum = 0;
    for (auto n : cc.counts) sum += n;
    if (sum != cc.shots) throw ConfigError("counts: circuit '" + cc.label + "' counts do not sum to shots");
    data.circuits.push_back(std::move(cc));
  }
  return data;
}

/// Long-format table with one row per (circuit, outcome).
inline void write_counts_csv(std::ostream& os, const CountsDataset& data) {
  os << "circuit_index,outcome,count\n";
  for (std::size_t i = 0; i < data.circuits.size(); ++i) {
    const auto& counts = data.circuits[i].counts;
    for (std::size_t k = 0; k < counts.size(); ++k) os << i << ',' << k << ',' << counts[k] << '\n';
  }
}

// ---- estimates and fit reports ----

[[nodiscard]] inline Json complex_matrix_json(const Matrix& m) {
  Json re = Json::array();
  Json im = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row_re = Json::array();
    Json row_im = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row_re.push_back(m(r, c).real());
      row_im.push_back(m(r, c).imag());
    }
    re.push_back(std::move(row_re));
    im.push_back(std::move(row_im));
  }
  return {{"real", std::move(re)}, {"imag", std::move(im)}};
}

[[nodiscard]] inline Matrix complex_matrix_from_json(const Json& j) {
  const auto re = detail::json_field<std::vector<std::vector<double>>>(j, "real", "matrix");
  const auto im = detail::json_field<std::vector<std::vector<double>>>(j, "imag", "matrix");
  if (re.empty() || re.size() != im.size()) throw ConfigError("matrix: real and imaginary parts differ in shape");
  Matrix m(static_cast<Eigen::Index>(re.size()), static_cast<Eigen::Index>(re.front().size()));
  for (std::size_t r = 0; r < re.size(); ++r) {
    if (re[r].size() != re.front().size() || im[r].size() != re[r].size()) throw ConfigError("matrix: ragged rows");
    for (std::size_t c = 0; c < re[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = Complex(re[r][c], im[r][c]);
    }
  }
  return m;
}

[[nodiscard]] inline Json real_vector_json(const RealVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

[[nodiscard]] inline Json real_matrix_json(const RealMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

[[nodiscard]] inline Json estimate_json(const DensityMatrix& rho) {
  return {{"type", "density_matrix"}, {"dim", rho.dim()}, {"matrix", complex_matrix_json(rho.matrix())}};
}

[[nodiscard]] inline Json estimate_json(const ChoiMatrix& choi) {
  return {{"type", "choi_matrix"}, {"dim", choi.dim()}, {"matrix", complex_matrix_json(choi.matrix())}};
}

[[nodiscard]] inline Json estimate_json(const DiagonalSpamModel& m) {
  return {{"type", "diagonal_spam"}, {"dim", m.dim()}, {"a", real_vector_json(m.a)}, {"B", real_matrix_json(m.b)}};
}

[[nodiscard]] inline Json estimate_json(const GibbsSpamEstimate& e) {
  return {{"type", "gibbs_spam"}, {"temperature", e.temperature}, {"b0", e.b0}, {"b1", e.b1}};
}

[[nodiscard]] inline Json probability_table_json(const ProbabilityTable& table) {
  Json arr = Json::array();
  for (const auto& p : table) arr.push_back(real_vector_json(p));
  return arr;
}

template <class Estimate>
[[nodiscard]] Json fit_report_json(const FitReport<Estimate>& report, const Json& config = Json::object()) {
  Json j;
  j["estimate"] = estimate_json(report.estimate);
  j["diagnostics"] = {{"log_likelihood", report.log_likelihood},
                      {"iterations", report.iterations},
                      {"converged", report.converged},
                      {"max_residual", report.max_residual},
                      {"floored_outcomes", report.floored_outcomes}};
  j["predicted"] = probability_table_json(report.predicted);
  if (!report.trace.empty()) j["trace"] = report.trace;
  j["config"] = config;
  return j;
}

}  // namespace qtomo
