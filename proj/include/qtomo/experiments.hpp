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


// Seeded batch experiments: QST protocol comparison, QPT model comparison, SPAM fits
// and protocol completeness reports, with CSV/JSON persistence.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "qtomo/errors.hpp"
#include "qtomo/optimize.hpp"
#include "qtomo/protocols.hpp"
#include "qtomo/qcore.hpp"
#include "qtomo/random.hpp"
#include "qtomo/readout.hpp"
#include "qtomo/recon.hpp"
#include "qtomo/serialization.hpp"
#include "qtomo/sim.hpp"

namespace qtomo {

enum class ExperimentKind { kQstCompare, kQptModels, kSpamGeneral, kSpamGibbs, kSpamFit, kCompleteness };

inline const char* experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kQstCompare: return "qst_compare";
    case ExperimentKind::kQptModels: return "qpt_models";
    case ExperimentKind::kSpamGeneral: return "spam_general";
    case ExperimentKind::kSpamGibbs: return "spam_gibbs";
    case ExperimentKind::kSpamFit: return "spam_fit";
    case ExperimentKind::kCompleteness: return "completeness";
  }
  return "unknown";
}

inline ExperimentKind experiment_from_name(const std::string& name) {
  for (auto k : {ExperimentKind::kQstCompare, ExperimentKind::kQptModels, ExperimentKind::kSpamGeneral,
                 ExperimentKind::kSpamGibbs, ExperimentKind::kSpamFit, ExperimentKind::kCompleteness}) {
    if (name == experiment_name(k)) return k;
  }
  throw ConfigError("unknown experiment '" + name + "'");
}

inline constexpr const char* kProtocolTwoLevel = "2-level";
inline constexpr const char* kProtocolMub = "MUB";

inline constexpr const char* kModelIdeal = "Ideal model";
inline constexpr const char* kModelTrue = "True model";
inline constexpr const char* kModelGeneral = "SPAM errors model 1";
inline constexpr const char* kModelGibbs = "SPAM errors model 2";

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kQstCompare;
  int dim = 3;
  /// Total shots per tomography dataset.
  std::vector<std::uint64_t> grid{1000, 10000, 100000, 1000000};
  int trials = 50;
  double gate_depol_p = 0.001;
  double truth_depol_p = 0.01;
  double temperature = 1.0;
  std::vector<double> omegas{0.0, 4.0, 6.0};
  double b0 = 0.01;
  double b1 = 0.02;
  /// Total shots of each SPAM calibration dataset.
  std::uint64_t calibration_shots = 1000000;
  std::uint64_t seed = 20201101;
  std::string out;
  /// Protocols compared by qst_compare.
  std::vector<std::string> protocols{kProtocolMub, kProtocolTwoLevel};
  OptimizerConfig optimizer;
  MleOptions mle;

  [[nodiscard]] bool needs_spam_levels() const {
    return experiment == ExperimentKind::kQptModels || experiment == ExperimentKind::kSpamGeneral ||
           experiment == ExperimentKind::kSpamGibbs || experiment == ExperimentKind::kSpamFit;
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
    if (dim < 2 || dim > 16) fail("dim must lie in [2, 16]");
    if (grid.empty()) fail("grid must be nonempty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i] == 0) fail("grid entries must be positive");
      if (i > 0 && grid[i] <= grid[i - 1]) fail("grid must be strictly ascending");
    }
    if (trials < 1) fail("trials must be at least 1");
    for (double p : {gate_depol_p, truth_depol_p}) {
      if (!(p >= 0.0 && p <= 1.0)) fail("depolarizing strengths must lie in [0, 1]");
    }
    if (!(temperature > 0.0) || !std::isfinite(temperature)) fail("temperature must be positive");
    if (!(b0 >= 0.0 && b0 <= 1.0 && b1 >= 0.0 && b1 <= 1.0)) fail("b0 and b1 must lie in [0, 1]");
    if (calibration_shots == 0) fail("calibration_shots must be positive");
    if (needs_spam_levels() && static_cast<int>(omegas.size()) != dim) {
      fail("omegas must list one energy per level for this experiment");
    }
    if (experiment == ExperimentKind::kQstCompare) {
      if (protocols.empty()) fail("protocols must be nonempty");
      std::set<std::string> seen;
      for (const auto& p : protocols) {
        if (p != kProtocolMub && p != kProtocolTwoLevel) fail("unknown protocol '" + p + "'");
        if (!seen.insert(p).second) fail("protocol '" + p + "' listed twice");
        if (p == kProtocolMub && !detail::is_prime(dim)) fail("the MUB protocol requires a prime dimension");
      }
      const std::uint64_t circuits = static_cast<std::uint64_t>(dim) * static_cast<std::uint64_t>(dim) + 1;
      if (grid.front() < circuits) fail("grid values must cover at least one shot per circuit");
    }
    if (experiment == ExperimentKind::kQptModels) {
      const auto circuits = static_cast<std::uint64_t>(dim * dim) * static_cast<std::uint64_t>(dim * (dim - 1) + 1);
      if (grid.front() < circuits) fail("grid values must cover at least one shot per circuit");
    }
    try {
      optimizer.validate();
    } catch (const DomainError& e) {
      fail(e.what());
    }
    if (mle.max_iterations < 1 || !(mle.tolerance > 0.0)) fail("mle settings must be positive");
  }
};

[[nodiscard]] inline Json to_json(const ExperimentConfig& c) {
  return {{"experiment", experiment_name(c.experiment)},
          {"dim", c.dim},
          {"grid", c.grid},
          {"trials", c.trials},
          {"gate_depol_p", c.gate_depol_p},
          {"truth_depol_p", c.truth_depol_p},
          {"temperature", c.temperature},
          {"omegas", c.omegas},
          {"b0", c.b0},
          {"b1", c.b1},
          {"calibration_shots", c.calibration_shots},
          {"seed", c.seed},
          {"out", c.out},
          {"protocols", c.protocols},
          {"optimizer",
           {{"population", c.optimizer.population},
            {"generations", c.optimizer.generations},
            {"restarts", c.optimizer.restarts},
            {"mutation_scale", c.optimizer.mutation_scale},
            {"elite_fraction", c.optimizer.elite_fraction}}},
          {"mle", {{"max_iterations", c.mle.max_iterations}, {"tolerance", c.mle.tolerance}}}};
}

namespace detail {

template <class T>
void read_optional(const Json& j, const char* key, T& target) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config: field '") + key + "' has the wrong type");
  }
}

inline void reject_unknown_keys(const Json& j, const std::set<std::string>& known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.contains(it.key())) throw ConfigError("config: unknown field '" + it.key() + "' in " + where);
  }
}

}  // namespace detail

/// Overlays the fields present in `j` onto `base`.  Unknown fields are rejected.
[[nodiscard]] inline ExperimentConfig config_from_json(const Json& j, ExperimentConfig base = {}) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  detail::reject_unknown_keys(j,
                              {"experiment", "dim", "grid", "trials", "gate_depol_p", "truth_depol_p", "temperature",
                               "omegas", "b0", "b1", "calibration_shots", "seed", "out", "protocols", "optimizer", "mle"},
                              "top level");
  ExperimentConfig c = std::move(base);
  if (j.contains("experiment")) {
    std::string name;
    detail::read_optional(j, "experiment", name);
    c.experiment = experiment_from_name(name);
  }
  detail::read_optional(j, "dim", c.dim);
  detail::read_optional(j, "grid", c.grid);
  detail::read_optional(j, "trials", c.trials);
  detail::read_optional(j, "gate_depol_p", c.gate_depol_p);
  detail::read_optional(j, "truth_depol_p", c.truth_depol_p);
  detail::read_optional(j, "temperature", c.temperature);
  detail::read_optional(j, "omegas", c.omegas);
  detail::read_optional(j, "b0", c.b0);
  detail::read_optional(j, "b1", c.b1);
  detail::read_optional(j, "calibration_shots", c.calibration_shots);
  detail::read_optional(j, "seed", c.seed);
  detail::read_optional(j, "out", c.out);
  detail::read_optional(j, "protocols", c.protocols);
  if (j.contains("optimizer")) {
    const Json& o = j.at("optimizer");
    if (!o.is_object()) throw ConfigError("config: 'optimizer' must be an object");
    detail::reject_unknown_keys(o, {"population", "generations", "restarts", "mutation_scale", "elite_fraction",
                                    "polish_evaluations"},
                                "optimizer");
    detail::read_optional(o, "population", c.optimizer.population);
    detail::read_optional(o, "generations", c.optimizer.generations);
    detail::read_optional(o, "restarts", c.optimizer.restarts);
    detail::read_optional(o, "mutation_scale", c.optimizer.mutation_scale);
    detail::read_optional(o, "elite_fraction", c.optimizer.elite_fraction);
    detail::read_optional(o, "polish_evaluations", c.optimizer.polish_evaluations);
  }
  if (j.contains("mle")) {
    const Json& m = j.at("mle");
    if (!m.is_object()) throw ConfigError("config: 'mle' must be an object");
    detail::reject_unknown_keys(m, {"max_iterations", "tolerance"}, "mle");
    detail::read_optional(m, "max_iterations", c.mle.max_iterations);
    detail::read_optional(m, "tolerance", c.mle.tolerance);
  }
  return c;
}

[[nodiscard]] inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j, std::move(base));
}

// ---- results ----

struct ResultRow {
  std::string experiment;
  std::string label;
  int dim = 0;
  std::uint64_t n = 0;
  int trial = 0;
  double infidelity = 0.0;
};

struct SummaryRow {
  std::string label;
  std::uint64_t n = 0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summaries;
  /// Reconstructions that hit their iteration budget.
  int nonconverged_fits = 0;
  Json metadata = Json::object();
};

/// Linear interpolation between order statistics at position q (n - 1).
[[nodiscard]] inline double quantile(std::vector<double> values, double q) {
  detail::require(!values.empty(), "quantile: no values");
  detail::require(q >= 0.0 && q <= 1.0, "quantile: q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

inline void sort_canonical(std::vector<ResultRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.label, a.n, a.trial) < std::tie(b.label, b.n, b.trial);
  });
}

[[nodiscard]] inline std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::map<std::pair<std::string, std::uint64_t>, std::vector<double>> groups;
  for (const auto& r : rows) groups[{r.label, r.n}].push_back(r.infidelity);
  std::vector<SummaryRow> out;
  for (const auto& [key, values] : groups) {
    out.push_back(SummaryRow{key.first, key.second, quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75)});
  }
  return out;
}

[[nodiscard]] inline const SummaryRow& find_summary(const std::vector<SummaryRow>& summaries, const std::string& label,
                                                    std::uint64_t n) {
  for (const auto& s : summaries) {
    if (s.label == label && s.n == n) return s;
  }
  throw DomainError("find_summary: no summary for " + label + " at N=" + std::to_string(n));
}

// ---- execution ----

inline constexpr const char* kThreadEnvVar = "QTOMO_THREADS";

/// Worker count: hardware concurrency, capped by QTOMO_THREADS when set to a positive integer.
[[nodiscard]] inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv(kThreadEnvVar)) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) n = std::min(n, static_cast<unsigned>(cap));
  }
  return n;
}

/// Runs fn(0) ... fn(count - 1) on up to worker_count() threads and rethrows the first exception.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&]() {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

namespace detail {

inline double checked_infidelity(double fidelity) {
  if (!std::isfinite(fidelity)) throw NumericalFailure("reconstruction produced a non-finite fidelity");
  return std::clamp(1.0 - fidelity, 0.0, 1.0);
}

inline TomographyProtocol qst_protocol_by_label(const std::string& label, int d) {
  return label == kProtocolMub ? mub_protocol(d) : qst_two_level(d);
}

inline NoiseConfig spam_noise(const ExperimentConfig& c) {
  NoiseConfig noise;
  noise.gate_depol_p = c.gate_depol_p;
  noise.init = GibbsInitParams{c.temperature, c.omegas};
  noise.readout = LevelReadoutParams{c.b0, c.b1};
  return noise;
}

inline OptimizerConfig optimizer_for(const ExperimentConfig& c, RandomSeed seed) {
  OptimizerConfig o = c.optimizer;
  o.seed = seed;
  return o;
}

inline void finish(ExperimentResult& result) {
  sort_canonical(result.rows);
  result.summaries = summarize(result.rows);
}

}  // namespace detail

/// Haar-random pure states depolarized by truth_depol_p, measured by each configured protocol
/// under per-gate depolarizing noise and reconstructed with ideal-SPAM models.
///
/// Each trial draws one truth shared by every N and protocol.
[[nodiscard]] inline ExperimentResult run_qst_compare(ExperimentConfig config) {
  config.experiment = ExperimentKind::kQstCompare;
  config.validate();
  const int d = config.dim;
  const RandomSeed root{config.seed};
  NoiseConfig noise;
  noise.gate_depol_p = config.gate_depol_p;

  std::vector<TomographyProtocol> protocols;
  std::vector<MeasurementModel> models;
  std::vector<std::vector<std::string>> labels;
  ExperimentResult result;
  result.config = config;
  for (const auto& name : config.protocols) {
    protocols.push_back(detail::qst_protocol_by_label(name, d));
    models.push_back(build_measurement_model(protocols.back(), SpamAssumption::ideal(d)));
    std::vector<std::string> l;
    std::vector<std::size_t> gates;
    for (const auto& c : protocols.back().circuits()) {
      l.push_back(c.label);
      gates.push_back(c.gate_count());
    }
    labels.push_back(std::move(l));
    result.metadata["gate_counts"][name] = gates;
  }

  const std::size_t np = protocols.size();
  const std::size_t nn = config.grid.size();
  const auto trials = static_cast<std::size_t>(config.trials);
  std::vector<ResultRow> rows(np * nn * trials);
  std::atomic<int> nonconverged{0};
  parallel_for(trials, [&](std::size_t t) {
    const RandomSeed trial_seed = root.derive("qst-truth", t);
    const DensityMatrix truth = depolarize(DensityMatrix::pure(haar_random_state(d, trial_seed)), config.truth_depol_p);
    for (std::size_t p = 0; p < np; ++p) {
      const auto table = protocol_probabilities(protocols[p], truth, noise);
      for (std::size_t k = 0; k < nn; ++k) {
        const std::uint64_t n = config.grid[k];
        const RandomSeed data_seed = root.derive("qst-data:" + config.protocols[p], n).derive("trial", t);
        const auto data = sample_dataset(config.protocols[p], labels[p], table, n, data_seed);
        const auto fit = mle_state(Observations::from_counts(data), models[p], config.mle);
        if (!fit.converged) ++nonconverged;
        rows[(p * nn + k) * trials + t] = ResultRow{experiment_name(config.experiment), config.protocols[p], d, n,
                                                    static_cast<int>(t),
                                                    detail::checked_infidelity(fidelity_states(fit.estimate, truth))};
      }
    }
  });
  result.rows = std::move(rows);
  result.nonconverged_fits = nonconverged;
  detail::finish(result);
  return result;
}

/// Calibration fits of one trial: general diagonal (a, B) and Gibbs (T, b0, b1).
struct SpamCalibration {
  FitReport<DiagonalSpamModel> general;
  FitReport<GibbsSpamEstimate> gibbs;
  CountsDataset general_data;
  CountsDataset gibbs_data;
};

[[nodiscard]] inline FitReport<DiagonalSpamModel> calibrate_spam_general(const ExperimentConfig& config, RandomSeed seed,
                                                                         CountsDataset* data_out = nullptr) {
  const auto data = run_protocol(spam_calibration_protocol(config.dim), std::monostate{}, detail::spam_noise(config),
                                 config.calibration_shots, seed.derive("data"));
  auto fit = estimate_spam_general(Observations::from_counts(data), config.gate_depol_p,
                                   detail::optimizer_for(config, seed.derive("optimizer")));
  if (data_out) *data_out = data;
  return fit;
}

[[nodiscard]] inline FitReport<GibbsSpamEstimate> calibrate_spam_gibbs(const ExperimentConfig& config, RandomSeed seed,
                                                                       CountsDataset* data_out = nullptr) {
  const auto data = run_level_reads(detail::spam_noise(config), config.dim, config.calibration_shots, seed.derive("data"));
  auto fit = estimate_spam_gibbs(Observations::from_counts(data), config.omegas,
                                 detail::optimizer_for(config, seed.derive("optimizer")));
  if (data_out) *data_out = data;
  return fit;
}

/// Haar-random unitaries followed by truth_depol_p depolarization, probed by the 2-level QPT
/// protocol under the configured SPAM and gate noise.  Each dataset is reconstructed under the
/// ideal model, the true model and the two SPAM models fitted to that trial's calibration data.
[[nodiscard]] inline ExperimentResult run_qpt_models(ExperimentConfig config) {
  config.experiment = ExperimentKind::kQptModels;
  config.validate();
  const int d = config.dim;
  const RandomSeed root{config.seed};
  const NoiseConfig noise = detail::spam_noise(config);
  const TomographyProtocol protocol = qpt_two_level(d);
  std::vector<std::string> labels;
  for (const auto& c : protocol.circuits()) labels.push_back(c.label);
  const MeasurementModel ideal_model = build_measurement_model(protocol, SpamAssumption::ideal(d));
  const MeasurementModel true_model = build_measurement_model(protocol, SpamAssumption::from_noise(noise, d));
  const std::vector<std::string> model_labels{kModelIdeal, kModelTrue, kModelGeneral, kModelGibbs};

  const std::size_t nm = model_labels.size();
  const std::size_t nn = config.grid.size();
  const auto trials = static_cast<std::size_t>(config.trials);
  std::vector<ResultRow> rows(nm * nn * trials);
  std::vector<Json> calibrations(trials);
  std::atomic<int> nonconverged{0};
  parallel_for(trials, [&](std::size_t t) {
    const auto u = haar_random_unitary(d, root.derive("qpt-truth", t));
    const ChoiMatrix truth = choi_compose_depolarize(choi_from_unitary(u), config.truth_depol_p);

    const auto general = calibrate_spam_general(config, root.derive("qpt-calibration-general", t));
    const auto gibbs = calibrate_spam_gibbs(config, root.derive("qpt-calibration-gibbs", t));
    calibrations[t] = {{"trial", t}, {"general", estimate_json(general.estimate)}, {"gibbs", estimate_json(gibbs.estimate)}};
    const MeasurementModel general_model =
        build_measurement_model(protocol, SpamAssumption::diagonal(general.estimate));
    const MeasurementModel gibbs_model = build_measurement_model(
        protocol, SpamAssumption::gibbs(GibbsInitParams{gibbs.estimate.temperature, config.omegas},
                                        LevelReadoutParams{gibbs.estimate.b0, gibbs.estimate.b1}));
    const std::vector<const MeasurementModel*> models{&ideal_model, &true_model, &general_model, &gibbs_model};

    const auto table = protocol_probabilities(protocol, truth, noise);
    for (std::size_t k = 0; k < nn; ++k) {
      const std::uint64_t n = config.grid[k];
      const auto data = sample_dataset("QPT:2-level", labels, table, n, root.derive("qpt-data", n).derive("trial", t));
      const auto obs = Observations::from_counts(data);
      for (std::size_t m = 0; m < nm; ++m) {
        const auto fit = mle_process(obs, *models[m], config.mle);
        if (!fit.converged) ++nonconverged;
        rows[(m * nn + k) * trials + t] =
            ResultRow{experiment_name(config.experiment), model_labels[m], d, n, static_cast<int>(t),
                      detail::checked_infidelity(process_fidelity(fit.estimate, truth))};
      }
    }
  });
  ExperimentResult result;
  result.config = config;
  result.rows = std::move(rows);
  result.nonconverged_fits = nonconverged;
  result.metadata["calibrations"] = calibrations;
  detail::finish(result);
  return result;
}

/// Per-run SPAM fit diagnostics.
struct SpamFitRun {
  int trial = 0;
  std::uint64_t seed = 0;
  std::optional<FitReport<DiagonalSpamModel>> general;
  /// max |p_fit - p_true| over calibration circuits and outcomes.
  double general_predictive_residual = 0.0;
  /// Per-shot log-likelihood of the fitted, true and gauge-transformed true models.
  double general_ll_fit = 0.0;
  double general_ll_truth = 0.0;
  double general_ll_gauge = 0.0;
  double gauge_p = 0.0;
  std::optional<FitReport<GibbsSpamEstimate>> gibbs;
};

/// Diagonal SPAM model implied by the configured Gibbs initialization and level readout.
[[nodiscard]] inline DiagonalSpamModel true_diagonal_spam(const ExperimentConfig& config) {
  const NoiseConfig noise = detail::spam_noise(config);
  return DiagonalSpamModel{gibbs_populations(GibbsInitParams{config.temperature, config.omegas}),
                           readout_povm(noise, config.dim).diagonal_confusion()};
}

/// One seeded run of the requested calibration fits.
[[nodiscard]] inline SpamFitRun run_spam_fit_once(const ExperimentConfig& config, RandomSeed seed, bool general,
                                                  bool gibbs) {
  SpamFitRun run;
  run.seed = seed.value;
  if (general) {
    CountsDataset data;
    run.general = calibrate_spam_general(config, seed.derive("general"), &data);
    const DiagonalSpamModel truth = true_diagonal_spam(config);
    const auto true_table = spam_calibration_probabilities(truth, config.gate_depol_p);
    for (std::size_t i = 0; i < true_table.size(); ++i) {
      run.general_predictive_residual = std::max(
          run.general_predictive_residual, (run.general->predicted[i] - true_table[i]).cwiseAbs().maxCoeff());
    }
    const auto obs = Observations::from_counts(data);
    const double total = obs.total();
    // Largest admissible gauge step keeps every a_j - p/d >= 0; take half of it.
    run.gauge_p = std::min(0.5, 0.5 * config.dim * truth.a.minCoeff());
    run.general_ll_fit = run.general->log_likelihood / total;
    run.general_ll_truth = spam_general_log_likelihood(obs, truth, config.gate_depol_p) / total;
    run.general_ll_gauge =
        spam_general_log_likelihood(obs, gauge_transform(truth, run.gauge_p), config.gate_depol_p) / total;
  }
  if (gibbs) run.gibbs = calibrate_spam_gibbs(config, seed.derive("gibbs"));
  return run;
}

struct SpamFitResult {
  ExperimentConfig config;
  std::vector<SpamFitRun> runs;
};

/// `trials` independent calibration runs at calibration_shots each.
[[nodiscard]] inline SpamFitResult run_spam_fits(ExperimentConfig config) {
  if (config.experiment != ExperimentKind::kSpamGeneral && config.experiment != ExperimentKind::kSpamGibbs) {
    config.experiment = ExperimentKind::kSpamFit;
  }
  config.validate();
  const bool general = config.experiment != ExperimentKind::kSpamGibbs;
  const bool gibbs = config.experiment != ExperimentKind::kSpamGeneral;
  const RandomSeed root{config.seed};
  SpamFitResult result;
  result.config = config;
  result.runs.resize(static_cast<std::size_t>(config.trials));
  parallel_for(result.runs.size(), [&](std::size_t t) {
    result.runs[t] = run_spam_fit_once(config, root.derive("spam-fit", t), general, gibbs);
    result.runs[t].trial = static_cast<int>(t);
  });
  return result;
}

[[nodiscard]] inline Json to_json(const SpamFitResult& result) {
  const auto& c = result.config;
  Json runs = Json::array();
  double worst_residual = 0.0;
  double worst_gauge = 0.0;
  int gibbs_within = 0;
  for (const auto& r : result.runs) {
    Json j{{"trial", r.trial}, {"seed", r.seed}};
    if (r.general) {
      j["general"] = fit_report_json(*r.general);
      j["general"].erase("config");
      j["general"]["predictive_residual_vs_truth"] = r.general_predictive_residual;
      j["general"]["log_likelihood_per_shot"] = {
          {"fit", r.general_ll_fit}, {"truth", r.general_ll_truth}, {"gauge_transformed_truth", r.general_ll_gauge}};
      j["general"]["gauge_p"] = r.gauge_p;
      worst_residual = std::max(worst_residual, r.general_predictive_residual);
      worst_gauge = std::max(worst_gauge, std::abs(r.general_ll_truth - r.general_ll_gauge));
    }
    if (r.gibbs) {
      j["gibbs"] = fit_report_json(*r.gibbs);
      j["gibbs"].erase("config");
      const auto& e = r.gibbs->estimate;
      const bool within = std::abs(e.temperature - c.temperature) <= 0.05 && std::abs(e.b0 - c.b0) <= 0.005 &&
                          std::abs(e.b1 - c.b1) <= 0.005;
      j["gibbs"]["within_tolerance"] = within;
      gibbs_within += within ? 1 : 0;
    }
    runs.push_back(std::move(j));
  }
  Json summary{{"runs", result.runs.size()}};
  if (!result.runs.empty() && result.runs.front().general) {
    summary["general_max_predictive_residual"] = worst_residual;
    summary["general_max_gauge_log_likelihood_gap"] = worst_gauge;
  }
  if (!result.runs.empty() && result.runs.front().gibbs) summary["gibbs_runs_within_tolerance"] = gibbs_within;
  return {{"config", to_json(c)}, {"summary", std::move(summary)}, {"runs", std::move(runs)}};
}

/// Sizes, gate counts, design-matrix ranks and mutual-unbiasedness of the 2-level protocols
/// (and of the MUB protocol for prime d).
[[nodiscard]] inline Json run_completeness(ExperimentConfig config) {
  config.experiment = ExperimentKind::kCompleteness;
  config.validate();
  const int d = config.dim;
  auto describe = [](const TomographyProtocol& p) {
    std::vector<std::size_t> gates;
    for (const auto& c : p.circuits()) gates.push_back(c.gate_count());
    const auto rank = completeness_check(p);
    Json j{{"name", p.name()},
           {"kind", protocol_kind_name(p.kind())},
           {"dim", p.dim()},
           {"circuits", p.size()},
           {"gate_counts", gates},
           {"max_gates", p.max_gate_count()},
           {"rank", rank.rank},
           {"full_rank", rank.full_rank},
           {"complete", rank.complete}};
    return j;
  };
  Json protocols = Json::array();
  const auto qst = qst_two_level(d);
  Json qst_json = describe(qst);
  const double deviation = mutual_unbiasedness_deviation(qst);
  qst_json["mub_deviation"] = deviation;
  qst_json["mub_equivalent"] = deviation <= 1e-10;
  protocols.push_back(std::move(qst_json));
  protocols.push_back(describe(qpt_two_level(d)));
  if (detail::is_prime(d)) {
    const auto mub = mub_protocol(d);
    Json mub_json = describe(mub);
    mub_json["mub_deviation"] = mutual_unbiasedness_deviation(mub);
    protocols.push_back(std::move(mub_json));
  }
  return {{"config", to_json(config)}, {"protocols", std::move(protocols)}};
}

[[nodiscard]] inline std::string completeness_text(const Json& report) {
  std::ostringstream os;
  for (const auto& p : report.at("protocols")) {
    os << p.at("kind").get<std::string>() << ' ' << p.at("name").get<std::string>() << " d=" << p.at("dim").get<int>()
       << ": " << p.at("circuits").get<std::size_t>() << " circuits, max " << p.at("max_gates").get<std::size_t>()
       << " gates, rank " << p.at("rank").get<int>() << '/' << p.at("full_rank").get<int>() << ", "
       << (p.at("complete").get<bool>() ? "complete" : "incomplete");
    if (p.contains("mub_equivalent")) os << ", mub_equivalent=" << (p.at("mub_equivalent").get<bool>() ? "true" : "false");
    os << "\n  gates per circuit:";
    for (const auto& g : p.at("gate_counts")) os << ' ' << g.get<std::size_t>();
    os << '\n';
  }
  return os.str();
}

// ---- persistence ----

namespace detail {

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline void write_config_comment(std::ostream& os, const ExperimentConfig& config) {
  os << "# config: " << to_json(config).dump() << '\n';
}

}  // namespace detail

inline void write_rows_csv(std::ostream& os, const ExperimentResult& result) {
  detail::write_config_comment(os, result.config);
  os << "experiment,label,dim,N,trial,infidelity\n";
  for (const auto& r : result.rows) {
    os << r.experiment << ',' << r.label << ',' << r.dim << ',' << r.n << ',' << r.trial << ','
       << detail::format_double(r.infidelity) << '\n';
  }
}

inline void write_summary_csv(std::ostream& os, const ExperimentResult& result) {
  detail::write_config_comment(os, result.config);
  os << "label,N,q25,median,q75\n";
  for (const auto& s : result.summaries) {
    os << s.label << ',' << s.n << ',' << detail::format_double(s.q25) << ',' << detail::format_double(s.median) << ','
       << detail::format_double(s.q75) << '\n';
  }
}

/// "runs/a.csv" -> "runs/a_summary.csv"; a path without extension gets "_summary.csv".
[[nodiscard]] inline std::string summary_path(const std::string& path) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + "_summary.csv";
  return path.substr(0, dot) + "_summary" + path.substr(dot);
}

/// Parses rows written by write_rows_csv; comment lines are skipped.
[[nodiscard]] inline std::vector<ResultRow> read_rows_csv(std::istream& is) {
  std::vector<ResultRow> rows;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != "experiment,label,dim,N,trial,infidelity") throw ConfigError("rows csv: unexpected header");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw ConfigError("rows csv: expected 6 fields");
    try {
      rows.push_back(ResultRow{f[0], f[1], std::stoi(f[2]), std::stoull(f[3]), std::stoi(f[4]), std::stod(f[5])});
    } catch (const std::logic_error&) {
      throw ConfigError("rows csv: malformed number in '" + line + "'");
    }
  }
  return rows;
}

}  // namespace qtomo
