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


#include "qtomo/experiments.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <set>
#include <sstream>

using namespace qtomo;

namespace {

ExperimentConfig small_qst() {
  ExperimentConfig c;
  c.grid = {1000, 10000};
  c.trials = 4;
  return c;
}

std::string rows_text(const ExperimentResult& r) {
  std::ostringstream os;
  write_rows_csv(os, r);
  return os.str();
}

class ScopedThreads {
 public:
  explicit ScopedThreads(const char* value) { setenv(kThreadEnvVar, value, 1); }
  ~ScopedThreads() { unsetenv(kThreadEnvVar); }
};

}  // namespace

TEST(ExperimentConfig, defaults) {
  const ExperimentConfig c;
  EXPECT_EQ(c.experiment, ExperimentKind::kQstCompare);
  EXPECT_EQ(c.dim, 3);
  EXPECT_EQ(c.grid, (std::vector<std::uint64_t>{1000, 10000, 100000, 1000000}));
  EXPECT_EQ(c.trials, 50);
  EXPECT_EQ(c.gate_depol_p, 0.001);
  EXPECT_EQ(c.truth_depol_p, 0.01);
  EXPECT_EQ(c.temperature, 1.0);
  EXPECT_EQ(c.omegas, (std::vector<double>{0.0, 4.0, 6.0}));
  EXPECT_EQ(c.b0, 0.01);
  EXPECT_EQ(c.b1, 0.02);
  EXPECT_EQ(c.calibration_shots, 1000000u);
  EXPECT_NO_THROW(c.validate());
}

TEST(ExperimentConfig, json_overlay_and_roundtrip) {
  const auto c = config_from_json(Json::parse(R"({"experiment": "qpt_models", "trials": 7, "grid": [100000],
                                                  "optimizer": {"restarts": 2}, "mle": {"tolerance": 1e-9}})"));
  EXPECT_EQ(c.experiment, ExperimentKind::kQptModels);
  EXPECT_EQ(c.trials, 7);
  EXPECT_EQ(c.grid, std::vector<std::uint64_t>{100000});
  EXPECT_EQ(c.optimizer.restarts, 2);
  EXPECT_EQ(c.optimizer.population, 60);
  EXPECT_EQ(c.mle.tolerance, 1e-9);
  EXPECT_EQ(c.dim, 3);
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(ExperimentConfig, rejects_invalid_input) {
  EXPECT_THROW((void)config_from_json(Json::parse(R"({"trails": 5})")), ConfigError);
  EXPECT_THROW((void)config_from_json(Json::parse(R"({"trials": "five"})")), ConfigError);
  EXPECT_THROW((void)config_from_json(Json::parse(R"({"experiment": "gst"})")), ConfigError);
  EXPECT_THROW((void)config_from_json(Json::parse(R"({"optimizer": {"pop": 3}})")), ConfigError);
  EXPECT_THROW((void)config_from_json(Json::parse("[]")), ConfigError);

  auto invalid = [](auto mutate) {
    ExperimentConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), ConfigError);
  };
  invalid([](ExperimentConfig& c) { c.grid = {}; });
  invalid([](ExperimentConfig& c) { c.grid = {1000, 1000}; });
  invalid([](ExperimentConfig& c) { c.grid = {10000, 1000}; });
  invalid([](ExperimentConfig& c) { c.trials = 0; });
  invalid([](ExperimentConfig& c) { c.dim = 1; });
  invalid([](ExperimentConfig& c) { c.gate_depol_p = 1.5; });
  invalid([](ExperimentConfig& c) { c.dim = 4; });  // MUB needs a prime dimension
  invalid([](ExperimentConfig& c) {
    c.experiment = ExperimentKind::kQptModels;
    c.dim = 5;  // omegas still list three levels
  });
  invalid([](ExperimentConfig& c) { c.protocols = {"MUB", "MUB"}; });
  invalid([](ExperimentConfig& c) { c.protocols = {"SIC"}; });

  ExperimentConfig ok;
  ok.dim = 4;
  ok.protocols = {kProtocolTwoLevel};
  EXPECT_NO_THROW(ok.validate());
  EXPECT_THROW((void)load_config("/nonexistent/config.json"), ConfigError);
}

TEST(quantile, linear_interpolation) {
  const std::vector<double> v{4.0, 1.0, 3.0, 2.0};
  EXPECT_DOUBLE_EQ(quantile(v, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile(v, 0.75), 3.25);
  EXPECT_DOUBLE_EQ(quantile({7.0}, 0.25), 7.0);
  EXPECT_THROW((void)quantile({}, 0.5), DomainError);
}

TEST(summary_path, sibling_file) {
  EXPECT_EQ(summary_path("runs/a.csv"), "runs/a_summary.csv");
  EXPECT_EQ(summary_path("out"), "out_summary.csv");
  EXPECT_EQ(summary_path("dir.v2/out"), "dir.v2/out_summary.csv");
}

TEST(parallel_for, visits_every_index_and_propagates_errors) {
  ScopedThreads threads("3");
  std::vector<std::atomic<int>> seen(100);
  parallel_for(seen.size(), [&](std::size_t i) { ++seen[i]; });
  for (const auto& s : seen) EXPECT_EQ(s.load(), 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 7) throw NumericalFailure("boom");
               }),
               NumericalFailure);
}

TEST(worker_count, respects_cap) {
  {
    ScopedThreads threads("1");
    EXPECT_EQ(worker_count(), 1u);
  }
  {
    ScopedThreads threads("garbage");
    EXPECT_GE(worker_count(), 1u);
  }
}

TEST(run_qst_compare, rows_order_and_summaries) {
  const auto r = run_qst_compare(small_qst());
  ASSERT_EQ(r.rows.size(), 2u * 2u * 4u);
  std::set<std::string> labels;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    labels.insert(row.label);
    EXPECT_EQ(row.experiment, "qst_compare");
    EXPECT_EQ(row.dim, 3);
    EXPECT_GE(row.infidelity, 0.0);
    EXPECT_LE(row.infidelity, 1.0);
    if (i > 0) {
      const auto& prev = r.rows[i - 1];
      EXPECT_LT(std::tie(prev.label, prev.n, prev.trial), std::tie(row.label, row.n, row.trial));
    }
  }
  EXPECT_EQ(labels, (std::set<std::string>{"2-level", "MUB"}));
  ASSERT_EQ(r.summaries.size(), 4u);
  for (const auto& s : r.summaries) {
    EXPECT_LE(s.q25, s.median);
    EXPECT_LE(s.median, s.q75);
  }
  EXPECT_EQ(r.metadata.at("gate_counts").at("MUB"), Json::array({0, 9, 8, 7}));
}

TEST(run_qst_compare, deterministic_across_thread_counts) {
  std::string one;
  std::string many;
  {
    ScopedThreads threads("1");
    one = rows_text(run_qst_compare(small_qst()));
  }
  {
    ScopedThreads threads("4");
    many = rows_text(run_qst_compare(small_qst()));
  }
  EXPECT_EQ(one, many);
  auto other = small_qst();
  other.seed += 1;
  EXPECT_NE(rows_text(run_qst_compare(other)), one);
}

TEST(run_qst_compare, csv_embeds_config_and_summaries_recompute) {
  const auto r = run_qst_compare(small_qst());
  const std::string text = rows_text(r);
  const std::string first_line = text.substr(0, text.find('\n'));
  ASSERT_EQ(first_line.rfind("# config: ", 0), 0u);
  const auto echoed = config_from_json(Json::parse(first_line.substr(10)));
  EXPECT_EQ(to_json(echoed), to_json(r.config));

  std::istringstream is(text);
  const auto rows = read_rows_csv(is);
  ASSERT_EQ(rows.size(), r.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].infidelity, r.rows[i].infidelity);
  const auto again = summarize(rows);
  ASSERT_EQ(again.size(), r.summaries.size());
  for (std::size_t i = 0; i < again.size(); ++i) {
    EXPECT_EQ(again[i].label, r.summaries[i].label);
    EXPECT_EQ(again[i].median, r.summaries[i].median);
    EXPECT_EQ(again[i].q25, r.summaries[i].q25);
    EXPECT_EQ(again[i].q75, r.summaries[i].q75);
  }

  std::ostringstream summary;
  write_summary_csv(summary, r);
  EXPECT_NE(summary.str().find("\nlabel,N,q25,median,q75\n"), std::string::npos);
}

TEST(run_qst_compare, single_protocol_in_composite_dimension) {
  auto c = small_qst();
  c.dim = 4;
  c.trials = 2;
  c.protocols = {kProtocolTwoLevel};
  const auto r = run_qst_compare(c);
  EXPECT_EQ(r.rows.size(), 4u);
  c.protocols = {kProtocolMub};
  EXPECT_THROW((void)run_qst_compare(c), ConfigError);
}

TEST(run_qpt_models, labels_and_row_counts) {
  ExperimentConfig c;
  c.grid = {20000};
  c.trials = 2;
  c.calibration_shots = 100000;
  c.optimizer.restarts = 1;
  c.optimizer.generations = 100;
  const auto r = run_qpt_models(c);
  ASSERT_EQ(r.rows.size(), 4u * 2u);
  std::set<std::string> labels;
  for (const auto& row : r.rows) {
    labels.insert(row.label);
    EXPECT_EQ(row.experiment, "qpt_models");
    EXPECT_GE(row.infidelity, 0.0);
    EXPECT_LE(row.infidelity, 1.0);
  }
  EXPECT_EQ(labels, (std::set<std::string>{"Ideal model", "True model", "SPAM errors model 1", "SPAM errors model 2"}));
  EXPECT_EQ(r.metadata.at("calibrations").size(), 2u);
}

TEST(run_spam_fits, report_contents_and_determinism) {
  ExperimentConfig c;
  c.trials = 2;
  c.calibration_shots = 200000;
  c.optimizer.restarts = 2;
  const std::string a = to_json(run_spam_fits(c)).dump();
  const std::string b = to_json(run_spam_fits(c)).dump();
  EXPECT_EQ(a, b);
  const Json j = Json::parse(a);
  EXPECT_EQ(j.at("config").at("experiment"), "spam_fit");
  ASSERT_EQ(j.at("runs").size(), 2u);
  const Json& run = j.at("runs").at(0);
  EXPECT_LE(run.at("general").at("predictive_residual_vs_truth").get<double>(), 0.02);
  const Json& ll = run.at("general").at("log_likelihood_per_shot");
  EXPECT_NEAR(ll.at("truth").get<double>(), ll.at("gauge_transformed_truth").get<double>(), 1e-6);
  EXPECT_GE(ll.at("fit").get<double>(), ll.at("truth").get<double>() - 1e-4);
  EXPECT_EQ(run.at("gibbs").at("estimate").at("type"), "gibbs_spam");

  c.experiment = ExperimentKind::kSpamGibbs;
  const Json only = to_json(run_spam_fits(c));
  EXPECT_FALSE(only.at("runs").at(0).contains("general"));
  EXPECT_TRUE(only.at("summary").contains("gibbs_runs_within_tolerance"));
}

TEST(run_completeness, counts_ranks_and_mub_flag) {
  ExperimentConfig c;
  const Json r3 = run_completeness(c);
  const Json& qst = r3.at("protocols").at(0);
  EXPECT_EQ(qst.at("circuits"), 7);
  EXPECT_EQ(qst.at("rank"), 9);
  EXPECT_EQ(qst.at("max_gates"), 1);
  EXPECT_FALSE(qst.at("mub_equivalent").get<bool>());
  const Json& qpt = r3.at("protocols").at(1);
  EXPECT_EQ(qpt.at("circuits"), 63);
  EXPECT_EQ(qpt.at("rank"), 81);
  EXPECT_EQ(qpt.at("max_gates"), 3);
  EXPECT_EQ(r3.at("protocols").size(), 3u);

  c.dim = 2;
  const Json r2 = run_completeness(c);
  EXPECT_EQ(r2.at("protocols").at(0).at("circuits"), 3);
  EXPECT_EQ(r2.at("protocols").at(0).at("rank"), 4);
  EXPECT_TRUE(r2.at("protocols").at(0).at("mub_equivalent").get<bool>());

  c.dim = 4;
  c.protocols = {kProtocolTwoLevel};
  const Json r4 = run_completeness(c);
  EXPECT_EQ(r4.at("protocols").size(), 2u);
  EXPECT_NE(completeness_text(r4).find("rank 16/16"), std::string::npos);
}
