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


// Command-line experiment runner.
//
//   qtomo qst-compare  [--config file.json] [--dim D] [--trials T] [--grid 1000,10000] [--seed S] [--out rows.csv]
//   qtomo qpt-models   ...
//   qtomo spam-fit     ...
//   qtomo completeness ...
//   qtomo protocol --kind qst|qpt|mub|spam --dim D
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qtomo/experiments.hpp"
#include "qtomo/serialization.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Overrides {
  std::string config_path;
  std::optional<int> dim;
  std::optional<int> trials;
  std::vector<std::uint64_t> grid;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON experiment configuration");
  cmd->add_option("--dim", o.dim, "Qudit dimension");
  cmd->add_option("--trials", o.trials, "Trials per grid point");
  cmd->add_option("--grid", o.grid, "Comma-separated total sample sizes")->delimiter(',');
  cmd->add_option("--seed", o.seed, "Root seed");
  cmd->add_option("--out", o.out, "Output file (stdout when omitted)");
}

bool compatible(qtomo::ExperimentKind requested, qtomo::ExperimentKind in_file) {
  using K = qtomo::ExperimentKind;
  if (requested == in_file) return true;
  return requested == K::kSpamFit && (in_file == K::kSpamGeneral || in_file == K::kSpamGibbs);
}

qtomo::ExperimentConfig resolve(const Overrides& o, qtomo::ExperimentKind kind) {
  qtomo::ExperimentConfig c;
  c.experiment = kind;
  if (!o.config_path.empty()) {
    c = qtomo::load_config(o.config_path, c);
    if (!compatible(kind, c.experiment)) {
      throw qtomo::ConfigError(std::string("config: file describes experiment '") + qtomo::experiment_name(c.experiment) +
                               "' but '" + qtomo::experiment_name(kind) + "' was requested");
    }
  }
  if (o.dim) c.dim = *o.dim;
  if (o.trials) c.trials = *o.trials;
  if (!o.grid.empty()) c.grid = o.grid;
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out = *o.out;
  c.validate();
  return c;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw qtomo::ConfigError("cannot open output file '" + path + "'");
  return f;
}

void emit_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    open_output(path) << text;
  }
}

void report_nonconverged(int n) {
  if (n > 0) std::cerr << "warning: " << n << " reconstructions stopped at the iteration budget\n";
}

int run_table(const qtomo::ExperimentResult& result) {
  report_nonconverged(result.nonconverged_fits);
  if (result.config.out.empty()) {
    qtomo::write_rows_csv(std::cout, result);
    return 0;
  }
  {
    auto f = open_output(result.config.out);
    qtomo::write_rows_csv(f, result);
  }
  {
    auto f = open_output(qtomo::summary_path(result.config.out));
    qtomo::write_summary_csv(f, result);
  }
  for (const auto& s : result.summaries) {
    std::cout << s.label << "  N=" << s.n << "  median=" << s.median << "  [" << s.q25 << ", " << s.q75 << "]\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Qudit tomography experiments"};
  app.require_subcommand(1);

  Overrides o;
  auto* qst = app.add_subcommand("qst-compare", "Compare QST protocols under gate noise");
  auto* qpt = app.add_subcommand("qpt-models", "Compare QPT reconstruction models under SPAM noise");
  auto* spam = app.add_subcommand("spam-fit", "Fit SPAM models to calibration data");
  auto* comp = app.add_subcommand("completeness", "Report protocol sizes, gate counts and ranks");
  for (auto* cmd : {qst, qpt, spam, comp}) add_common_options(cmd, o);

  std::string protocol_kind = "qst";
  int protocol_dim = 3;
  auto* proto = app.add_subcommand("protocol", "Print a protocol as JSON");
  proto->add_option("--kind", protocol_kind, "qst, qpt, mub or spam")
      ->check(CLI::IsMember({"qst", "qpt", "mub", "spam"}));
  proto->add_option("--dim", protocol_dim, "Qudit dimension");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    using qtomo::ExperimentKind;
    if (*qst) return run_table(qtomo::run_qst_compare(resolve(o, ExperimentKind::kQstCompare)));
    if (*qpt) return run_table(qtomo::run_qpt_models(resolve(o, ExperimentKind::kQptModels)));
    if (*spam) {
      const auto cfg = resolve(o, ExperimentKind::kSpamFit);
      emit_text(cfg.out, qtomo::to_json(qtomo::run_spam_fits(cfg)).dump(2) + "\n");
      return 0;
    }
    if (*comp) {
      const auto cfg = resolve(o, ExperimentKind::kCompleteness);
      const auto report = qtomo::run_completeness(cfg);
      std::cout << qtomo::completeness_text(report);
      if (!cfg.out.empty()) emit_text(cfg.out, report.dump(2) + "\n");
      return 0;
    }
    if (*proto) {
      if (protocol_dim < 2) throw qtomo::ConfigError("protocol: dim must be at least 2");
      std::optional<qtomo::TomographyProtocol> p;
      if (protocol_kind == "qst") p = qtomo::qst_two_level(protocol_dim);
      if (protocol_kind == "qpt") p = qtomo::qpt_two_level(protocol_dim);
      if (protocol_kind == "mub") p = qtomo::mub_protocol(protocol_dim);
      if (protocol_kind == "spam") p = qtomo::spam_calibration_protocol(protocol_dim);
      std::cout << qtomo::to_json(*p).dump(2) << '\n';
      return 0;
    }
  } catch (const qtomo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const qtomo::UnsupportedDimension& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const qtomo::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
