// Copyright 2026 The anchormdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment driver.
//
//   anchormdp_cli run --synthetic 2000,20 --k 200 --out runs/a
//   anchormdp_cli run --config run.ini --epsilon 2 --out runs/b
//   anchormdp_cli generate-synthetic --count 5000 --side 20 --out nodes.csv

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/strings/str_split.h"
#include "anchormdp/experiment.h"

namespace {

using anchormdp::RunConfig;

int Fail(const absl::Status& s) {
  std::cerr << "error: " << s.message() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anchor-based metric-DP perturbation experiments"};
  app.require_subcommand(1);

  RunConfig config;
  std::string synthetic, policy = "exp", metric = "haversine", grid = "8x8",
                         mechanisms;
  double gamma = 0.0;
  CLI::App* run = app.add_subcommand("run", "Run mechanisms and write reports");
  // key=value / INI file; command-line flags override it.
  run->set_config("--config", "", "Configuration file");
  run->add_option("--dataset", config.dataset, "Node CSV (id,lat,lon[,weight])");
  run->add_option("--synthetic", synthetic, "Uniform square: N,SIDE_KM");
  run->add_option("--metric", metric, "haversine or euclidean")
      ->capture_default_str();
  run->add_option("--k", config.k, "Domain size K")->capture_default_str();
  run->add_option("--users", config.users, "Users N")->capture_default_str();
  run->add_option("--epsilon", config.epsilon, "Privacy budget (1/km)")
      ->capture_default_str();
  run->add_option("--delta", config.delta, "Failure probability")
      ->capture_default_str();
  run->add_option("--policy", policy, "exp, power or logistic")
      ->capture_default_str();
  run->add_option("--alpha", config.alpha)->capture_default_str();
  run->add_option("--lambda", config.lambda)->capture_default_str();
  CLI::Option* gamma_opt =
      run->add_option("--gamma", gamma, "Distance cap (km); default dmax/50");
  run->add_option("--cap-gamma-nn", config.gamma_nn, "Neighborhood size")
      ->capture_default_str();
  run->add_option("--em-scale", config.em_scale)->capture_default_str();
  run->add_option("--grid", grid, "LP+CA grid ROWSxCOLS")->capture_default_str();
  run->add_option("--mechanisms", mechanisms,
                  "Comma list of em,em_br,full_lp,lp_ca,panda,panda_e,"
                  "panda_p,panda_l");
  run->add_option("--repeats", config.repeats)->capture_default_str();
  run->add_option("--seed", config.seed)->capture_default_str();
  run->add_option("--full-lp-max-k", config.full_lp_max_k)
      ->capture_default_str();
  run->add_flag("--allow-large-lp", config.allow_large_lp);
  run->add_option("--workers", config.workers)->capture_default_str();
  run->add_option("--out", config.out_dir, "Run directory")->required();

  anchormdp::SyntheticSpec gen;
  uint64_t gen_seed = 1;
  std::string gen_out;
  CLI::App* generate = app.add_subcommand(
      "generate-synthetic", "Write uniform-square nodes as node CSV");
  generate->add_option("--count", gen.count)->required();
  generate->add_option("--side", gen.side_km, "Side (km)")->required();
  generate->add_option("--seed", gen_seed)->capture_default_str();
  generate->add_option("--out", gen_out)->required();

  CLI11_PARSE(app, argc, argv);

  if (*generate) {
    if (gen.count < 2) return Fail(absl::InvalidArgumentError("count must be >= 2"));
    if (!(gen.side_km > 0)) {
      return Fail(absl::InvalidArgumentError("side must be positive"));
    }
    absl::Status s = anchormdp::WriteNodes(
        gen_out, anchormdp::GenerateSynthetic(gen, gen_seed));
    return s.ok() ? 0 : Fail(s);
  }

  if (!synthetic.empty()) {
    absl::StatusOr<anchormdp::SyntheticSpec> spec =
        anchormdp::ParseSyntheticSpec(synthetic);
    if (!spec.ok()) return Fail(spec.status());
    config.synthetic = *spec;
  }
  absl::StatusOr<anchormdp::DecayFamily> family =
      anchormdp::ParseDecayFamily(policy);
  if (!family.ok()) return Fail(family.status());
  config.family = *family;
  absl::StatusOr<anchormdp::Metric> m = anchormdp::ParseMetric(metric);
  if (!m.ok()) return Fail(m.status());
  config.metric = *m;
  if (gamma_opt->count() > 0) config.gamma = gamma;
  std::vector<std::string> dims = absl::StrSplit(grid, 'x');
  if (dims.size() != 2) {
    return Fail(absl::InvalidArgumentError("--grid expects ROWSxCOLS"));
  }
  try {
    config.grid_rows = std::stoi(dims[0]);
    config.grid_cols = std::stoi(dims[1]);
  } catch (const std::exception&) {
    return Fail(absl::InvalidArgumentError("--grid expects ROWSxCOLS"));
  }
  if (!mechanisms.empty()) {
    config.mechanisms = absl::StrSplit(mechanisms, ',', absl::SkipEmpty());
  }

  absl::StatusOr<anchormdp::ExperimentResult> result =
      anchormdp::RunExperiment(config);
  if (!result.ok()) return Fail(result.status());
  if (absl::Status s = anchormdp::WriteArtifacts(config, *result); !s.ok()) {
    return Fail(s);
  }
  std::cout << anchormdp::SummaryText(config, *result);
  return 0;
}
