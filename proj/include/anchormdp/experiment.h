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

#ifndef ANCHORMDP_EXPERIMENT_H_
#define ANCHORMDP_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "anchormdp/anchor_selection.h"
#include "anchormdp/domain.h"
#include "anchormdp/evaluation.h"

namespace anchormdp {

struct SyntheticSpec {
  int count = 0;
  double side_km = 0.0;
};

// Parses "N,SIDE".
absl::StatusOr<SyntheticSpec> ParseSyntheticSpec(absl::string_view text);

// `count` points uniform in [0, side]^2 (planar km coordinates).
std::vector<Point> GenerateSynthetic(const SyntheticSpec& spec, uint64_t seed);

struct RunConfig {
  std::string dataset;                    // node CSV; empty if synthetic
  std::optional<SyntheticSpec> synthetic;
  Metric metric = Metric::kHaversineKm;   // for datasets; synthetic is planar
  int k = 100;
  int users = 20;
  double epsilon = 5.0;
  double delta = 1e-7;
  DecayFamily family = DecayFamily::kExponential;
  double alpha = 0.95;
  double lambda = 0.5;
  std::optional<double> gamma;  // default: max distance / 50
  int gamma_nn = 10;
  double em_scale = 1.0;
  int grid_rows = 8;
  int grid_cols = 8;
  // em, em_br, full_lp, lp_ca, panda (family from `family`), panda_e,
  // panda_p, panda_l.
  std::vector<std::string> mechanisms = {"em", "em_br", "lp_ca", "panda"};
  int repeats = 1;
  uint64_t seed = 1;
  int full_lp_max_k = 300;
  bool allow_large_lp = false;
  int workers = 1;
  std::string out_dir;

  absl::Status Validate() const;
  // key=value lines, sorted by key.
  std::string ToText() const;
};

struct ExperimentReport {
  std::string mechanism;
  int repeat = 0;
  uint64_t seed = 0;
  int k = 0;
  int users = 0;
  std::string status = "ok";  // or the error message
  double utility_loss_m = 0.0;
  ViolationCount violations;
  LpSizeStats lp;
  double objective = 0.0;
  double relaxed_objective = 0.0;  // PAnDA only
  double approx_ratio = 0.0;       // objective / relaxed_objective
  BudgetBreakdown budget;          // PAnDA only
  double seconds = 0.0;            // not written to report.csv
};

struct ExperimentResult {
  std::vector<ExperimentReport> reports;  // repeat-major, config order
};

// Runs every mechanism for every repeat. Per-mechanism failures are recorded
// in the report status and do not stop the others.
absl::StatusOr<ExperimentResult> RunExperiment(const RunConfig& config);

// Deterministic CSV artifacts (no timings).
std::string ReportCsv(const ExperimentResult& result);
std::string BudgetAllocationCsv(const ExperimentResult& result);
std::string ViolationsCsv(const ExperimentResult& result);
// Mean +- 1.96 std per mechanism over successful repeats, plus timings.
std::string SummaryText(const RunConfig& config, const ExperimentResult& result);

// Writes config.txt, report.csv, budget_allocation.csv, violations.csv and
// summary.txt into config.out_dir.
absl::Status WriteArtifacts(const RunConfig& config,
                            const ExperimentResult& result);

struct MeanInterval {
  double mean = 0.0;
  double half_width = 0.0;  // 1.96 * sample std
  int count = 0;
};
MeanInterval Aggregate(const std::vector<double>& values);

}  // namespace anchormdp

#endif  // ANCHORMDP_EXPERIMENT_H_
