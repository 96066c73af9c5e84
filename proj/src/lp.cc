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

#include "anchormdp/lp.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "Highs.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace anchormdp {
namespace {

constexpr int kMaxGenerationRounds = 10000;
constexpr double kLooseTolerance = 1e-6;

absl::Status ValidateRow(const LinearRow& row, int num_vars, int which,
                         absl::string_view kind) {
  if (row.index.size() != row.value.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat(kind, " row ", which, ": index/value length mismatch"));
  }
  if (!std::isfinite(row.rhs)) {
    return absl::InvalidArgumentError(
        absl::StrCat(kind, " row ", which, ": non-finite rhs"));
  }
  for (size_t i = 0; i < row.index.size(); ++i) {
    if (row.index[i] < 0 || row.index[i] >= num_vars) {
      return absl::InvalidArgumentError(absl::StrCat(
          kind, " row ", which, ": variable ", row.index[i], " out of range"));
    }
    if (!std::isfinite(row.value[i])) {
      return absl::InvalidArgumentError(
          absl::StrCat(kind, " row ", which, ": non-finite coefficient"));
    }
  }
  return absl::OkStatus();
}

double RowActivity(const LinearRow& row, const std::vector<double>& x) {
  double s = 0.0;
  for (size_t i = 0; i < row.index.size(); ++i) {
    s += row.value[i] * x[row.index[i]];
  }
  return s;
}

// Appends rows to the Highs instance in compressed row form.
void AppendRows(Highs& highs, const std::vector<LinearRow>& rows, bool equality) {
  if (rows.empty()) return;
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<HighsInt> starts;
  std::vector<HighsInt> index;
  std::vector<double> value;
  lo.reserve(rows.size());
  hi.reserve(rows.size());
  starts.reserve(rows.size());
  for (const LinearRow& row : rows) {
    starts.push_back(static_cast<HighsInt>(index.size()));
    lo.push_back(equality ? row.rhs : -kHighsInf);
    hi.push_back(row.rhs);
    index.insert(index.end(), row.index.begin(), row.index.end());
    value.insert(value.end(), row.value.begin(), row.value.end());
  }
  highs.addRows(static_cast<HighsInt>(rows.size()), lo.data(), hi.data(),
                static_cast<HighsInt>(index.size()), starts.data(),
                index.data(), value.data());
}

void Configure(Highs& highs, const SolveOptions& options) {
  highs.setOptionValue("output_flag", false);
  highs.setOptionValue("threads", 1);
  highs.setOptionValue("solver", "simplex");
  highs.setOptionValue("random_seed", 0);
  // Devex: exact steepest-edge weights would be recomputed for every row
  // added between solves.
  highs.setOptionValue("simplex_dual_edge_weight_strategy", 1);
  highs.setOptionValue("primal_feasibility_tolerance",
                       options.feasibility_tolerance);
  highs.setOptionValue("dual_feasibility_tolerance", 1e-9);
  if (options.time_limit_seconds > 0) {
    highs.setOptionValue("time_limit", options.time_limit_seconds);
  }
}

LpStatus MapStatus(HighsModelStatus status) {
  switch (status) {
    case HighsModelStatus::kOptimal:
      return LpStatus::kOptimal;
    case HighsModelStatus::kInfeasible:
      return LpStatus::kInfeasible;
    case HighsModelStatus::kUnbounded:
      return LpStatus::kUnbounded;
    case HighsModelStatus::kUnboundedOrInfeasible:
      return LpStatus::kInfeasible;
    default:
      return LpStatus::kNumericFailure;
  }
}

}  // namespace

LinearProgram::LinearProgram(int num_vars)
    : num_vars_(num_vars),
      objective_(num_vars, 0.0),
      lower_(num_vars, 0.0),
      upper_(num_vars, 1.0) {}

absl::Status LinearProgram::Validate() const {
  for (int j = 0; j < num_vars_; ++j) {
    if (!std::isfinite(objective_[j])) {
      return absl::InvalidArgumentError(
          absl::StrCat("non-finite objective coefficient for variable ", j));
    }
    if (!(lower_[j] <= upper_[j])) {
      return absl::InvalidArgumentError(
          absl::StrCat("empty bound interval for variable ", j));
    }
  }
  for (size_t r = 0; r < inequalities_.size(); ++r) {
    if (absl::Status s = ValidateRow(inequalities_[r], num_vars_, r, "inequality");
        !s.ok()) {
      return s;
    }
  }
  for (size_t r = 0; r < equalities_.size(); ++r) {
    if (absl::Status s = ValidateRow(equalities_[r], num_vars_, r, "equality");
        !s.ok()) {
      return s;
    }
  }
  return absl::OkStatus();
}

double LinearProgram::Evaluate(const std::vector<double>& x) const {
  double s = 0.0;
  for (int j = 0; j < num_vars_; ++j) s += objective_[j] * x[j];
  return s;
}

double LinearProgram::MaxViolation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (int j = 0; j < num_vars_; ++j) {
    worst = std::max({worst, lower_[j] - x[j], x[j] - upper_[j]});
  }
  for (const LinearRow& row : inequalities_) {
    worst = std::max(worst, RowActivity(row, x) - row.rhs);
  }
  for (const LinearRow& row : equalities_) {
    worst = std::max(worst, std::abs(RowActivity(row, x) - row.rhs));
  }
  return worst;
}

std::string LinearProgram::ToLpFormat() const {
  auto term_list = [](const std::vector<int>& index,
                      const std::vector<double>& value) {
    std::string out;
    for (size_t i = 0; i < index.size(); ++i) {
      const double v = value[i];
      absl::StrAppend(&out, v < 0 ? " - " : " + ",
                      absl::StrFormat("%.17g", std::abs(v)), " x", index[i]);
    }
    return out.empty() ? std::string(" 0 x0") : out;
  };
  std::vector<int> all(num_vars_);
  for (int j = 0; j < num_vars_; ++j) all[j] = j;
  std::string out = "Minimize\n obj:";
  absl::StrAppend(&out, term_list(all, objective_), "\nSubject To\n");
  for (size_t r = 0; r < equalities_.size(); ++r) {
    const LinearRow& row = equalities_[r];
    absl::StrAppend(&out, " e", r, ":", term_list(row.index, row.value), " = ",
                    absl::StrFormat("%.17g", row.rhs), "\n");
  }
  for (size_t r = 0; r < inequalities_.size(); ++r) {
    const LinearRow& row = inequalities_[r];
    absl::StrAppend(&out, " c", r, ":", term_list(row.index, row.value),
                    " <= ", absl::StrFormat("%.17g", row.rhs), "\n");
  }
  out += "Bounds\n";
  for (int j = 0; j < num_vars_; ++j) {
    absl::StrAppend(&out, " ", absl::StrFormat("%.17g", lower_[j]), " <= x", j,
                    " <= ", absl::StrFormat("%.17g", upper_[j]), "\n");
  }
  out += "End\n";
  return out;
}

absl::string_view LpStatusName(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal:
      return "optimal";
    case LpStatus::kInfeasible:
      return "infeasible";
    case LpStatus::kUnbounded:
      return "unbounded";
    case LpStatus::kNumericFailure:
      return "numeric-failure";
  }
  return "unknown";
}

struct IncrementalLp::Impl {
  Highs highs;
  SolveOptions options;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> values;
  std::vector<double> row_duals;
  double objective = 0.0;
  bool solved_once = false;
};

IncrementalLp::IncrementalLp(const SolveOptions& options)
    : impl_(std::make_unique<Impl>()) {
  impl_->options = options;
  Configure(impl_->highs, options);
}

IncrementalLp::~IncrementalLp() = default;

int IncrementalLp::num_vars() const {
  return static_cast<int>(impl_->lower.size());
}

int IncrementalLp::num_rows() const {
  return static_cast<int>(impl_->highs.getNumRow());
}

int IncrementalLp::AddColumns(const std::vector<LinearColumn>& columns) {
  const int first = num_vars();
  if (columns.empty()) return first;
  std::vector<double> cost;
  std::vector<HighsInt> starts;
  std::vector<HighsInt> index;
  std::vector<double> value;
  std::vector<double> lo;
  std::vector<double> hi;
  for (const LinearColumn& c : columns) {
    cost.push_back(c.cost);
    lo.push_back(c.lower);
    hi.push_back(c.upper);
    starts.push_back(static_cast<HighsInt>(index.size()));
    index.insert(index.end(), c.rows.begin(), c.rows.end());
    value.insert(value.end(), c.values.begin(), c.values.end());
  }
  impl_->highs.addCols(static_cast<HighsInt>(columns.size()), cost.data(),
                       lo.data(), hi.data(), static_cast<HighsInt>(index.size()),
                       starts.data(), index.data(), value.data());
  impl_->lower.insert(impl_->lower.end(), lo.begin(), lo.end());
  impl_->upper.insert(impl_->upper.end(), hi.begin(), hi.end());
  return first;
}

int IncrementalLp::AddRows(const std::vector<LinearRow>& rows, bool equality) {
  const int first = num_rows();
  AppendRows(impl_->highs, rows, equality);
  return first;
}

void IncrementalLp::SetCosts(std::span<const double> costs) {
  impl_->highs.changeColsCost(0, static_cast<HighsInt>(costs.size()) - 1,
                              costs.data());
}

LpStatus IncrementalLp::Solve(Method method) {
  Highs& highs = impl_->highs;
  highs.setOptionValue("simplex_strategy", method == Method::kPrimal ? 4 : 1);
  if (impl_->solved_once) {
    // Presolve would discard the previous basis.
    highs.setOptionValue("presolve", "off");
  }
  highs.run();
  LpStatus status = MapStatus(highs.getModelStatus());
  if (status == LpStatus::kNumericFailure && impl_->solved_once) {
    // A warm start can stall on badly scaled rows; retry from scratch.
    highs.clearSolver();
    highs.setOptionValue("presolve", "on");
    highs.setOptionValue("simplex_strategy", 1);
    highs.run();
    status = MapStatus(highs.getModelStatus());
  }
  if (status == LpStatus::kNumericFailure &&
      highs.getModelStatus() == HighsModelStatus::kUnknown) {
    // Simplex finished but the unscaled solution misses the tolerances,
    // typically on rows with coefficients near the exponent cap. Accept small misses;
    // callers that need exact feasibility repair the solution themselves.
    const HighsInfo& info = highs.getInfo();
    if (info.primal_solution_status != kSolutionStatusNone &&
        info.max_primal_infeasibility <= kLooseTolerance &&
        info.max_dual_infeasibility <= kLooseTolerance) {
      status = LpStatus::kOptimal;
    }
  }
  impl_->solved_once = true;
  if (status != LpStatus::kOptimal) {
    impl_->values.clear();
    impl_->row_duals.clear();
    impl_->objective = 0.0;
    return status;
  }
  const HighsSolution& sol = highs.getSolution();
  impl_->values = sol.col_value;
  impl_->row_duals = sol.row_dual;
  const std::vector<double>& cost = highs.getLp().col_cost_;
  impl_->objective = 0.0;
  for (size_t j = 0; j < impl_->values.size(); ++j) {
    double& v = impl_->values[j];
    if (std::abs(v) < impl_->options.snap_threshold) v = 0.0;
    v = std::clamp(v, impl_->lower[j], impl_->upper[j]);
    impl_->objective += cost[j] * v;
  }
  return status;
}

const std::vector<double>& IncrementalLp::values() const {
  return impl_->values;
}

const std::vector<double>& IncrementalLp::row_duals() const {
  return impl_->row_duals;
}

double IncrementalLp::objective() const { return impl_->objective; }

LpSolution Solve(const LinearProgram& lp, const SolveOptions& options) {
  return SolveWithRowGeneration(
      lp, [](const std::vector<double>&) { return std::vector<LinearRow>(); },
      options);
}

LpSolution SolveWithRowGeneration(const LinearProgram& lp,
                                  const Separator& separate,
                                  const SolveOptions& options) {
  LpSolution out;
  if (!lp.Validate().ok()) return out;
  IncrementalLp model(options);
  std::vector<LinearColumn> columns(lp.num_vars());
  for (int j = 0; j < lp.num_vars(); ++j) {
    columns[j].cost = lp.objective()[j];
    columns[j].lower = lp.lower()[j];
    columns[j].upper = lp.upper()[j];
  }
  model.AddColumns(columns);
  model.AddRows(lp.equalities(), /*equality=*/true);
  model.AddRows(lp.inequalities(), /*equality=*/false);
  out.status = model.Solve();
  while (out.status == LpStatus::kOptimal && out.rounds < kMaxGenerationRounds) {
    std::vector<LinearRow> rows = separate(model.values());
    if (rows.empty()) break;
    out.generated_rows += static_cast<int>(rows.size());
    ++out.rounds;
    model.AddRows(rows, /*equality=*/false);
    out.status = model.Solve();
  }
  if (out.rounds >= kMaxGenerationRounds) out.status = LpStatus::kNumericFailure;
  if (out.status == LpStatus::kOptimal) {
    out.values = model.values();
    out.objective = lp.Evaluate(out.values);
  }
  return out;
}

}  // namespace anchormdp
