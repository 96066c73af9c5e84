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

#ifndef ANCHORMDP_LP_H_
#define ANCHORMDP_LP_H_

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/string_view.h"

namespace anchormdp {

// Sparse linear row: sum_i value[i] * x[index[i]] (op) rhs.
struct LinearRow {
  std::vector<int> index;
  std::vector<double> value;
  double rhs = 0.0;
};

// minimize c^T x  s.t.  A_ineq x <= b_ineq,  A_eq x = b_eq,  lo <= x <= hi.
// Variable bounds default to [0, 1].
class LinearProgram {
 public:
  explicit LinearProgram(int num_vars = 0);

  int num_vars() const { return num_vars_; }
  const std::vector<double>& objective() const { return objective_; }
  const std::vector<LinearRow>& inequalities() const { return inequalities_; }
  const std::vector<LinearRow>& equalities() const { return equalities_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }

  void set_objective(int var, double coeff) { objective_[var] = coeff; }
  void set_bounds(int var, double lo, double hi) {
    lower_[var] = lo;
    upper_[var] = hi;
  }
  void AddInequality(LinearRow row) { inequalities_.push_back(std::move(row)); }
  void AddEquality(LinearRow row) { equalities_.push_back(std::move(row)); }

  // Checks index ranges, finiteness and matching row lengths.
  absl::Status Validate() const;

  // Objective value of `x` (no feasibility check).
  double Evaluate(const std::vector<double>& x) const;

  // Largest violation of any row or bound by `x` (0 when feasible).
  double MaxViolation(const std::vector<double>& x) const;

  // CPLEX LP text format, for offline debugging.
  std::string ToLpFormat() const;

 private:
  int num_vars_;
  std::vector<double> objective_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<LinearRow> inequalities_;
  std::vector<LinearRow> equalities_;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kNumericFailure };

absl::string_view LpStatusName(LpStatus status);

struct LpSolution {
  LpStatus status = LpStatus::kNumericFailure;
  std::vector<double> values;
  double objective = 0.0;
  // Rows added by row generation (0 for a plain solve).
  int generated_rows = 0;
  int rounds = 0;
};

struct SolveOptions {
  double feasibility_tolerance = 1e-9;
  // Values with magnitude below this are set to 0 after the solve.
  double snap_threshold = 1e-12;
  double time_limit_seconds = 0.0;  // 0 = unlimited
};

// Variable of an IncrementalLp with its entries in existing rows.
struct LinearColumn {
  double cost = 0.0;
  double lower = 0.0;
  double upper = 1.0;
  std::vector<int> rows;
  std::vector<double> values;
};

// Simplex model that grows between solves; every solve starts from the
// previous basis.
class IncrementalLp {
 public:
  explicit IncrementalLp(const SolveOptions& options = {});
  ~IncrementalLp();
  IncrementalLp(const IncrementalLp&) = delete;
  IncrementalLp& operator=(const IncrementalLp&) = delete;

  int num_vars() const;
  int num_rows() const;

  // Both return the index of the first new variable or row.
  int AddColumns(const std::vector<LinearColumn>& columns);
  int AddRows(const std::vector<LinearRow>& rows, bool equality);
  void SetCosts(std::span<const double> costs);

  // Primal simplex suits a warm start after adding columns (the basis stays
  // primal feasible), dual simplex one after adding violated rows.
  enum class Method { kDual, kPrimal };
  LpStatus Solve(Method method = Method::kDual);

  // Valid after an optimal Solve. Values are clamped to their bounds and
  // snapped per SolveOptions.
  const std::vector<double>& values() const;
  // Row duals y with reduced costs c - A^T y.
  const std::vector<double>& row_duals() const;
  double objective() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Solves the program with the simplex method. Infeasible or unbounded
// programs are reported through LpSolution::status.
LpSolution Solve(const LinearProgram& lp, const SolveOptions& options = {});

// Returns rows of the full program that `x` violates; an empty result means
// `x` is feasible for the full program.
using Separator =
    std::function<std::vector<LinearRow>(const std::vector<double>& x)>;

// Solves `lp` plus the implicit inequality family described by `separate`.
// Starts from the explicit rows, repeatedly adds the rows `separate` reports
// and re-solves from the previous basis until none are violated. The result
// is optimal for the full program.
LpSolution SolveWithRowGeneration(const LinearProgram& lp,
                                  const Separator& separate,
                                  const SolveOptions& options = {});

}  // namespace anchormdp

#endif  // ANCHORMDP_LP_H_
