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

#ifndef ANCHORMDP_MDP_PROGRAM_H_
#define ANCHORMDP_MDP_PROGRAM_H_

#include <cstdint>
#include <vector>

#include "anchormdp/lp.h"
#include "anchormdp/matrix.h"

namespace anchormdp {

// z[a][y] <= exp(exponent) * z[b][y] and z[b][y] <= exp(exponent) * z[a][y]
// for every output column y.
struct RatioPair {
  int a = 0;
  int b = 0;
  double exponent = 0.0;
};

// Perturbation LP over `num_rows` rows and `num_cols` outputs: minimize
// sum weighted_cost[r][y] * z[r][y] subject to the ratio pairs, unit row
// sums and z in [0, 1].
struct MdpProgram {
  int num_rows = 0;
  int num_cols = 0;
  Matrix weighted_cost;
  std::vector<RatioPair> pairs;

  int64_t num_variables() const {
    return static_cast<int64_t>(num_rows) * num_cols;
  }
  int64_t num_inequalities() const {
    return 2 * static_cast<int64_t>(pairs.size()) * num_cols;
  }
  int64_t num_equalities() const { return num_rows; }
};

struct MdpSolveOptions {
  // No snapping: the ratio checks are multiplicative, and zeroing a small
  // entry opposite a large coefficient would break them.
  SolveOptions lp = {.snap_threshold = 0.0};
  // Exponents are capped here, which tightens the constraint and keeps the
  // coefficient range within what the simplex can resolve.
  double max_exponent = 13.815510557964274;  // log(1e6)
  // Ratio pairs per row (smallest exponents) included before row generation.
  int initial_pairs_per_row = 4;
};

struct MdpSolveResult {
  LpStatus status = LpStatus::kNumericFailure;
  Matrix z;  // num_rows x num_cols
  double objective = 0.0;
  int generated_rows = 0;
  int rounds = 0;
  // Weight of the mean row mixed in to clear residual ratio violations.
  double repair_weight = 0.0;
};

// Variable index of z[r][y].
inline int MdpVar(const MdpProgram& p, int r, int y) {
  return r * p.num_cols + y;
}

// Exact optimum by row generation over the ratio constraints.
MdpSolveResult SolveMdpProgram(const MdpProgram& program,
                               const MdpSolveOptions& options = {});

// Makes a nearly feasible `z` (rows x cols) row-stochastic and exactly
// feasible: each entry is lifted to what its ratio pairs demand, rows are
// normalized, and the mean row is mixed in to clear rounding residue.
// Returns the mixing weight.
double RepairRatios(const MdpProgram& program, Matrix& z,
                    double max_exponent = MdpSolveOptions{}.max_exponent);

// Every constraint written out; for small programs, tests and export.
LinearProgram ToLinearProgram(const MdpProgram& program,
                              double max_exponent = MdpSolveOptions{}.max_exponent);

}  // namespace anchormdp

#endif  // ANCHORMDP_MDP_PROGRAM_H_
