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

#ifndef ANCHORMDP_BASELINES_H_
#define ANCHORMDP_BASELINES_H_

#include <vector>

#include "absl/status/statusor.h"
#include "anchormdp/domain.h"
#include "anchormdp/mdp_program.h"

namespace anchormdp {

// Exponential mechanism: z[x][y] proportional to exp(-scale * eps * d(x, y)).
absl::StatusOr<PerturbationMatrix> EmMatrix(const SecretDomain& domain,
                                            double epsilon,
                                            double scale_factor = 1.0);

// remap[k] is the output column that column k is replaced with.
struct RemapTable {
  std::vector<int> remap;
};

// For each output with positive marginal, the column minimizing expected
// cost under the posterior p_x z[x][y]; lowest index wins ties.
RemapTable BayesianRemap(const SecretDomain& domain,
                         const PerturbationMatrix& z, const CostMatrix& cost);

// The mechanism followed by the remap: column mass moves to its target.
PerturbationMatrix ApplyRemap(const PerturbationMatrix& z,
                              const RemapTable& table);

// Full-domain perturbation LP with every pairwise ratio constraint.
MdpProgram FullLpProgram(const SecretDomain& domain, double epsilon,
                         const CostMatrix& cost);

struct LpMechanism {
  PerturbationMatrix z;
  double objective = 0.0;
  int64_t num_variables = 0;
  int64_t num_inequalities = 0;
  int64_t num_equalities = 0;
  int generated_rows = 0;
};

absl::StatusOr<LpMechanism> FullLp(const SecretDomain& domain, double epsilon,
                                   const CostMatrix& cost,
                                   const MdpSolveOptions& options = {});

struct GridPartition {
  int rows = 1;
  int cols = 1;
  std::vector<int> cell_of_record;  // index into `cells`
  std::vector<int> cell_id;         // row-major grid cell of each used cell
  std::vector<Point> centers;       // centroid of each used cell's records
};

// Equal-size cells over the records' bounding box. A point on an interior
// cell boundary belongs to the lower-index cell; empty cells are dropped.
GridPartition BuildGrid(const SecretDomain& domain, int grid_rows,
                        int grid_cols);

struct CoarseLpResult {
  LpMechanism cells;  // rows are cells (rows[i] = i)
  GridPartition grid;
};

absl::StatusOr<CoarseLpResult> CoarseLp(const SecretDomain& domain,
                                        int grid_rows, int grid_cols,
                                        double epsilon, const CostMatrix& cost,
                                        const MdpSolveOptions& options = {});

// Per-record effective matrix: record x uses its cell's row.
PerturbationMatrix CoarseEffectiveMatrix(const CoarseLpResult& result);

}  // namespace anchormdp

#endif  // ANCHORMDP_BASELINES_H_
