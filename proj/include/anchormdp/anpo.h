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

#ifndef ANCHORMDP_ANPO_H_
#define ANCHORMDP_ANPO_H_

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "anchormdp/anchor_selection.h"
#include "anchormdp/domain.h"
#include "anchormdp/mdp_program.h"
#include "anchormdp/random.h"
#include "anchormdp/safety_margin.h"

namespace anchormdp {

struct AnpoOptions {
  // Constrain anchors of the same user against each other as well.
  bool same_user_pairs = true;
  MdpSolveOptions solver;
};

// Sorted union of all anchor sets.
std::vector<int> AnchorUnion(std::span<const AnchorSet> sets);

// Unordered pairs (x < x') of distinct anchors drawn from A_n x A_m over all
// user pairs n != m, plus n == m when `same_user_pairs`.
std::vector<std::pair<int, int>> AnchorPairs(std::span<const AnchorSet> sets,
                                             bool same_user_pairs);

struct AnpoProblem {
  std::vector<int> anchors;   // row r perturbs record anchors[r]
  std::vector<int> row_of;    // record -> row, or -1
  MdpProgram program;
};

// Tightened anchor LP: exponent (eps - eps_bar) d - xi_hat per anchor pair.
// Fails with FailedPrecondition naming the pairs whose exponent is not
// positive, or when a pair has no margin in `plan`.
absl::StatusOr<AnpoProblem> BuildAnpo(const SecretDomain& domain,
                                      std::span<const AnchorSet> sets,
                                      double epsilon, const Matrix& eps_bar,
                                      const SafetyMarginPlan& plan,
                                      const CostMatrix& cost,
                                      const AnpoOptions& options = {});

// Same anchors and objective with exponent eps * d.
AnpoProblem BuildRelaxedAnpo(const SecretDomain& domain,
                             std::span<const AnchorSet> sets, double epsilon,
                             const CostMatrix& cost,
                             const AnpoOptions& options = {});

struct AnpoSolution {
  PerturbationMatrix z;  // rows = anchors
  double objective = 0.0;
  int generated_rows = 0;
};

// Fails with Internal when the program is infeasible or the solver fails.
absl::StatusOr<AnpoSolution> SolveAnpo(const AnpoProblem& problem,
                                       const MdpSolveOptions& options = {});

absl::StatusOr<double> RelaxedAnpo(const SecretDomain& domain,
                                   std::span<const AnchorSet> sets,
                                   double epsilon, const CostMatrix& cost,
                                   const AnpoOptions& options = {});

// Nearest anchor to x_n, lowest index on ties. -1 for an empty set.
int SurrogateOf(const SecretDomain& domain, int x_n,
                std::span<const int> anchors);

struct UserPerturber {
  std::vector<int> anchors;
  PerturbationMatrix rows;  // the downloaded rows Z_{A_n}
  int surrogate = -1;
};

UserPerturber MakeUserPerturber(const SecretDomain& domain, int x_n,
                                const AnchorSet& set,
                                const PerturbationMatrix& anchor_matrix);

// Samples an output column from the surrogate's row. Fails when the row does
// not sum to 1 within 1e-9.
absl::StatusOr<int> Perturb(const UserPerturber& user, Rng& rng);

// One end-to-end run for a set of users: anchor draws, margins, AnPO solve.
struct PandaConfig {
  double epsilon = 5.0;
  double delta = 1e-7;
  int gamma_nn = 10;
  AnpoOptions anpo;
};

struct PandaRun {
  std::vector<int> users;
  std::vector<AnchorSet> sets;
  std::vector<int> surrogates;
  std::vector<std::pair<int, int>> pairs;
  SafetyMarginPlan plan;
  AnpoProblem problem;
  AnpoSolution solution;
  int empty_redraws = 0;
};

absl::StatusOr<PandaRun> RunPanda(const MarginContext& ctx,
                                  std::span<const int> users,
                                  const CostMatrix& cost,
                                  const PandaConfig& config, Rng& rng);

// Effective row of user n: the anchor row of their surrogate.
std::span<const double> EffectiveRow(const PandaRun& run, int user);

}  // namespace anchormdp

#endif  // ANCHORMDP_ANPO_H_
