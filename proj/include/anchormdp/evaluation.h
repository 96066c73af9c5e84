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

#ifndef ANCHORMDP_EVALUATION_H_
#define ANCHORMDP_EVALUATION_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anchormdp/anpo.h"
#include "anchormdp/domain.h"
#include "anchormdp/matrix.h"
#include "anchormdp/mdp_program.h"
#include "anchormdp/safety_margin.h"

namespace anchormdp {

inline constexpr double kViolationTolerance = 1e-9;

// sum_x p_x sum_y c[x][y] z[x][y] over the rows of `z` (row r is record
// z.rows[r]). Same units as the cost (km for distance costs).
double ExpectedUtilityLoss(const PerturbationMatrix& z,
                           std::span<const double> priors,
                           const CostMatrix& cost);

// Mean over users of sum_y c[x_n][y] * row_n[y].
double UserUtilityLoss(const PandaRun& run, const CostMatrix& cost);

// Whether rows zn, zm of true records at distance d break the eps-mDP ratio
// in either direction: z[y] > exp(eps d) z'[y] + 1e-9 for some y.
bool ViolatesMdp(std::span<const double> zn, std::span<const double> zm,
                 double epsilon, double d);

struct ViolationCount {
  int64_t violations = 0;
  int64_t samples = 0;
  double rate() const {
    return samples == 0 ? 0.0 : static_cast<double>(violations) / samples;
  }
};

// Pairs of distinct true records among `users`, checked through the rows of
// a static per-record matrix.
ViolationCount CountViolations(const SecretDomain& domain,
                               const PerturbationMatrix& z,
                               std::span<const int> users, double epsilon);

// Same through the surrogate rows of a PAnDA run.
ViolationCount CountViolations(const SecretDomain& domain,
                               const PandaRun& run, double epsilon);

// Largest log(z[x][y] / z[x'][y]) / d(x, x') over all record pairs and
// outputs (infinite if a zero faces a positive entry).
double WorstCaseRatio(const SecretDomain& domain, const PerturbationMatrix& z);

struct BudgetShare {
  int x = 0;
  int xp = 0;
  double phase1 = 0.0;
  double margin = 0.0;
  double phase2 = 0.0;
  bool exhausted = false;
};

struct BudgetBreakdown {
  std::vector<BudgetShare> pairs;
  double mean_phase1 = 0.0;
  double mean_margin = 0.0;
  double mean_phase2 = 0.0;
  int num_exhausted = 0;  // excluded from the means
};

// Phase-I share eps_bar d / (eps d), margin share xi_hat / (eps d), and the
// remainder, for the given anchor pairs.
BudgetBreakdown BudgetAllocation(const MarginContext& ctx,
                                 const SafetyMarginPlan& plan,
                                 std::span<const std::pair<int, int>> pairs);

// Mean local clustering coefficient of the graph joining members of `nodes`
// closer than `threshold`.
double ClusteringCoefficient(std::span<const int> nodes,
                             const Matrix& distances, double threshold);

struct LpSizeStats {
  int64_t variables = 0;
  int64_t inequalities = 0;
  int64_t equalities = 0;
  double anchor_fraction = 1.0;  // rows / K
};

LpSizeStats LpSize(const MdpProgram& program, int domain_size);

}  // namespace anchormdp

#endif  // ANCHORMDP_EVALUATION_H_
