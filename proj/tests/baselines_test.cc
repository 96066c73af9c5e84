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

#include "anchormdp/baselines.h"

#include <cmath>
#include <stdexcept>

#include "anchormdp/evaluation.h"
#include "anchormdp/mdp_program.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace anchormdp {
namespace {

CostMatrix DistanceCost(const SecretDomain& d) {
  auto c = BuildCostModel(d, CostMode::kDirectDistance);
  if (!c.ok()) throw std::runtime_error("cost");
  return *std::move(c);
}

TEST(EmMatrixTest, LineHandValues) {
  SecretDomain d = testing::LineDomain({0, 1, 2});
  auto z = EmMatrix(d, 1.0);
  ASSERT_TRUE(z.ok());
  const double s = 1 + std::exp(-1.0) + std::exp(-2.0);
  EXPECT_NEAR(z->probs(0, 0), 1 / s, 1e-15);
  EXPECT_NEAR(z->probs(0, 1), std::exp(-1.0) / s, 1e-15);
  EXPECT_NEAR(z->probs(0, 2), std::exp(-2.0) / s, 1e-15);
  EXPECT_NEAR(z->probs(0, 0), 0.6652, 5e-5);
  EXPECT_NEAR(z->probs(0, 1), 0.2447, 5e-5);
  EXPECT_NEAR(z->probs(0, 2), 0.0900, 5e-5);
  EXPECT_TRUE(ValidateRowStochastic(*z).ok());
}

TEST(EmMatrixTest, EquidistantOutputsAndFlatLimit) {
  SecretDomain d = testing::LineDomain({-1, 0, 1});
  auto z = EmMatrix(d, 3.0);
  ASSERT_TRUE(z.ok());
  EXPECT_DOUBLE_EQ(z->probs(1, 0), z->probs(1, 2));
  auto flat = EmMatrix(d, 1e-12);
  ASSERT_TRUE(flat.ok());
  for (int x = 0; x < 3; ++x) {
    for (int y = 0; y < 3; ++y) EXPECT_NEAR(flat->probs(x, y), 1.0 / 3, 1e-11);
  }
  EXPECT_FALSE(EmMatrix(d, 0.0).ok());
}

TEST(EmMatrixTest, HalfScaleSatisfiesMdpExactly) {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    SecretDomain d = testing::RandomDomain(20, 3.0, rng);
    auto z = EmMatrix(d, 2.0, 0.5);
    ASSERT_TRUE(z.ok());
    EXPECT_LE(WorstCaseRatio(d, *z), 2.0 * (1 + 1e-12));
  }
}

TEST(BayesianRemapTest, SingleRecordMapsToItself) {
  SecretDomain d = testing::LineDomain({0});
  PerturbationMatrix z{{0}, Matrix(1, 1, 1.0)};
  RemapTable t = BayesianRemap(d, z, DistanceCost(d));
  EXPECT_EQ(t.remap, (std::vector<int>{0}));
}

TEST(BayesianRemapTest, IdentityIsFixed) {
  SecretDomain d = testing::LineDomain({0, 1, 3, 4});
  PerturbationMatrix z{{0, 1, 2, 3}, Matrix(4, 4)};
  for (int i = 0; i < 4; ++i) z.probs(i, i) = 1.0;
  RemapTable t = BayesianRemap(d, z, DistanceCost(d));
  EXPECT_EQ(t.remap, (std::vector<int>{0, 1, 2, 3}));
}

TEST(BayesianRemapTest, MatchesExhaustivePosteriorAndNeverHurts) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    SecretDomain d = trial == 0 ? testing::LineDomain({0, 1, 2})
                                : testing::RandomDomain(7, 2.0, rng);
    const CostMatrix cost = DistanceCost(d);
    auto z = EmMatrix(d, 1.0);
    ASSERT_TRUE(z.ok());
    RemapTable t = BayesianRemap(d, *z, cost);
    const int k = d.size();
    for (int y = 0; y < k; ++y) {
      // Normalized posterior, then the expected cost of every candidate.
      std::vector<double> post(k);
      double mass = 0.0;
      for (int x = 0; x < k; ++x) mass += post[x] = d.prior(x) * z->probs(x, y);
      double best = 1e300;
      for (int c = 0; c < k; ++c) {
        double e = 0.0;
        for (int x = 0; x < k; ++x) e += post[x] / mass * cost(x, c);
        best = std::min(best, e);
      }
      double chosen = 0.0;
      for (int x = 0; x < k; ++x) chosen += post[x] / mass * cost(x, t.remap[y]);
      EXPECT_NEAR(chosen, best, 1e-12);
    }
    const PerturbationMatrix r = ApplyRemap(*z, t);
    EXPECT_TRUE(ValidateRowStochastic(r).ok()) << ValidateRowStochastic(r);
    EXPECT_LE(ExpectedUtilityLoss(r, d.priors(), cost),
              ExpectedUtilityLoss(*z, d.priors(), cost) + 1e-15);
  }
}

TEST(FullLpTest, TwoRecordVertexOracle) {
  SecretDomain d = testing::LineDomain({0, 1});
  const CostMatrix cost = DistanceCost(d);
  const double eps = std::log(2.0);
  auto lp = FullLp(d, eps, cost);
  ASSERT_TRUE(lp.ok());
  testing::VertexOptimum oracle =
      testing::VertexEnumeration(ToLinearProgram(FullLpProgram(d, eps, cost)));
  ASSERT_TRUE(oracle.feasible);
  EXPECT_NEAR(lp->objective, oracle.objective, 1e-7);
  EXPECT_NEAR(lp->objective, 1.0 / 3, 1e-9);
}

TEST(FullLpTest, SatisfiesEveryRatioConstraint) {
  Rng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    SecretDomain d = testing::RandomDomain(10 + 10 * trial, 3.0, rng);
    const double eps = 1.0 + trial;
    auto lp = FullLp(d, eps, DistanceCost(d));
    ASSERT_TRUE(lp.ok());
    EXPECT_TRUE(ValidateRowStochastic(lp->z).ok());
    for (int a = 0; a < d.size(); ++a) {
      for (int b = 0; b < d.size(); ++b) {
        const double f = std::exp(eps * d.distance(a, b));
        for (int y = 0; y < d.size(); ++y) {
          EXPECT_GE(f * lp->z.probs(b, y) - lp->z.probs(a, y), -1e-7);
        }
      }
    }
  }
}

TEST(FullLpTest, MatchesExplicitProgramOnGeometricDomains) {
  Rng rng(31);
  for (int trial = 0; trial < 12; ++trial) {
    SecretDomain d = testing::RandomDomain(20 + trial, 3.0, rng);
    const CostMatrix cost = DistanceCost(d);
    const double eps = 2.0 + 3.0 * (trial % 3);
    const MdpProgram p = FullLpProgram(d, eps, cost);
    const MdpSolveResult lazy = SolveMdpProgram(p);
    const LpSolution direct = Solve(ToLinearProgram(p));
    ASSERT_EQ(lazy.status, LpStatus::kOptimal);
    ASSERT_EQ(direct.status, LpStatus::kOptimal);
    EXPECT_NEAR(lazy.objective, direct.objective, 1e-7) << "trial " << trial;
    // Only rounding-level repair: a large mix would pull rows to the mean.
    EXPECT_LE(lazy.repair_weight, 1e-6) << "trial " << trial;
  }
}

TEST(FullLpTest, LargeBudgetApproachesIdentity) {
  SecretDomain d = testing::LineDomain({0, 1, 2, 3});
  auto lp = FullLp(d, 1000.0, DistanceCost(d));
  ASSERT_TRUE(lp.ok());
  // Every capped pair binds: z(x, y) = z(y, y) / C with C = e^cap, so the
  // diagonal is C / (C + 3) and the loss is (1/4) * 20 / (C + 3).
  const double c = std::exp(MdpSolveOptions{}.max_exponent);
  EXPECT_NEAR(lp->objective, 5.0 / (c + 3.0), 1e-12);
  for (int x = 0; x < 4; ++x) EXPECT_NEAR(lp->z.probs(x, x), c / (c + 3.0), 1e-9);
}

TEST(FullLpTest, ZeroBudgetSharesOneRow) {
  SecretDomain d = testing::LineDomain({0, 1, 2, 5}, {0.1, 0.4, 0.3, 0.2});
  const CostMatrix cost = DistanceCost(d);
  auto lp = FullLp(d, 0.0, cost);
  ASSERT_TRUE(lp.ok());
  // Best single shared output: argmin_y sum_x p_x d(x, y).
  double best = 1e300;
  for (int y = 0; y < 4; ++y) {
    double e = 0.0;
    for (int x = 0; x < 4; ++x) e += d.prior(x) * cost(x, y);
    best = std::min(best, e);
  }
  EXPECT_NEAR(lp->objective, best, 1e-9);
  for (int x = 1; x < 4; ++x) {
    for (int y = 0; y < 4; ++y) EXPECT_NEAR(lp->z.probs(x, y), lp->z.probs(0, y), 1e-9);
  }
  EXPECT_EQ(lp->num_variables, 16);
  EXPECT_EQ(lp->num_inequalities, 4 * 3 * 4);
  EXPECT_EQ(lp->num_equalities, 4);
}

TEST(GridTest, BoundaryGoesToLowerCell) {
  SecretDomain d = testing::LineDomain({0, 1, 2});  // lat = x, lon = 0
  GridPartition g = BuildGrid(d, 2, 1);
  EXPECT_EQ(g.cell_of_record, (std::vector<int>{0, 0, 1}));
  EXPECT_EQ(g.cell_id, (std::vector<int>{0, 1}));
  EXPECT_DOUBLE_EQ(g.centers[0].lat, 0.5);
  EXPECT_DOUBLE_EQ(g.centers[1].lat, 2.0);
}

TEST(CoarseLpTest, SingleCellIsPointMassOnCheapestOutput) {
  SecretDomain d = testing::LineDomain({0, 1, 2, 4});
  auto r = CoarseLp(d, 1, 1, 2.0, DistanceCost(d));
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r->cells.z.num_rows(), 1);
  // Centroid at 1.75: output 2 (at 2.0) is cheapest.
  EXPECT_NEAR(r->cells.z.probs(0, 2), 1.0, 1e-9);
}

TEST(CoarseLpTest, FineGridReproducesFullLp) {
  Rng rng(19);
  SecretDomain d = testing::RandomDomain(12, 3.0, rng);
  const CostMatrix cost = DistanceCost(d);
  auto full = FullLp(d, 2.0, cost);
  auto coarse = CoarseLp(d, 400, 400, 2.0, cost);
  ASSERT_TRUE(full.ok() && coarse.ok());
  ASSERT_EQ(coarse->grid.centers.size(), 12u);
  EXPECT_NEAR(coarse->cells.objective, full->objective, 1e-9);
  EXPECT_NEAR(ExpectedUtilityLoss(CoarseEffectiveMatrix(*coarse), d.priors(), cost),
              full->objective, 1e-9);
}

TEST(CoarseLpTest, EightByEightHasAtMost64Rows) {
  Rng rng(21);
  SecretDomain d = testing::RandomDomain(200, 5.0, rng);
  auto r = CoarseLp(d, 8, 8, 5.0, DistanceCost(d));
  ASSERT_TRUE(r.ok());
  EXPECT_LE(r->cells.z.num_rows(), 64);
  EXPECT_GT(r->cells.z.num_rows(), 32);
  const PerturbationMatrix eff = CoarseEffectiveMatrix(*r);
  EXPECT_EQ(eff.num_rows(), 200);
  EXPECT_TRUE(ValidateRowStochastic(eff).ok());
}

TEST(CoarseLpTest, RejectsEmptyGrid) {
  SecretDomain d = testing::LineDomain({0, 1});
  EXPECT_FALSE(CoarseLp(d, 0, 1, 1.0, DistanceCost(d)).ok());
}

}  // namespace
}  // namespace anchormdp
