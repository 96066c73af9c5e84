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

#include "anchormdp/evaluation.h"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "anchormdp/baselines.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace anchormdp {
namespace {

CostMatrix DistanceCost(const SecretDomain& d) {
  auto c = BuildCostModel(d, CostMode::kDirectDistance);
  if (!c.ok()) throw std::runtime_error("cost");
  return *std::move(c);
}

PerturbationMatrix Identity(int k) {
  PerturbationMatrix z;
  z.probs = Matrix(k, k);
  for (int i = 0; i < k; ++i) {
    z.rows.push_back(i);
    z.probs(i, i) = 1.0;
  }
  return z;
}

TEST(UtilityLossTest, IdentityIsZeroAndUniformIsMeanDistance) {
  SecretDomain d = testing::LineDomain({0, 1, 3}, {0.2, 0.3, 0.5});
  const CostMatrix cost = DistanceCost(d);
  EXPECT_DOUBLE_EQ(ExpectedUtilityLoss(Identity(3), d.priors(), cost), 0.0);
  PerturbationMatrix u{{0, 1, 2}, Matrix(3, 3, 1.0 / 3)};
  // Row means of |x - y|: 4/3, 1, 5/3.
  const double want = 0.2 * 4 / 3 + 0.3 * 1 + 0.5 * 5 / 3;
  EXPECT_NEAR(ExpectedUtilityLoss(u, d.priors(), cost), want, 1e-15);
}

TEST(UtilityLossTest, MatchesDirectSumForExponentialMechanism) {
  Rng rng(2);
  SecretDomain d = testing::RandomDomain(15, 2.0, rng);
  const CostMatrix cost = DistanceCost(d);
  auto z = EmMatrix(d, 3.0);
  ASSERT_TRUE(z.ok());
  double want = 0.0;
  for (int x = 0; x < 15; ++x) {
    double norm = 0.0;
    for (int y = 0; y < 15; ++y) norm += std::exp(-3.0 * d.distance(x, y));
    for (int y = 0; y < 15; ++y) {
      want += d.prior(x) * d.distance(x, y) * std::exp(-3.0 * d.distance(x, y)) / norm;
    }
  }
  EXPECT_NEAR(ExpectedUtilityLoss(*z, d.priors(), cost), want, 1e-12);
}

TEST(ViolatesMdpTest, BothDirectionsAndTolerance) {
  const std::vector<double> a = {0.5, 0.5};
  const std::vector<double> b = {0.9, 0.1};
  EXPECT_TRUE(ViolatesMdp(a, b, 1.0, 1.0));          // 0.5 > e * 0.1
  EXPECT_TRUE(ViolatesMdp(b, a, 1.0, 1.0));
  EXPECT_FALSE(ViolatesMdp(a, b, std::log(5.0), 1.0 + 1e-12));
  const std::vector<double> c = {1.0, 0.0};
  const std::vector<double> e = {1.0, 1e-10};
  EXPECT_FALSE(ViolatesMdp(c, e, 1.0, 1.0));  // inside the 1e-9 slack
}

TEST(CountViolationsTest, FullLpAndHalfScaleEmHaveNone) {
  Rng rng(3);
  SecretDomain d = testing::RandomDomain(25, 3.0, rng);
  std::vector<int> users;
  for (int i = 0; i < 25; ++i) users.push_back(i);
  auto lp = FullLp(d, 2.0, DistanceCost(d));
  ASSERT_TRUE(lp.ok());
  ViolationCount lv = CountViolations(d, lp->z, users, 2.0);
  EXPECT_EQ(lv.samples, 25 * 24 / 2);
  EXPECT_EQ(lv.violations, 0);
  auto em = EmMatrix(d, 2.0, 0.5);
  ASSERT_TRUE(em.ok());
  EXPECT_EQ(CountViolations(d, *em, users, 2.0).violations, 0);
  EXPECT_DOUBLE_EQ(CountViolations(d, *em, users, 2.0).rate(), 0.0);
  EXPECT_DOUBLE_EQ(ViolationCount{}.rate(), 0.0);
}

TEST(CountViolationsTest, CoarseLpBreaksNearbyRecordsAcrossCells) {
  // Cells {0, 0.98} and {1.02, 2} have centroids 1.02 km apart, while the
  // records 0.98 and 1.02 are only 0.04 km apart.
  SecretDomain d = testing::LineDomain({0, 0.98, 1.02, 2});
  const double eps = 2.0;
  auto r = CoarseLp(d, 2, 1, eps, DistanceCost(d));
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r->cells.z.num_rows(), 2);
  const PerturbationMatrix eff = CoarseEffectiveMatrix(*r);
  const std::vector<int> across = {1, 2};
  EXPECT_EQ(CountViolations(d, eff, across, eps).violations, 1);
  EXPECT_GT(WorstCaseRatio(d, eff), eps);
}

TEST(WorstCaseRatioTest, HandValuesAndZeros) {
  SecretDomain d = testing::LineDomain({0, 2});
  PerturbationMatrix z{{0, 1}, Matrix(2, 2)};
  z.probs(0, 0) = 0.8;
  z.probs(0, 1) = 0.2;
  z.probs(1, 0) = 0.4;
  z.probs(1, 1) = 0.6;
  EXPECT_NEAR(WorstCaseRatio(d, z), std::log(3.0) / 2, 1e-15);
  EXPECT_EQ(WorstCaseRatio(d, Identity(2)), std::numeric_limits<double>::infinity());
}

class BudgetTest : public ::testing::Test {
 protected:
  BudgetTest()
      : domain_(testing::LineDomain({0, 1, 2, 4})),
        ctx_(domain_, AnchorPolicy{DecayFamily::kExponential, 0.6, 0.3, 3.0}, 2.0) {}
  SecretDomain domain_;
  MarginContext ctx_;
};

TEST_F(BudgetTest, ZeroPhaseOneAndMarginLeavesEverything) {
  ctx_.eps_bar = Matrix(4, 4);
  SafetyMarginPlan plan;
  plan.Add({0, 1, 0.0});
  const std::vector<std::pair<int, int>> pairs = {{0, 1}};
  BudgetBreakdown b = BudgetAllocation(ctx_, plan, pairs);
  ASSERT_EQ(b.pairs.size(), 1u);
  EXPECT_DOUBLE_EQ(b.pairs[0].phase1, 0.0);
  EXPECT_DOUBLE_EQ(b.pairs[0].margin, 0.0);
  EXPECT_DOUBLE_EQ(b.pairs[0].phase2, 1.0);
  EXPECT_DOUBLE_EQ(b.mean_phase2, 1.0);
}

TEST_F(BudgetTest, SharesSumToOneAndExhaustedPairsAreExcluded) {
  SafetyMarginPlan plan;
  plan.Add({0, 3, 0.5});   // eps d = 8
  plan.Add({1, 2, 10.0});  // eps d = 2: exhausted
  const std::vector<std::pair<int, int>> pairs = {{0, 3}, {1, 2}};
  BudgetBreakdown b = BudgetAllocation(ctx_, plan, pairs);
  ASSERT_EQ(b.pairs.size(), 2u);
  const BudgetShare& s = b.pairs[0];
  EXPECT_NEAR(s.phase1, ctx_.eps_bar(0, 3) / 2.0, 1e-15);
  EXPECT_NEAR(s.margin, 0.5 / 8.0, 1e-15);
  EXPECT_NEAR(s.phase1 + s.margin + s.phase2, 1.0, 1e-15);
  EXPECT_FALSE(s.exhausted);
  EXPECT_TRUE(b.pairs[1].exhausted);
  EXPECT_EQ(b.num_exhausted, 1);
  EXPECT_DOUBLE_EQ(b.mean_margin, s.margin);
}

TEST(ClusteringTest, CompletePathAndCliquePlusIsolated) {
  SecretDomain tri = testing::LineDomain({0, 0.1, 0.2});
  std::vector<int> all3 = {0, 1, 2};
  EXPECT_DOUBLE_EQ(ClusteringCoefficient(all3, tri.distances(), 1.0), 1.0);
  EXPECT_DOUBLE_EQ(ClusteringCoefficient(all3, tri.distances(), 0.15), 0.0);
  // Four records within 0.3 km plus one far away: 4 * 1 / 5.
  SecretDomain five = testing::LineDomain({0, 0.1, 0.2, 0.3, 10});
  std::vector<int> all5 = {0, 1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(ClusteringCoefficient(all5, five.distances(), 1.0), 0.8);
  EXPECT_DOUBLE_EQ(ClusteringCoefficient({}, five.distances(), 1.0), 0.0);
}

TEST(LpSizeTest, FullAndAnchorPrograms) {
  SecretDomain d = testing::LineDomain({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  const CostMatrix cost = DistanceCost(d);
  LpSizeStats full = LpSize(FullLpProgram(d, 1.0, cost), 10);
  EXPECT_EQ(full.variables, 100);
  EXPECT_EQ(full.inequalities, 900);
  EXPECT_EQ(full.equalities, 10);
  EXPECT_DOUBLE_EQ(full.anchor_fraction, 1.0);
  std::vector<AnchorSet> sets = {{0, {0, 1}, 0}, {9, {8, 9}, 0}};
  AnpoProblem relaxed = BuildRelaxedAnpo(d, sets, 1.0, cost);
  LpSizeStats s = LpSize(relaxed.program, 10);
  EXPECT_EQ(s.variables, 4 * 10);
  EXPECT_EQ(s.inequalities, 2 * 6 * 10);
  EXPECT_EQ(s.equalities, 4);
  EXPECT_DOUBLE_EQ(s.anchor_fraction, 0.4);
}

}  // namespace
}  // namespace anchormdp
