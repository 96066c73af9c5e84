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

#include "anchormdp/anpo.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "anchormdp/baselines.h"
#include "anchormdp/mdp_program.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace anchormdp {
namespace {

using ::testing::HasSubstr;

CostMatrix DistanceCost(const SecretDomain& d) {
  auto c = BuildCostModel(d, CostMode::kDirectDistance);
  if (!c.ok()) throw std::runtime_error("cost");
  return *std::move(c);
}

// Margin plan with xi_hat = value for every pair.
SafetyMarginPlan FlatPlan(std::span<const std::pair<int, int>> pairs,
                          double value) {
  SafetyMarginPlan plan;
  for (const auto& [x, xp] : pairs) {
    MarginEstimate e;
    e.x = x;
    e.xp = xp;
    e.xi_hat = value;
    plan.Add(e);
  }
  return plan;
}

// Rows compared as sorted (index, value) lists plus rhs, values within 1e-12.
using CanonicalRow = std::pair<std::vector<std::pair<int, double>>, double>;
std::vector<CanonicalRow> Canonical(const std::vector<LinearRow>& rows) {
  std::vector<CanonicalRow> out;
  for (const LinearRow& r : rows) {
    std::vector<std::pair<int, double>> e;
    for (size_t i = 0; i < r.index.size(); ++i) e.emplace_back(r.index[i], r.value[i]);
    std::sort(e.begin(), e.end());
    out.push_back({e, r.rhs});
  }
  // Order by the index pattern, then by values.
  std::sort(out.begin(), out.end());
  return out;
}

void ExpectSameRows(const std::vector<LinearRow>& a,
                    const std::vector<LinearRow>& b) {
  const auto ca = Canonical(a);
  const auto cb = Canonical(b);
  ASSERT_EQ(ca.size(), cb.size());
  for (size_t r = 0; r < ca.size(); ++r) {
    ASSERT_EQ(ca[r].first.size(), cb[r].first.size());
    for (size_t i = 0; i < ca[r].first.size(); ++i) {
      EXPECT_EQ(ca[r].first[i].first, cb[r].first[i].first);
      EXPECT_NEAR(ca[r].first[i].second, cb[r].first[i].second,
                  1e-12 * std::max(1.0, std::abs(cb[r].first[i].second)));
    }
    EXPECT_NEAR(ca[r].second, cb[r].second, 1e-12);
  }
}

TEST(AnchorPairsTest, CrossAndSameUser) {
  std::vector<AnchorSet> sets = {{0, {0, 1}, 0}, {5, {1, 5}, 0}};
  EXPECT_EQ(AnchorUnion(sets), (std::vector<int>{0, 1, 5}));
  using P = std::vector<std::pair<int, int>>;
  EXPECT_EQ(AnchorPairs(sets, false), (P{{0, 1}, {0, 5}, {1, 5}}));
  std::vector<AnchorSet> apart = {{0, {0, 2}, 0}, {3, {3}, 0}};
  EXPECT_EQ(AnchorPairs(apart, false), (P{{0, 3}, {2, 3}}));
  EXPECT_EQ(AnchorPairs(apart, true), (P{{0, 2}, {0, 3}, {2, 3}}));
}

TEST(SurrogateOfTest, SelfNearAndTies) {
  SecretDomain d = testing::LineDomain({0, 1, 5, -1});
  EXPECT_EQ(SurrogateOf(d, 0, std::vector<int>{0, 1, 2}), 0);
  EXPECT_EQ(SurrogateOf(d, 0, std::vector<int>{2, 1}), 1);
  EXPECT_EQ(SurrogateOf(d, 0, std::vector<int>{3, 1}), 1);  // tie: lower index
  EXPECT_EQ(SurrogateOf(d, 0, std::vector<int>{}), -1);
}

TEST(SurrogateOfTest, MatchesLinearScan) {
  Rng rng(3);
  SecretDomain d = testing::RandomDomain(30, 5.0, rng);
  for (int t = 0; t < 500; ++t) {
    std::vector<int> anchors;
    for (int x = 0; x < 30; ++x) {
      if (rng.Bernoulli(0.2)) anchors.push_back(x);
    }
    if (anchors.empty()) continue;
    const int q = static_cast<int>(rng.UniformInt(30));
    int want = anchors[0];
    for (int a : anchors) {
      if (d.distance(q, a) < d.distance(q, want)) want = a;
    }
    EXPECT_EQ(SurrogateOf(d, q, anchors), want);
  }
}

TEST(BuildAnpoTest, SingleAnchorIsPointMassOnCheapestOutput) {
  SecretDomain d = testing::LineDomain({0, 1, 3});
  std::vector<AnchorSet> sets = {{1, {2}, 0}};
  Matrix eps_bar(3, 3);
  auto problem = BuildAnpo(d, sets, 5.0, eps_bar, SafetyMarginPlan{},
                           DistanceCost(d));
  ASSERT_TRUE(problem.ok()) << problem.status();
  EXPECT_TRUE(problem->program.pairs.empty());
  auto sol = SolveAnpo(*problem);
  ASSERT_TRUE(sol.ok());
  EXPECT_EQ(sol->z.rows, (std::vector<int>{2}));
  EXPECT_NEAR(sol->z.probs(0, 2), 1.0, 1e-12);
  EXPECT_NEAR(sol->objective, 0.0, 1e-12);
}

TEST(BuildAnpoTest, HandAssembledConstraintMatrix) {
  // Line 0,1,2,3; user 0 anchors {0,1}, user 3 anchors {2,3}.
  SecretDomain d = testing::LineDomain({0, 1, 2, 3});
  const CostMatrix cost = DistanceCost(d);
  std::vector<AnchorSet> sets = {{0, {0, 1}, 0}, {3, {2, 3}, 0}};
  Matrix eps_bar(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) eps_bar(i, j) = i == j ? 0 : 0.25 + 0.01 * (i + j);
  }
  const double eps = 2.0;
  auto pairs = AnchorPairs(sets, true);
  ASSERT_EQ(pairs.size(), 6u);
  SafetyMarginPlan plan = FlatPlan(pairs, 0.1);
  auto problem = BuildAnpo(d, sets, eps, eps_bar, plan, cost);
  ASSERT_TRUE(problem.ok()) << problem.status();
  LinearProgram got = ToLinearProgram(problem->program);

  // z[r][y] at r * 4 + y with rows = records 0..3.
  LinearProgram want(16);
  std::vector<LinearRow> ineq;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      if (a == b) continue;
      const double f = std::exp((eps - eps_bar(a, b)) * d.distance(a, b) - 0.1);
      for (int y = 0; y < 4; ++y) ineq.push_back({{a * 4 + y, b * 4 + y}, {1.0, -f}, 0.0});
    }
  }
  std::vector<LinearRow> eq;
  for (int a = 0; a < 4; ++a) eq.push_back({{a * 4, a * 4 + 1, a * 4 + 2, a * 4 + 3}, {1, 1, 1, 1}, 1.0});
  ExpectSameRows(got.inequalities(), ineq);
  ExpectSameRows(got.equalities(), eq);
  for (int a = 0; a < 4; ++a) {
    for (int y = 0; y < 4; ++y) {
      EXPECT_DOUBLE_EQ(got.objective()[a * 4 + y], 0.25 * cost(a, y));
    }
  }
}

TEST(BuildAnpoTest, DegenerateMarginsEqualRestrictedFullLp) {
  Rng rng(4);
  SecretDomain d = testing::RandomDomain(10, 2.0, rng);
  const CostMatrix cost = DistanceCost(d);
  std::vector<AnchorSet> sets = {{0, {0, 2, 5}, 0}, {7, {5, 7, 9}, 0}};
  auto pairs = AnchorPairs(sets, true);
  const double eps = 3.0;
  auto problem = BuildAnpo(d, sets, eps, Matrix(10, 10), FlatPlan(pairs, 0.0), cost);
  ASSERT_TRUE(problem.ok());
  // Full-LP program's rows and pairs restricted to the union {0,2,5,7,9}.
  MdpProgram full = FullLpProgram(d, eps, cost);
  const std::vector<int> u = {0, 2, 5, 7, 9};
  MdpProgram restricted;
  restricted.num_rows = 5;
  restricted.num_cols = 10;
  restricted.weighted_cost = Matrix(5, 10);
  for (int r = 0; r < 5; ++r) {
    for (int y = 0; y < 10; ++y) restricted.weighted_cost(r, y) = full.weighted_cost(u[r], y);
  }
  for (int a = 0; a < 5; ++a) {
    for (int b = a + 1; b < 5; ++b) restricted.pairs.push_back({a, b, eps * d.distance(u[a], u[b])});
  }
  LinearProgram a = ToLinearProgram(problem->program);
  LinearProgram b = ToLinearProgram(restricted);
  ExpectSameRows(a.inequalities(), b.inequalities());
  EXPECT_EQ(a.objective(), b.objective());
  auto sol = SolveAnpo(*problem);
  ASSERT_TRUE(sol.ok());
  EXPECT_NEAR(sol->objective, SolveMdpProgram(restricted).objective, 1e-10);
}

TEST(BuildAnpoTest, ExhaustedAndInfeasibleMarginsAbort) {
  SecretDomain d = testing::LineDomain({0, 1, 2});
  std::vector<AnchorSet> sets = {{0, {0, 1}, 0}, {2, {2}, 0}};
  auto pairs = AnchorPairs(sets, true);
  Matrix eps_bar(3, 3);
  const CostMatrix cost = DistanceCost(d);
  auto big = BuildAnpo(d, sets, 1.0, eps_bar, FlatPlan(pairs, 5.0), cost);
  ASSERT_FALSE(big.ok());
  EXPECT_THAT(big.status().message(), HasSubstr("budget exhausted"));
  SafetyMarginPlan plan = FlatPlan(pairs, 0.0);
  MarginEstimate bad = *plan.Find(0, 2);
  bad.feasible = false;
  plan.Add(bad);
  auto infeasible = BuildAnpo(d, sets, 1.0, eps_bar, plan, cost);
  ASSERT_FALSE(infeasible.ok());
  EXPECT_THAT(infeasible.status().message(), HasSubstr("unreachable"));
  auto missing = BuildAnpo(d, sets, 1.0, eps_bar, SafetyMarginPlan{}, cost);
  EXPECT_FALSE(missing.ok());
}

TEST(SolveAnpoTest, TwoAnchorProgramMatchesVertexOracle) {
  SecretDomain d = testing::LineDomain({0, 1.5}, {0.3, 0.7});
  const CostMatrix cost = DistanceCost(d);
  std::vector<AnchorSet> sets = {{0, {0}, 0}, {1, {1}, 0}};
  Matrix eps_bar(2, 2);
  eps_bar(0, 1) = eps_bar(1, 0) = 0.2;
  auto problem = BuildAnpo(d, sets, 1.0, eps_bar,
                           FlatPlan(AnchorPairs(sets, true), 0.15), cost);
  ASSERT_TRUE(problem.ok());
  auto sol = SolveAnpo(*problem);
  ASSERT_TRUE(sol.ok());
  testing::VertexOptimum oracle =
      testing::VertexEnumeration(ToLinearProgram(problem->program));
  ASSERT_TRUE(oracle.feasible);
  EXPECT_NEAR(sol->objective, oracle.objective, 1e-7);
}

TEST(SolveAnpoTest, UniformRowsAreAlwaysFeasible) {
  Rng rng(8);
  SecretDomain d = testing::RandomDomain(8, 1.0, rng);
  std::vector<AnchorSet> sets = {{0, {0, 1, 2, 3}, 0}, {4, {4, 5, 6, 7}, 0}};
  auto pairs = AnchorPairs(sets, true);
  Matrix eps_bar(8, 8);
  // Tiny positive exponents everywhere.
  auto problem = BuildAnpo(d, sets, 1e-6, eps_bar, FlatPlan(pairs, 0.0),
                           DistanceCost(d));
  ASSERT_TRUE(problem.ok());
  EXPECT_TRUE(SolveAnpo(*problem).ok());
}

TEST(RelaxedAnpoTest, LowerBoundsTightenedAndRestrictedFullLp) {
  Rng rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    SecretDomain d = testing::RandomDomain(12, 2.0, rng);
    const CostMatrix cost = DistanceCost(d);
    std::vector<AnchorSet> sets;
    for (int u = 0; u < 3; ++u) {
      AnchorSet s;
      s.owner = static_cast<int>(rng.UniformInt(12));
      for (int x = 0; x < 12; ++x) {
        if (rng.Bernoulli(0.3) || x == s.owner) s.anchors.push_back(x);
      }
      sets.push_back(s);
    }
    const double eps = 2.0;
    auto relaxed = RelaxedAnpo(d, sets, eps, cost);
    ASSERT_TRUE(relaxed.ok());
    auto pairs = AnchorPairs(sets, true);
    Matrix eps_bar(12, 12, 0.1);
    auto tight = BuildAnpo(d, sets, eps, eps_bar, FlatPlan(pairs, 0.01), cost);
    ASSERT_TRUE(tight.ok());
    auto sol = SolveAnpo(*tight);
    ASSERT_TRUE(sol.ok());
    EXPECT_LE(*relaxed, sol->objective + 1e-9);
    auto full = FullLp(d, eps, cost);
    ASSERT_TRUE(full.ok());
    double restricted = 0.0;
    for (int x : AnchorUnion(sets)) {
      for (int y = 0; y < 12; ++y) restricted += d.prior(x) * cost(x, y) * full->z.probs(x, y);
    }
    EXPECT_LE(*relaxed, restricted + 1e-9);
  }
}

TEST(RelaxedAnpoTest, HugeBudgetLossIsBoundedByExponentCap) {
  SecretDomain d = testing::LineDomain({0, 1, 2, 3});
  std::vector<AnchorSet> sets = {{0, {0, 1}, 0}, {3, {2, 3}, 0}};
  auto r = RelaxedAnpo(d, sets, 1e4, DistanceCost(d));
  ASSERT_TRUE(r.ok());
  // The full program on the same line loses 5 / (C + 3), C = e^cap.
  const double c = std::exp(MdpSolveOptions{}.max_exponent);
  EXPECT_GT(*r, 0.0);
  EXPECT_LE(*r, 5.0 / (c + 3.0) + 1e-12);
}

TEST(PerturbTest, PointMassUniformAndDeterminism) {
  SecretDomain d = testing::LineDomain({0, 1, 2, 3});
  PerturbationMatrix anchors{{1, 2}, Matrix(2, 4)};
  anchors.probs(0, 3) = 1.0;
  for (int y = 0; y < 4; ++y) anchors.probs(1, y) = 0.25;
  UserPerturber near1 = MakeUserPerturber(d, 0, {0, {1, 2}, 0}, anchors);
  ASSERT_EQ(near1.surrogate, 1);
  Rng rng(1);
  for (int t = 0; t < 100; ++t) EXPECT_EQ(*Perturb(near1, rng), 3);

  UserPerturber near2 = MakeUserPerturber(d, 3, {3, {1, 2}, 0}, anchors);
  ASSERT_EQ(near2.surrogate, 2);
  const int trials = 100000;
  std::vector<int> hits(4, 0);
  for (int t = 0; t < trials; ++t) ++hits[*Perturb(near2, rng)];
  for (int y = 0; y < 4; ++y) {
    EXPECT_NEAR(hits[y] / static_cast<double>(trials), 0.25,
                testing::ThreeSigma(0.25, trials));
  }
  Rng a(5), b(5);
  for (int t = 0; t < 50; ++t) EXPECT_EQ(*Perturb(near2, a), *Perturb(near2, b));

  PerturbationMatrix broken{{1}, Matrix(1, 4, 0.2)};
  UserPerturber bad = MakeUserPerturber(d, 0, {0, {1}, 0}, broken);
  EXPECT_FALSE(Perturb(bad, rng).ok());
}

TEST(RunPandaTest, EndToEndOnAccommodatingParameters) {
  Rng rng(2);
  SecretDomain d = testing::RandomDomain(10, 1.0, rng);
  AnchorPolicy policy;
  // Flat, near-certain selection keeps eps_bar small and xi_hat at zero.
  policy.alpha = 0.99;
  policy.lambda = 1e-4;
  policy.gamma = 2.0;  // covers the domain
  MarginContext ctx(d, policy, 5.0);
  PandaConfig config;
  config.delta = 0.05;
  config.gamma_nn = 10;
  std::vector<int> users = {0, 3, 7};
  Rng draw(9);
  auto run = RunPanda(ctx, users, DistanceCost(d), config, draw);
  ASSERT_TRUE(run.ok()) << run.status();
  ASSERT_EQ(run->sets.size(), 3u);
  for (size_t n = 0; n < users.size(); ++n) {
    EXPECT_EQ(run->surrogates[n], SurrogateOf(d, users[n], run->sets[n].anchors));
    std::span<const double> row = EffectiveRow(*run, static_cast<int>(n));
    double s = 0.0;
    for (double v : row) s += v;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  EXPECT_EQ(run->problem.anchors, AnchorUnion(run->sets));
  for (const auto& [x, xp] : run->pairs) {
    const MarginEstimate* e = run->plan.Find(x, xp);
    ASSERT_NE(e, nullptr);
    EXPECT_EQ(e->xi_hat, 0.0);
    EXPECT_DOUBLE_EQ(e->containment, 1.0);
  }
}

}  // namespace
}  // namespace anchormdp
