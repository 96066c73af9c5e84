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

#include <cmath>
#include <limits>

#include "anchormdp/mdp_program.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace anchormdp {
namespace {

using ::testing::HasSubstr;

LinearRow Row(std::vector<int> idx, std::vector<double> val, double rhs) {
  return {std::move(idx), std::move(val), rhs};
}

TEST(SolveTest, OneVariableLowerBoundRow) {
  LinearProgram lp(1);
  lp.set_objective(0, 1.0);
  lp.AddInequality(Row({0}, {-1.0}, -0.3));  // x >= 0.3
  LpSolution s = Solve(lp);
  ASSERT_EQ(s.status, LpStatus::kOptimal);
  EXPECT_NEAR(s.values[0], 0.3, 1e-9);
  EXPECT_NEAR(s.objective, 0.3, 1e-9);
}

TEST(SolveTest, EqualityForced) {
  LinearProgram lp(2);
  lp.set_objective(0, 1.0);
  lp.set_objective(1, 1.0);
  lp.AddEquality(Row({0, 1}, {1.0, 1.0}, 1.0));
  LpSolution s = Solve(lp);
  ASSERT_EQ(s.status, LpStatus::kOptimal);
  EXPECT_NEAR(s.objective, 1.0, 1e-9);
}

TEST(SolveTest, Infeasible) {
  LinearProgram lp(1);
  lp.AddEquality(Row({0}, {1.0}, 2.0));  // outside [0, 1]
  EXPECT_EQ(Solve(lp).status, LpStatus::kInfeasible);
}

TEST(SolveTest, Unbounded) {
  LinearProgram lp(1);
  lp.set_bounds(0, -std::numeric_limits<double>::infinity(), 0.0);
  lp.set_objective(0, 1.0);
  EXPECT_EQ(Solve(lp).status, LpStatus::kUnbounded);
}

TEST(ValidateTest, RejectsBadRows) {
  LinearProgram lp(2);
  lp.AddInequality(Row({2}, {1.0}, 1.0));
  EXPECT_FALSE(lp.Validate().ok());
  LinearProgram nan(1);
  nan.AddInequality(Row({0}, {std::nan("")}, 1.0));
  EXPECT_FALSE(nan.Validate().ok());
  LinearProgram len(2);
  len.AddEquality(Row({0, 1}, {1.0}, 1.0));
  EXPECT_FALSE(len.Validate().ok());
  EXPECT_EQ(Solve(lp).status, LpStatus::kNumericFailure);
}

TEST(LinearProgramTest, EvaluateAndViolation) {
  LinearProgram lp(2);
  lp.set_objective(0, 2.0);
  lp.set_objective(1, -1.0);
  lp.AddInequality(Row({0, 1}, {1.0, 1.0}, 1.0));
  EXPECT_DOUBLE_EQ(lp.Evaluate({0.5, 0.25}), 0.75);
  EXPECT_DOUBLE_EQ(lp.MaxViolation({0.5, 0.25}), 0.0);
  EXPECT_DOUBLE_EQ(lp.MaxViolation({0.75, 0.5}), 0.25);
  EXPECT_DOUBLE_EQ(lp.MaxViolation({1.5, -0.5}), 0.5);
  EXPECT_THAT(lp.ToLpFormat(), HasSubstr("Minimize"));
}

// Two records at distance d with eps d = ln 2 and cost c = d: four
// variables z00, z01, z10, z11.
LinearProgram TwoByTwo(double p0, double exponent) {
  MdpProgram p;
  p.num_rows = 2;
  p.num_cols = 2;
  p.weighted_cost = Matrix(2, 2);
  p.weighted_cost(0, 1) = p0 * 1.0;
  p.weighted_cost(1, 0) = (1.0 - p0) * 1.0;
  p.pairs = {{0, 1, exponent}};
  return ToLinearProgram(p);
}

TEST(SolveTest, TwoByTwoPerturbationMatchesVertexEnumeration) {
  for (double p0 : {0.5, 0.3, 0.9}) {
    LinearProgram lp = TwoByTwo(p0, std::log(2.0));
    testing::VertexOptimum oracle = testing::VertexEnumeration(lp);
    ASSERT_TRUE(oracle.feasible);
    LpSolution s = Solve(lp);
    ASSERT_EQ(s.status, LpStatus::kOptimal);
    EXPECT_NEAR(s.objective, oracle.objective, 1e-7);
    EXPECT_LE(lp.MaxViolation(s.values), 1e-7);
  }
  // Hand value for uniform priors: z00 = z11 = 2/3.
  testing::VertexOptimum o = testing::VertexEnumeration(TwoByTwo(0.5, std::log(2.0)));
  EXPECT_NEAR(o.objective, 1.0 / 3.0, 1e-12);
}

TEST(SolveTest, RandomSmallProgramsMatchVertexEnumeration) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.UniformInt(4));
    LinearProgram lp(n);
    for (int i = 0; i < n; ++i) lp.set_objective(i, 2.0 * rng.Uniform() - 1.0);
    const int rows = static_cast<int>(rng.UniformInt(4));
    for (int r = 0; r < rows; ++r) {
      LinearRow row;
      for (int i = 0; i < n; ++i) {
        row.index.push_back(i);
        row.value.push_back(2.0 * rng.Uniform() - 1.0);
      }
      row.rhs = rng.Uniform();  // x = 0 stays feasible
      lp.AddInequality(row);
    }
    if (rng.Bernoulli(0.3)) {
      LinearRow eq;
      for (int i = 0; i < n; ++i) {
        eq.index.push_back(i);
        eq.value.push_back(1.0);
      }
      eq.rhs = 0.5 * rng.Uniform();
      lp.AddEquality(eq);
    }
    testing::VertexOptimum oracle = testing::VertexEnumeration(lp);
    LpSolution s = Solve(lp);
    if (!oracle.feasible) {
      EXPECT_EQ(s.status, LpStatus::kInfeasible) << "trial " << trial;
      continue;
    }
    ASSERT_EQ(s.status, LpStatus::kOptimal) << "trial " << trial;
    EXPECT_NEAR(s.objective, oracle.objective, 1e-7) << "trial " << trial;
  }
}

TEST(RowGenerationTest, MatchesExplicitProgram) {
  // minimize -sum x subject to x_i + x_j <= 1 for every pair; the separator
  // reveals pairs lazily.
  const int n = 6;
  LinearProgram base(n);
  LinearProgram full(n);
  for (int i = 0; i < n; ++i) {
    base.set_objective(i, -1.0 - 0.1 * i);
    full.set_objective(i, -1.0 - 0.1 * i);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) full.AddInequality(Row({i, j}, {1, 1}, 1));
  }
  int calls = 0;
  Separator sep = [&](const std::vector<double>& x) {
    ++calls;
    std::vector<LinearRow> out;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (x[i] + x[j] > 1.0 + 1e-9) out.push_back(Row({i, j}, {1, 1}, 1));
      }
    }
    return out;
  };
  LpSolution lazy = SolveWithRowGeneration(base, sep);
  LpSolution direct = Solve(full);
  ASSERT_EQ(lazy.status, LpStatus::kOptimal);
  ASSERT_EQ(direct.status, LpStatus::kOptimal);
  EXPECT_NEAR(lazy.objective, direct.objective, 1e-9);
  EXPECT_LE(full.MaxViolation(lazy.values), 1e-9);
  EXPECT_GT(lazy.generated_rows, 0);
  EXPECT_GE(calls, 2);
}

MdpProgram RandomMdp(Rng& rng, int rows, int cols) {
  MdpProgram p;
  p.num_rows = rows;
  p.num_cols = cols;
  p.weighted_cost = Matrix(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) p.weighted_cost(r, c) = rng.Uniform();
  }
  for (int a = 0; a < rows; ++a) {
    for (int b = a + 1; b < rows; ++b) p.pairs.push_back({a, b, 3.0 * rng.Uniform()});
  }
  return p;
}

TEST(MdpProgramTest, RowGenerationMatchesExplicitSolve) {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    MdpProgram p = RandomMdp(rng, 2 + trial % 7, 3 + trial % 5);
    MdpSolveResult lazy = SolveMdpProgram(p);
    LpSolution direct = Solve(ToLinearProgram(p));
    ASSERT_EQ(lazy.status, LpStatus::kOptimal);
    ASSERT_EQ(direct.status, LpStatus::kOptimal);
    EXPECT_NEAR(lazy.objective, direct.objective, 1e-8) << "trial " << trial;
    // The returned matrix satisfies every ratio constraint.
    for (const RatioPair& rp : p.pairs) {
      const double f = std::exp(rp.exponent);
      for (int y = 0; y < p.num_cols; ++y) {
        EXPECT_LE(lazy.z(rp.a, y), f * lazy.z(rp.b, y) + 1e-9);
        EXPECT_LE(lazy.z(rp.b, y), f * lazy.z(rp.a, y) + 1e-9);
      }
    }
    for (int r = 0; r < p.num_rows; ++r) {
      double s = 0.0;
      for (double v : lazy.z.row(r)) s += v;
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(RepairRatiosTest, TinyColumnViolationStaysLocal) {
  MdpProgram p;
  p.num_rows = 2;
  p.num_cols = 2;
  p.weighted_cost = Matrix(2, 2);
  p.pairs = {{0, 1, 1.0}};
  // Row 0 leaks 1e-9 into a column row 1 never uses: z01 > e * z11 = 0.
  Matrix z(2, 2);
  z(0, 0) = 1.0 - 1e-9;
  z(0, 1) = 1e-9;
  z(1, 0) = 1.0;
  const double t = RepairRatios(p, z);
  EXPECT_LT(t, 1e-6);
  const double f = std::exp(1.0);
  // Residue below 1e-15 is left alone.
  for (int y = 0; y < 2; ++y) {
    EXPECT_LE(z(0, y), f * z(1, y) + 1e-15);
    EXPECT_LE(z(1, y), f * z(0, y) + 1e-15);
  }
  for (int r = 0; r < 2; ++r) EXPECT_NEAR(z(r, 0) + z(r, 1), 1.0, 1e-15);
  // The lift gives z11 = 1e-9 / e before renormalization.
  EXPECT_NEAR(z(1, 1), 1e-9 / f, 1e-15);
  EXPECT_NEAR(z(0, 0), 1.0 - 1e-9, 1e-15);
}

TEST(RepairRatiosTest, FeasibleInputIsUnchanged) {
  Rng rng(3);
  MdpProgram p = RandomMdp(rng, 4, 3);
  Matrix z(4, 3, 1.0 / 3);
  EXPECT_EQ(RepairRatios(p, z), 0.0);
  for (int r = 0; r < 4; ++r) {
    for (int y = 0; y < 3; ++y) EXPECT_DOUBLE_EQ(z(r, y), 1.0 / 3);
  }
}

TEST(MdpProgramTest, ExplicitSizeFormula) {
  Rng rng(1);
  MdpProgram p = RandomMdp(rng, 10, 10);
  LinearProgram lp = ToLinearProgram(p);
  EXPECT_EQ(lp.num_vars(), 100);
  EXPECT_EQ(static_cast<int64_t>(lp.inequalities().size()), p.num_inequalities());
  EXPECT_EQ(p.num_inequalities(), 900);
  EXPECT_EQ(lp.equalities().size(), 10u);
  EXPECT_EQ(MdpVar(p, 3, 7), 37);
}

TEST(MdpProgramTest, LargeExponentsAreCapped) {
  MdpProgram p;
  p.num_rows = 2;
  p.num_cols = 2;
  p.weighted_cost = Matrix(2, 2);
  p.weighted_cost(0, 1) = p.weighted_cost(1, 0) = 1.0;
  p.pairs = {{0, 1, 1000.0}};
  MdpSolveResult r = SolveMdpProgram(p);
  ASSERT_EQ(r.status, LpStatus::kOptimal);
  const double cap = MdpSolveOptions{}.max_exponent;
  EXPECT_DOUBLE_EQ(cap, std::log(1e6));
  // With the cap the optimum is 2 / (1 + e^cap), not 0.
  EXPECT_LE(r.z(0, 0), std::exp(cap) * r.z(1, 0) + 1e-9);
  EXPECT_GT(r.objective, 0.0);
  EXPECT_NEAR(r.objective, 2.0 / (1.0 + std::exp(cap)), 1e-12);
}

}  // namespace
}  // namespace anchormdp
