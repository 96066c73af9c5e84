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

#include "anchormdp/safety_margin.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace anchormdp {
namespace {

using ::testing::HasSubstr;

AnchorPolicy Policy(double alpha, double lambda, double gamma) {
  AnchorPolicy p;
  p.alpha = alpha;
  p.lambda = lambda;
  p.gamma = gamma;
  return p;
}

// Nearest member of `mask` to q by (distance, index), or -1.
int NearestInMask(const SecretDomain& d, int q, uint32_t mask) {
  int best = -1;
  for (int x = 0; x < d.size(); ++x) {
    if (!(mask >> x & 1u)) continue;
    if (best < 0 || d.distance(q, x) < d.distance(q, best)) best = x;
  }
  return best;
}

// Surrogate distribution of q by enumerating every anchor set.
std::vector<double> EnumeratedSurrogate(const SecretDomain& d, const Matrix& w,
                                        int q) {
  const int k = d.size();
  std::vector<double> v(k, 0.0);
  for (uint32_t mask = 1; mask < (1u << k); ++mask) {
    double p = 1.0;
    for (int x = 0; x < k; ++x) p *= (mask >> x & 1u) ? w(q, x) : 1 - w(q, x);
    v[NearestInMask(d, q, mask)] += p;
  }
  return v;
}

TEST(SurrogateProbTest, SelfIsNearest) {
  SecretDomain d = testing::LineDomain({0, 1, 2});
  AnchorPolicy p = Policy(0.9, 0.5, 5);
  EXPECT_DOUBLE_EQ(SurrogateProb(p, d, 1, 1), 0.9);
  Matrix v = SurrogateProbTable(SelectionMatrix(p, d), d);
  EXPECT_DOUBLE_EQ(v(1, 1), 0.9);
}

TEST(SurrogateProbTest, LineHandProduct) {
  SecretDomain d = testing::LineDomain({0, 1, 2});
  Matrix w(3, 3, 0.5);
  w(0, 0) = 0.9;
  w(0, 1) = 0.5;
  w(0, 2) = 0.1;
  Matrix v = SurrogateProbTable(w, d);
  // 0.1 * (1 - 0.9) * (1 - 0.5).
  EXPECT_NEAR(v(0, 2), 0.005, 1e-15);
  EXPECT_NEAR(v(0, 1), 0.5 * 0.1, 1e-15);
  // Monte Carlo over unconditioned anchor draws.
  Rng rng(31);
  const int trials = 200000;
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    uint32_t mask = 0;
    for (int x = 0; x < 3; ++x) mask |= rng.Bernoulli(w(0, x)) ? 1u << x : 0u;
    hits += NearestInMask(d, 0, mask) == 2;
  }
  EXPECT_NEAR(static_cast<double>(hits) / trials, 0.005,
              testing::ThreeSigma(0.005, trials));
}

TEST(SurrogateProbTest, MatchesAnchorSetEnumeration) {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 2 + static_cast<int>(rng.UniformInt(11));
    SecretDomain d = testing::RandomDomain(k, 2.0, rng);
    const Matrix w =
        SelectionMatrix(Policy(0.3 + 0.6 * rng.Uniform(), 0.5, 1.5), d);
    const Matrix v = SurrogateProbTable(w, d);
    const int q = static_cast<int>(rng.UniformInt(k));
    const std::vector<double> want = EnumeratedSurrogate(d, w, q);
    double total = 0.0, none = 1.0;
    for (int x = 0; x < k; ++x) {
      EXPECT_NEAR(v(q, x), want[x], 1e-14);
      total += v(q, x);
      none *= 1 - w(q, x);
    }
    EXPECT_NEAR(total, 1.0 - none, 1e-14);
  }
}

class MarginTest : public ::testing::Test {
 protected:
  // Accommodating parameters: slow decay so some budget survives Phase I.
  MarginTest()
      : rng_(5),
        domain_(testing::RandomDomain(6, 4.0, rng_)),
        ctx_(domain_, Policy(0.6, 0.3, 3.0), 8.0) {}

  Rng rng_;
  SecretDomain domain_;
  MarginContext ctx_;
};

TEST_F(MarginTest, CandidatesMatchDoubleLoop) {
  for (int n = 0; n < 6; ++n) {
    for (int m = 0; m < 6; ++m) {
      if (n == m) continue;
      CandidateMarginSet set = PrecomputeCandidates(ctx_, n, m);
      ASSERT_EQ(set.candidates.size(), 36u);
      std::set<std::tuple<int, int, double, bool>> got, want;
      for (const Candidate& c : set.candidates) got.insert({c.x, c.xp, c.delta, c.eligible});
      const double base = (ctx_.epsilon - ctx_.eps_bar(n, m)) * domain_.distance(n, m);
      for (int x = 0; x < 6; ++x) {
        for (int xp = 0; xp < 6; ++xp) {
          const double b = (ctx_.epsilon - ctx_.eps_bar(x, xp)) * domain_.distance(x, xp);
          const bool elig = domain_.distance(n, x) < ctx_.gamma &&
                            domain_.distance(m, xp) < ctx_.gamma &&
                            ctx_.eps_bar(x, xp) < ctx_.epsilon;
          want.insert({x, xp, b - base, elig});
        }
      }
      EXPECT_EQ(got, want);
      bool has_zero = false;
      for (size_t l = 0; l < set.candidates.size(); ++l) {
        if (l > 0) EXPECT_LE(set.candidates[l - 1].delta, set.candidates[l].delta);
        const Candidate& c = set.candidates[l];
        if (c.x == n && c.xp == m) has_zero = c.delta == 0.0;
      }
      EXPECT_TRUE(has_zero);
    }
  }
}

TEST_F(MarginTest, IncrementalSweepMatchesFromScratch) {
  for (int n = 0; n < 6; ++n) {
    for (int m = 0; m < 6; ++m) {
      if (n == m) continue;
      CandidateMarginSet set = PrecomputeCandidates(ctx_, n, m);
      std::vector<double> h = IncrementalSweep(set, ctx_.surrogate);
      for (size_t l = 0; l < h.size(); ++l) {
        EXPECT_NEAR(h[l], SuccessProb(ctx_, n, m, set.candidates[l].delta), 1e-12);
        if (l > 0) EXPECT_LE(h[l - 1], h[l]);
      }
    }
  }
}

TEST_F(MarginTest, SaturationAndZeroMargin) {
  for (int n = 0; n < 6; ++n) {
    for (int m = 0; m < 6; ++m) {
      if (n == m) continue;
      double sn = 0.0, sm = 0.0;
      for (int x = 0; x < 6; ++x) {
        if (domain_.distance(n, x) < ctx_.gamma) sn += ctx_.surrogate(n, x);
        if (domain_.distance(m, x) < ctx_.gamma) sm += ctx_.surrogate(m, x);
      }
      // Saturation holds when Phase I never exhausts a gamma-near pair.
      bool all_open = true;
      for (int x = 0; x < 6; ++x) {
        for (int xp = 0; xp < 6; ++xp) {
          if (domain_.distance(n, x) < ctx_.gamma &&
              domain_.distance(m, xp) < ctx_.gamma &&
              ctx_.eps_bar(x, xp) >= ctx_.epsilon) {
            all_open = false;
          }
        }
      }
      if (all_open) EXPECT_NEAR(SuccessProb(ctx_, n, m, 1e300), sn * sm, 1e-14);
      if (ctx_.eps_bar(n, m) < ctx_.epsilon) {
        EXPECT_GE(SuccessProb(ctx_, n, m, 0.0),
                  ctx_.surrogate(n, n) * ctx_.surrogate(m, m));
      }
    }
  }
}

TEST(SuccessProbTest, MatchesMonteCarloOnFourRecords) {
  Rng rng(44);
  SecretDomain d = testing::RandomDomain(4, 2.0, rng);
  MarginContext ctx(d, Policy(0.7, 0.4, 1.5), 6.0);
  const int n = 0, m = 1;
  CandidateMarginSet set = PrecomputeCandidates(ctx, n, m);
  const int trials = 100000;
  for (size_t l = 0; l < set.candidates.size(); l += 4) {
    const double xi = set.candidates[l].delta;
    const double h = SuccessProb(ctx, n, m, xi);
    int hits = 0;
    for (int t = 0; t < trials; ++t) {
      uint32_t mn = 0, mm = 0;
      for (int x = 0; x < 4; ++x) {
        mn |= rng.Bernoulli(ctx.weights(n, x)) ? 1u << x : 0u;
        mm |= rng.Bernoulli(ctx.weights(m, x)) ? 1u << x : 0u;
      }
      const int sx = NearestInMask(d, n, mn), sxp = NearestInMask(d, m, mm);
      if (sx < 0 || sxp < 0) continue;
      hits += ctx.Eligible(n, m, sx, sxp) &&
              ctx.Budget(sx, sxp) - ctx.Budget(n, m) <= xi;
    }
    EXPECT_NEAR(static_cast<double>(hits) / trials, h,
                testing::ThreeSigma(h, trials) + 1e-12)
        << "xi " << xi;
  }
}

TEST_F(MarginTest, ExactXiMatchesNaiveSearch) {
  for (double delta : {0.1, 0.3, 0.6}) {
    for (int n = 0; n < 6; ++n) {
      for (int m = 0; m < 6; ++m) {
        if (n == m) continue;
        CandidateMarginSet set = PrecomputeCandidates(ctx_, n, m);
        XiResult got = ExactMarginXi(set, ctx_.surrogate, delta);
        // Naive: first candidate value whose from-scratch h reaches 1 - delta.
        bool found = false;
        double want = set.candidates.back().delta;
        for (const Candidate& c : set.candidates) {
          if (SuccessProb(ctx_, n, m, c.delta) >= 1 - delta) {
            found = true;
            want = c.delta;
            break;
          }
        }
        EXPECT_EQ(got.feasible, found);
        EXPECT_EQ(got.xi, want);
      }
    }
  }
}

TEST_F(MarginTest, TinyDeltaIsInfeasible) {
  CandidateMarginSet set = PrecomputeCandidates(ctx_, 0, 1);
  XiResult r = ExactMarginXi(set, ctx_.surrogate, 1e-300);
  EXPECT_FALSE(r.feasible);
  EXPECT_EQ(r.xi, set.candidates.back().delta);
  EXPECT_LT(r.h, 1.0);
}

TEST_F(MarginTest, LargeDeltaIsSatisfiedImmediately) {
  CandidateMarginSet set = PrecomputeCandidates(ctx_, 0, 1);
  const double h0 = SuccessProb(ctx_, 0, 1, 0.0);
  ASSERT_GT(h0, 0.0);
  XiResult r = ExactMarginXi(set, ctx_.surrogate, 1.0 - h0 * (1 - 1e-9));
  EXPECT_TRUE(r.feasible);
  EXPECT_LE(r.xi, 0.0);
}

TEST_F(MarginTest, OracleMatchesExactSearch) {
  MarginOracle oracle(ctx_);
  for (double delta : {1e-7, 0.05, 0.2, 0.5, 0.9}) {
    for (int n = 0; n < 6; ++n) {
      for (int m = 0; m < 6; ++m) {
        if (n == m) continue;
        XiResult want = ExactMarginXi(PrecomputeCandidates(ctx_, n, m),
                                      ctx_.surrogate, delta);
        XiResult got = oracle.Xi(n, m, delta);
        EXPECT_EQ(got.feasible, want.feasible);
        EXPECT_EQ(got.xi, want.xi);
        EXPECT_NEAR(got.h, want.h, 1e-14);
      }
    }
  }
}

TEST_F(MarginTest, FullNeighborhoodHasCertainContainment) {
  auto e = EstimatedMargin(ctx_, 0, 1, 6, 0.2);
  ASSERT_TRUE(e.ok()) << e.status();
  EXPECT_EQ(e->containment, 1.0);
  EXPECT_DOUBLE_EQ(e->delta_adj, 0.2);
  EXPECT_EQ(e->neighborhood, 6);
}

TEST_F(MarginTest, SingletonNeighborhoodIsTheExactMargin) {
  for (int x = 0; x < 6; ++x) {
    for (int xp = 0; xp < 6; ++xp) {
      if (x == xp) continue;
      auto e = EstimatedMargin(ctx_, x, xp, 1, 0.5);
      if (!e.ok()) {
        EXPECT_THAT(e.status().message(), HasSubstr("Gamma too small"));
        continue;
      }
      XiResult xi = ExactMarginXi(PrecomputeCandidates(ctx_, x, xp),
                                  ctx_.surrogate, e->delta_adj);
      EXPECT_EQ(e->xi_hat, std::max(0.0, xi.xi));
      EXPECT_EQ(e->feasible, xi.feasible);
    }
  }
}

TEST_F(MarginTest, EstimateDominatesEveryNeighborhoodPair) {
  int checked = 0;
  for (int x = 0; x < 6; ++x) {
    for (int xp = 0; xp < 6; ++xp) {
      if (x == xp) continue;
      auto e = EstimatedMargin(ctx_, x, xp, 3, 0.4);
      if (!e.ok()) continue;
      for (int a : NearestRecords(domain_, x, 3)) {
        for (int b : NearestRecords(domain_, xp, 3)) {
          if (a == b) continue;
          XiResult xi = ExactMarginXi(PrecomputeCandidates(ctx_, a, b),
                                      ctx_.surrogate, e->delta_adj);
          EXPECT_GE(e->xi_hat, xi.xi);
          ++checked;
        }
      }
      EXPECT_GE(e->xi_hat, 0.0);
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(EstimatedMarginTest, GammaTooSmall) {
  Rng rng(2);
  SecretDomain d = testing::RandomDomain(8, 2.0, rng, /*random_priors=*/false);
  MarginContext ctx(d, Policy(0.95, 0.5, 2.0), 5.0);
  auto e = EstimatedMargin(ctx, 0, 1, 2, 1e-7);
  ASSERT_FALSE(e.ok());
  EXPECT_THAT(e.status().message(), HasSubstr("Gamma too small"));
  EXPECT_FALSE(EstimatedMargin(ctx, 0, 1, 0, 0.1).ok());
}

TEST(NearestRecordsTest, OrderAndTruncation) {
  SecretDomain d = testing::LineDomain({0, 3, 1, -1});
  EXPECT_EQ(NearestRecords(d, 0, 3), (std::vector<int>{0, 2, 3}));
  EXPECT_EQ(NearestRecords(d, 0, 10).size(), 4u);
}

TEST(ContainmentProbTest, PosteriorHandValue) {
  SecretDomain d = testing::LineDomain({0, 1, 2}, {0.5, 0.25, 0.25});
  AnchorPolicy p = Policy(0.8, 1.0, 5.0);
  MarginContext ctx(d, p, 5.0);
  const double w0 = 0.8, w1 = 0.8 * std::exp(-1.0), w2 = 0.8 * std::exp(-2.0);
  const double total = 0.5 * w0 + 0.25 * w1 + 0.25 * w2;
  EXPECT_NEAR(ContainmentProb(ctx, 0, std::vector<int>{0, 1}),
              (0.5 * w0 + 0.25 * w1) / total, 1e-15);
}

TEST(SafetyMarginPlanTest, UnorderedLookupAndCsv) {
  SafetyMarginPlan plan;
  MarginEstimate e;
  e.x = 4;
  e.xp = 2;
  e.xi_hat = 0.125;
  plan.Add(e);
  ASSERT_NE(plan.Find(2, 4), nullptr);
  EXPECT_EQ(plan.Find(2, 4)->xi_hat, 0.125);
  EXPECT_EQ(plan.Find(4, 3), nullptr);
  e.xi_hat = 0.5;
  plan.Add(e);
  EXPECT_EQ(plan.entries().size(), 1u);
  EXPECT_THAT(plan.ToCsv(), HasSubstr("4,2,0.5,"));
}

}  // namespace
}  // namespace anchormdp
