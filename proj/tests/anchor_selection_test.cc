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

#include "anchormdp/anchor_selection.h"

#include <cmath>

#include "gtest/gtest.h"
#include "test_util.h"

namespace anchormdp {
namespace {

AnchorPolicy Policy(DecayFamily f, double alpha, double lambda, double gamma) {
  AnchorPolicy p;
  p.family = f;
  p.alpha = alpha;
  p.lambda = lambda;
  p.gamma = gamma;
  return p;
}

// Matrix from explicit rows.
Matrix Rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

TEST(SelectionProbTest, ValuesAtZero) {
  EXPECT_DOUBLE_EQ(SelectionProb(Policy(DecayFamily::kLogistic, 0.8, 0.5, 1), 0),
                   0.8);
  EXPECT_DOUBLE_EQ(SelectionProb(Policy(DecayFamily::kPowerLaw, 0.8, 2.0, 1), 0),
                   0.8);
  EXPECT_DOUBLE_EQ(
      SelectionProb(Policy(DecayFamily::kExponential, 0.8, 0.5, 1), 0), 0.8);
}

TEST(SelectionProbTest, ExponentialClipsAtGamma) {
  AnchorPolicy p = Policy(DecayFamily::kExponential, 0.95, 0.5, 2.0);
  EXPECT_DOUBLE_EQ(SelectionProb(p, 3.0), 0.95 * std::exp(-1.0));
  EXPECT_DOUBLE_EQ(SelectionProb(p, 2.0), 0.95 * std::exp(-1.0));
  EXPECT_DOUBLE_EQ(SelectionProb(p, 1.0), 0.95 * std::exp(-0.5));
}

TEST(SelectionProbTest, FamilyFormulas) {
  const double d = 0.7;
  EXPECT_DOUBLE_EQ(SelectionProb(Policy(DecayFamily::kPowerLaw, 0.9, 2.0, 5), d),
                   0.9 / (1 + d * d));
  EXPECT_DOUBLE_EQ(SelectionProb(Policy(DecayFamily::kLogistic, 0.9, 1.5, 5), d),
                   1.8 / (1 + std::exp(1.5 * d)));
}

TEST(SelectionProbTest, NonIncreasingAndInsideUnitInterval) {
  for (DecayFamily f : {DecayFamily::kExponential, DecayFamily::kPowerLaw,
                        DecayFamily::kLogistic}) {
    AnchorPolicy p = Policy(f, 0.95, 0.5, 3.0);
    double prev = 1.0;
    for (double d = 0.0; d < 5.0; d += 0.01) {
      const double w = SelectionProb(p, d);
      EXPECT_GT(w, 0.0);
      EXPECT_LT(w, 1.0);
      EXPECT_LE(w, prev);
      prev = w;
    }
  }
}

TEST(AnchorPolicyTest, Validation) {
  EXPECT_TRUE(Policy(DecayFamily::kExponential, 0.95, 0.5, 1).Validate().ok());
  EXPECT_FALSE(Policy(DecayFamily::kExponential, 1.0, 0.5, 1).Validate().ok());
  EXPECT_FALSE(Policy(DecayFamily::kExponential, 0.9, 0.0, 1).Validate().ok());
  EXPECT_FALSE(Policy(DecayFamily::kExponential, 0.9, 0.5, 0).Validate().ok());
  // exp(-0.5 * 2000) underflows to 0.
  EXPECT_FALSE(Policy(DecayFamily::kExponential, 0.9, 0.5, 2000).Validate().ok());
}

TEST(AnchorPolicyTest, DefaultsAndNames) {
  SecretDomain d = testing::LineDomain({0, 10, 25});
  AnchorPolicy p = DefaultPolicy(d, DecayFamily::kLogistic);
  EXPECT_EQ(p.alpha, 0.95);
  EXPECT_EQ(p.lambda, 0.5);
  EXPECT_DOUBLE_EQ(p.gamma, 0.5);
  EXPECT_EQ(p.family, DecayFamily::kLogistic);
  for (absl::string_view name : {"exp", "power", "logistic"}) {
    auto f = ParseDecayFamily(name);
    ASSERT_TRUE(f.ok());
    EXPECT_EQ(DecayFamilyName(*f), name);
  }
  EXPECT_FALSE(ParseDecayFamily("gaussian").ok());
}

TEST(SetProbabilityTest, ProductFormulaOverAllSubsets) {
  const std::vector<double> w = {0.9, 0.5, 0.1};
  EXPECT_DOUBLE_EQ(SetProbability(w, std::vector<int>{0}), 0.9 * 0.5 * 0.9);
  EXPECT_NEAR(SetProbability(w, std::vector<int>{0}), 0.405, 1e-15);
  double total = 0.0;
  for (int mask = 0; mask < 8; ++mask) {
    std::vector<int> subset;
    double want = 1.0;
    for (int x = 0; x < 3; ++x) {
      if (mask >> x & 1) {
        subset.push_back(x);
        want *= w[x];
      } else {
        want *= 1 - w[x];
      }
    }
    EXPECT_DOUBLE_EQ(SetProbability(w, subset), want);
    total += SetProbability(w, subset);
  }
  EXPECT_NEAR(total, 1.0, 1e-15);
}

TEST(SampleAnchorSetTest, InclusionFrequenciesMatchWeights) {
  const Matrix w = Rows({{0.97, 0.6, 0.3, 0.05, 0.99}});
  Rng rng(99);
  const int trials = 10000;
  std::vector<int> hits(5, 0);
  int redraws = 0;
  for (int t = 0; t < trials; ++t) {
    AnchorSet s = SampleAnchorSet(w, 0, rng);
    ASSERT_FALSE(s.anchors.empty());
    EXPECT_TRUE(std::is_sorted(s.anchors.begin(), s.anchors.end()));
    redraws += s.redraws;
    for (int a : s.anchors) ++hits[a];
  }
  for (int x = 0; x < 5; ++x) {
    const double p = w(0, x);
    EXPECT_NEAR(static_cast<double>(hits[x]) / trials, p,
                testing::ThreeSigma(p, trials))
        << "record " << x;
  }
  // Pr[empty] = 0.03 * 0.4 * 0.7 * 0.95 * 0.01 is tiny.
  EXPECT_LE(redraws, 2);
}

TEST(SampleAnchorSetTest, NearOneSelectsEverything) {
  SecretDomain d = testing::LineDomain({0, 0.001, 0.002, 0.003});
  AnchorPolicy p = Policy(DecayFamily::kExponential, 0.999999, 0.01, 1.0);
  Rng rng(3);
  int full = 0;
  for (int t = 0; t < 1000; ++t) full += SampleAnchorSet(p, d, 1, rng).anchors.size() == 4;
  EXPECT_GE(full, 995);
}

TEST(SampleAnchorSetTest, EmptyDrawsAreRedrawn) {
  const Matrix w = Rows({{0.01, 0.01}});
  Rng rng(5);
  int redraws = 0;
  for (int t = 0; t < 200; ++t) {
    AnchorSet s = SampleAnchorSet(w, 0, rng);
    EXPECT_FALSE(s.anchors.empty());
    redraws += s.redraws;
  }
  EXPECT_GT(redraws, 1000);
}

TEST(SampleAnchorSetTest, DeterministicUnderSeed) {
  SecretDomain d = testing::LineDomain({0, 0.4, 0.9, 1.7, 2.0});
  AnchorPolicy p = DefaultPolicy(d);
  p.gamma = 1.0;
  Rng a(77), b(77);
  for (int t = 0; t < 50; ++t) {
    EXPECT_EQ(SampleAnchorSet(p, d, t % 5, a).anchors,
              SampleAnchorSet(p, d, t % 5, b).anchors);
  }
}

TEST(EpsilonBarTest, TwoRecordHandValue) {
  SecretDomain d = testing::LineDomain({0, 1});
  const Matrix w = Rows({{0.9, 0.3}, {0.3, 0.9}});
  // A = {0}: log((0.9 * 0.7) / (0.3 * 0.1)) = log 21.
  EXPECT_NEAR(EpsilonBar(w, d, 0, 1), std::log(21.0), 1e-14);
  EXPECT_NEAR(EpsilonBar(w, d, 0, 1),
              testing::ExhaustiveEpsilonBar({0.9, 0.3}, {0.3, 0.9}, 1.0), 1e-14);
}

TEST(EpsilonBarTest, IdenticalRowsGiveZero) {
  SecretDomain d = testing::LineDomain({0, 1, 2});
  const Matrix w = Rows({{0.5, 0.4, 0.3}, {0.5, 0.4, 0.3}, {0.1, 0.2, 0.3}});
  EXPECT_EQ(EpsilonBar(w, d, 0, 1), 0.0);
  EXPECT_GT(EpsilonBar(w, d, 0, 2), 0.0);
  EXPECT_EQ(EpsilonBar(w, d, 0, 2), EpsilonBar(w, d, 2, 0));
}

TEST(EpsilonBarTest, MatchesExhaustiveSupremum) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(rng.UniformInt(11));
    SecretDomain d = testing::RandomDomain(k, 3.0, rng);
    AnchorPolicy p = Policy(static_cast<DecayFamily>(trial % 3),
                            0.5 + 0.49 * rng.Uniform(), 0.2 + rng.Uniform(),
                            0.5 + 2.0 * rng.Uniform());
    const Matrix w = SelectionMatrix(p, d);
    const int n = static_cast<int>(rng.UniformInt(k));
    int m = static_cast<int>(rng.UniformInt(k - 1));
    if (m >= n) ++m;
    std::vector<double> wn(w.row(n).begin(), w.row(n).end());
    std::vector<double> wm(w.row(m).begin(), w.row(m).end());
    const double oracle = testing::ExhaustiveEpsilonBar(wn, wm, d.distance(n, m));
    const double got = EpsilonBar(w, d, n, m);
    EXPECT_NEAR(std::log(got), std::log(oracle), 1e-12) << "trial " << trial;
    EXPECT_DOUBLE_EQ(got, EpsilonBar(d, p, n, m));
  }
}

TEST(EpsilonBarTest, BoundsEverySubsetLogRatio) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + static_cast<int>(rng.UniformInt(9));
    SecretDomain d = testing::RandomDomain(k, 2.0, rng);
    const Matrix w = SelectionMatrix(DefaultPolicy(d), d);
    for (int n = 0; n < k; ++n) {
      for (int m = 0; m < k; ++m) {
        if (n == m) continue;
        const double bound = EpsilonBar(w, d, n, m) * d.distance(n, m);
        bool in[16];
        for (uint32_t mask = 0; mask < (1u << k); ++mask) {
          for (int x = 0; x < k; ++x) in[x] = mask >> x & 1u;
          EXPECT_LE(std::abs(SetLogRatio(w.row(n), w.row(m),
                                         std::span<const bool>(in, k))),
                    bound + 1e-12);
        }
      }
    }
  }
}

TEST(EpsilonBarTableTest, SymmetricNonnegativeZeroDiagonal) {
  Rng rng(4);
  SecretDomain d = testing::RandomDomain(15, 2.0, rng);
  const Matrix w = SelectionMatrix(DefaultPolicy(d), d);
  const Matrix t = EpsilonBarTable(w, d);
  for (int i = 0; i < 15; ++i) {
    EXPECT_EQ(t(i, i), 0.0);
    for (int j = 0; j < 15; ++j) {
      EXPECT_EQ(t(i, j), t(j, i));
      EXPECT_GE(t(i, j), 0.0);
      if (i != j) EXPECT_EQ(t(i, j), EpsilonBar(w, d, i, j));
    }
  }
}

TEST(AnchorSetFormatTest, RoundTrip) {
  std::vector<AnchorSet> sets = {{3, {0, 3, 7}, 0}, {1, {1}, 0}, {4, {2, 4}, 0}};
  auto parsed = ParseAnchorSets(FormatAnchorSets(sets));
  ASSERT_TRUE(parsed.ok()) << parsed.status();
  ASSERT_EQ(parsed->size(), 3u);
  for (size_t i = 0; i < sets.size(); ++i) {
    EXPECT_EQ((*parsed)[i].owner, sets[i].owner);
    EXPECT_EQ((*parsed)[i].anchors, sets[i].anchors);
  }
  EXPECT_FALSE(ParseAnchorSets("x: 1 2\n").ok());
  EXPECT_FALSE(ParseAnchorSets("1: \n").ok());
}

}  // namespace
}  // namespace anchormdp
