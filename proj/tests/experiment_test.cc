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

#include "anchormdp/experiment.h"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "absl/strings/str_split.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace anchormdp {
namespace {

using ::testing::HasSubstr;

RunConfig Synthetic(int count, double side) {
  RunConfig c;
  c.synthetic = SyntheticSpec{count, side};
  return c;
}

std::vector<std::string> Lines(const std::string& text) {
  return absl::StrSplit(text, '\n', absl::SkipEmpty());
}

TEST(SyntheticTest, ParseSpec) {
  auto s = ParseSyntheticSpec("2,1");
  ASSERT_TRUE(s.ok());
  EXPECT_EQ(s->count, 2);
  EXPECT_DOUBLE_EQ(s->side_km, 1.0);
  EXPECT_FALSE(ParseSyntheticSpec("3").ok());
  EXPECT_FALSE(ParseSyntheticSpec("x,1").ok());
  EXPECT_FALSE(ParseSyntheticSpec("0,1").ok());
  EXPECT_FALSE(ParseSyntheticSpec("5,-1").ok());
}

TEST(SyntheticTest, DeterministicBoundedAndRoundTrips) {
  const SyntheticSpec spec{5000, 10.0};
  std::vector<Point> a = GenerateSynthetic(spec, 42);
  std::vector<Point> b = GenerateSynthetic(spec, 42);
  ASSERT_EQ(a.size(), 5000u);
  EXPECT_EQ(FormatNodes(a), FormatNodes(b));
  EXPECT_NE(FormatNodes(a), FormatNodes(GenerateSynthetic(spec, 43)));
  for (const Point& p : a) {
    EXPECT_GE(p.lat, 0.0);
    EXPECT_LE(p.lat, 10.0);
    EXPECT_GE(p.lon, 0.0);
    EXPECT_LE(p.lon, 10.0);
  }
  auto parsed = ParseNodes(FormatNodes(a));
  ASSERT_TRUE(parsed.ok()) << parsed.status();
  ASSERT_EQ(parsed->size(), a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ((*parsed)[i].id, a[i].id);
    EXPECT_EQ((*parsed)[i].lat, a[i].lat);
    EXPECT_EQ((*parsed)[i].lon, a[i].lon);
  }
}

TEST(RunConfigTest, DefaultsAndValidation) {
  RunConfig c;
  EXPECT_EQ(c.k, 100);
  EXPECT_EQ(c.users, 20);
  EXPECT_DOUBLE_EQ(c.epsilon, 5.0);
  EXPECT_DOUBLE_EQ(c.delta, 1e-7);
  EXPECT_DOUBLE_EQ(c.alpha, 0.95);
  EXPECT_DOUBLE_EQ(c.lambda, 0.5);
  EXPECT_EQ(c.gamma_nn, 10);
  EXPECT_EQ(c.grid_rows, 8);
  EXPECT_EQ(c.grid_cols, 8);
  EXPECT_EQ(c.repeats, 1);
  EXPECT_EQ(c.full_lp_max_k, 300);
  EXPECT_FALSE(c.Validate().ok());  // no input
  RunConfig s = Synthetic(10, 1.0);
  EXPECT_TRUE(s.Validate().ok());
  s.mechanisms = {"nope"};
  EXPECT_THAT(s.Validate().message(), HasSubstr("unknown mechanism"));
  s = Synthetic(10, 1.0);
  s.delta = 1.0;
  EXPECT_FALSE(s.Validate().ok());
  s = Synthetic(10, 1.0);
  s.dataset = "x.csv";
  EXPECT_FALSE(s.Validate().ok());
  const std::vector<std::string> kv = Lines(Synthetic(10, 1.0).ToText());
  EXPECT_TRUE(std::is_sorted(kv.begin(), kv.end()));
}

TEST(RunExperimentTest, EmOnlyIsFast) {
  RunConfig c = Synthetic(2000, 5.0);
  c.k = 100;
  c.mechanisms = {"em"};
  const auto start = std::chrono::steady_clock::now();
  auto r = RunExperiment(c);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_TRUE(r.ok()) << r.status();
  ASSERT_EQ(r->reports.size(), 1u);
  EXPECT_EQ(r->reports[0].status, "ok");
  EXPECT_EQ(r->reports[0].k, 100);
  EXPECT_EQ(r->reports[0].users, 20);
  EXPECT_GT(r->reports[0].utility_loss_m, 0.0);
  EXPECT_LT(secs, 1.0);
  EXPECT_EQ(Lines(ReportCsv(*r)).size(), 2u);
}

TEST(RunExperimentTest, SameSeedIsByteIdentical) {
  RunConfig c = Synthetic(300, 3.0);
  c.k = 30;
  c.users = 8;
  c.repeats = 10;
  c.seed = 7;
  c.mechanisms = {"em", "em_br", "full_lp", "lp_ca"};
  c.workers = 3;
  auto a = RunExperiment(c);
  c.workers = 1;
  auto b = RunExperiment(c);
  ASSERT_TRUE(a.ok() && b.ok());
  EXPECT_EQ(ReportCsv(*a), ReportCsv(*b));
  EXPECT_EQ(ViolationsCsv(*a), ViolationsCsv(*b));
  ASSERT_EQ(a->reports.size(), 40u);
  // Repeat-major, config order.
  EXPECT_EQ(a->reports[5].repeat, 1);
  EXPECT_EQ(a->reports[5].mechanism, "em_br");
  c.seed = 8;
  auto other = RunExperiment(c);
  ASSERT_TRUE(other.ok());
  EXPECT_NE(ReportCsv(*a), ReportCsv(*other));
}

TEST(RunExperimentTest, FailuresAreIsolated) {
  RunConfig c = Synthetic(100, 2.0);
  c.k = 20;
  c.full_lp_max_k = 10;
  c.mechanisms = {"full_lp", "em"};
  auto r = RunExperiment(c);
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r->reports.size(), 2u);
  EXPECT_THAT(r->reports[0].status, HasSubstr("full LP refused"));
  EXPECT_EQ(r->reports[1].status, "ok");
  const std::vector<std::string> rows = Lines(ReportCsv(*r));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0],
            "mechanism,repeat,seed,k,users,status,utility_loss_m,violations,"
            "pairs,violation_rate,variables,inequalities,equalities,"
            "anchor_fraction,objective,relaxed_objective,approx_ratio");
}

TEST(RunExperimentTest, ReportedLossMatchesFullLpObjective) {
  RunConfig c = Synthetic(100, 2.0);
  c.k = 15;
  c.mechanisms = {"full_lp", "lp_ca"};
  c.grid_rows = c.grid_cols = 1000;
  auto r = RunExperiment(c);
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r->reports[0].status, "ok");
  // Objective is in km, the reported loss in m.
  EXPECT_NEAR(r->reports[0].utility_loss_m, 1000 * r->reports[0].objective, 1e-6);
  EXPECT_EQ(r->reports[0].violations.violations, 0);
  EXPECT_EQ(r->reports[0].lp.variables, 15 * 15);
  EXPECT_NEAR(r->reports[1].utility_loss_m, r->reports[0].utility_loss_m, 1e-6);
}

TEST(AggregateTest, MeanAndInterval) {
  MeanInterval m = Aggregate({1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.0);
  EXPECT_DOUBLE_EQ(m.half_width, 1.96);
  EXPECT_EQ(m.count, 3);
  EXPECT_DOUBLE_EQ(Aggregate({4.0}).half_width, 0.0);
  EXPECT_EQ(Aggregate({}).count, 0);
}

TEST(WriteArtifactsTest, WritesEveryFile) {
  RunConfig c = Synthetic(50, 1.0);
  c.k = 10;
  c.users = 4;
  c.repeats = 2;
  c.mechanisms = {"em", "lp_ca"};
  c.out_dir = (std::filesystem::path(::testing::TempDir()) / "artifacts_test").string();
  std::filesystem::remove_all(c.out_dir);
  auto r = RunExperiment(c);
  ASSERT_TRUE(r.ok());
  ASSERT_TRUE(WriteArtifacts(c, *r).ok());
  for (const char* f : {"config.txt", "report.csv", "budget_allocation.csv",
                        "violations.csv", "summary.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(c.out_dir) / f)) << f;
  }
  std::ifstream in(std::filesystem::path(c.out_dir) / "report.csv");
  std::stringstream buf;
  buf << in.rdbuf();
  EXPECT_EQ(buf.str(), ReportCsv(*r));
  const std::string summary = SummaryText(c, *r);
  EXPECT_THAT(summary, HasSubstr("lp_ca"));
  EXPECT_THAT(summary, HasSubstr("epsilon=5"));
}

}  // namespace
}  // namespace anchormdp
