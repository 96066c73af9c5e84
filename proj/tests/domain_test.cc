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

#include "anchormdp/domain.h"

#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "absl/strings/str_cat.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace anchormdp {
namespace {

using ::testing::HasSubstr;

TEST(ParseNodesTest, ThreeValidRows) {
  auto nodes = ParseNodes("id,lat,lon\na,51.5,-0.12\nb,51.6,-0.11\nc,51.7,-0.1\n");
  ASSERT_TRUE(nodes.ok()) << nodes.status();
  ASSERT_EQ(nodes->size(), 3u);
  EXPECT_EQ((*nodes)[1].id, "b");
  EXPECT_EQ((*nodes)[2].lat, 51.7);
  EXPECT_EQ((*nodes)[0].lon, -0.12);
  EXPECT_FALSE((*nodes)[0].weight.has_value());
}

TEST(ParseNodesTest, NonNumericLongitudeNamesTheLine) {
  auto nodes = ParseNodes("id,lat,lon\na,1,2\nb,3,east\n");
  ASSERT_FALSE(nodes.ok());
  EXPECT_THAT(nodes.status().message(), HasSubstr("line 3"));
}

TEST(ParseNodesTest, OptionalWeightColumn) {
  auto nodes = ParseNodes("id,lat,lon,weight\na,1,2,0.25\nb,3,4,0.75\n");
  ASSERT_TRUE(nodes.ok()) << nodes.status();
  EXPECT_EQ((*nodes)[1].weight, 0.75);
}

TEST(ParseNodesTest, RejectsBadHeaderAndWrongArity) {
  EXPECT_FALSE(ParseNodes("x,y\n1,2\n").ok());
  EXPECT_FALSE(ParseNodes("id,lat,lon\na,1\n").ok());
}

TEST(ParseNodesTest, LargeFileRowCount) {
  Rng rng(7);
  std::vector<Point> points = testing::RandomPoints(12820, 30.0, rng);
  auto parsed = ParseNodes(FormatNodes(points));
  ASSERT_TRUE(parsed.ok());
  EXPECT_EQ(parsed->size(), 12820u);
}

TEST(FormatNodesTest, RoundTripIsExact) {
  Rng rng(3);
  std::vector<Point> points = testing::RandomPoints(200, 7.0, rng);
  for (size_t i = 0; i < points.size(); ++i) points[i].weight = 0.1 * (i + 1) / 3;
  auto parsed = ParseNodes(FormatNodes(points));
  ASSERT_TRUE(parsed.ok()) << parsed.status();
  ASSERT_EQ(parsed->size(), points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    EXPECT_EQ((*parsed)[i].id, points[i].id);
    EXPECT_EQ((*parsed)[i].lat, points[i].lat);
    EXPECT_EQ((*parsed)[i].lon, points[i].lon);
    EXPECT_EQ((*parsed)[i].weight, points[i].weight);
  }
}

TEST(FormatNodesTest, PartialWeightsAreDropped) {
  std::vector<Point> points = {{"a", 0, 0, 2.0}, {"b", 1, 1, std::nullopt}};
  EXPECT_EQ(FormatNodes(points), "id,lat,lon\na,0,0\nb,1,1\n");
}

TEST(LoadNodesTest, MissingFile) {
  EXPECT_FALSE(LoadNodes("/nonexistent/nodes.csv").ok());
}

TEST(LoadNodesTest, WriteThenLoad) {
  const std::string path =
      (std::filesystem::temp_directory_path() / "anchormdp_nodes.csv").string();
  Rng rng(11);
  std::vector<Point> points = testing::RandomPoints(10, 1.0, rng);
  ASSERT_TRUE(WriteNodes(path, points).ok());
  auto loaded = LoadNodes(path);
  ASSERT_TRUE(loaded.ok());
  EXPECT_EQ(FormatNodes(*loaded), FormatNodes(points));
  std::filesystem::remove(path);
}

TEST(DomainTest, CollinearDistances) {
  SecretDomain d = testing::LineDomain({0, 1, 2});
  const double want[3][3] = {{0, 1, 2}, {1, 0, 1}, {2, 1, 0}};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(d.distance(i, j), want[i][j]);
  }
  EXPECT_DOUBLE_EQ(d.MaxDistance(), 2.0);
  EXPECT_EQ(d.num_outputs(), 3);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(d.prior(i), 1.0 / 3);
}

TEST(DomainTest, HaversineOneDegreeLatitude) {
  // Arc length of one degree on the mean Earth radius.
  const double want = 6371.0088 * std::numbers::pi / 180.0;
  EXPECT_NEAR(HaversineKm(10.0, 20.0, 11.0, 20.0), want, 1e-9);
  EXPECT_NEAR(want, 111.19, 0.01);
  Point a{"a", 10.0, 20.0, std::nullopt};
  Point b{"b", 11.0, 20.0, std::nullopt};
  EXPECT_NEAR(MetricDistance(Metric::kHaversineKm, a, b), want, 1e-9);
}

TEST(DomainTest, HaversineAgreesWithChordFormula) {
  // Independent path: chord length on the unit sphere, then the arc.
  auto arc = [](double la1, double lo1, double la2, double lo2) {
    const double r = std::numbers::pi / 180.0;
    auto v = [&](double la, double lo) {
      return std::array<double, 3>{std::cos(la * r) * std::cos(lo * r),
                                   std::cos(la * r) * std::sin(lo * r),
                                   std::sin(la * r)};
    };
    auto p = v(la1, lo1), q = v(la2, lo2);
    const double chord = std::hypot(p[0] - q[0], p[1] - q[1], p[2] - q[2]);
    return 6371.0088 * 2.0 * std::asin(chord / 2.0);
  };
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const double la1 = 50 + rng.Uniform(), lo1 = rng.Uniform();
    const double la2 = 50 + rng.Uniform(), lo2 = rng.Uniform();
    EXPECT_NEAR(HaversineKm(la1, lo1, la2, lo2), arc(la1, lo1, la2, lo2), 1e-7);
  }
}

TEST(DomainTest, CreateValidatesInvariants) {
  std::vector<Point> pts(2);
  Matrix good(2, 2);
  good(0, 1) = good(1, 0) = 1.0;
  EXPECT_TRUE(SecretDomain::Create(pts, Metric::kEuclideanKm, good, {0.5, 0.5},
                                   {0, 1})
                  .ok());
  Matrix asym = good;
  asym(0, 1) = 2.0;
  EXPECT_FALSE(SecretDomain::Create(pts, Metric::kEuclideanKm, asym,
                                    {0.5, 0.5}, {0, 1})
                   .ok());
  Matrix zero(2, 2);
  EXPECT_FALSE(SecretDomain::Create(pts, Metric::kEuclideanKm, zero,
                                    {0.5, 0.5}, {0, 1})
                   .ok());
  EXPECT_FALSE(SecretDomain::Create(pts, Metric::kEuclideanKm, good,
                                    {0.5, 0.6}, {0, 1})
                   .ok());
  EXPECT_FALSE(SecretDomain::Create(pts, Metric::kEuclideanKm, good,
                                    {1.5, -0.5}, {0, 1})
                   .ok());
  EXPECT_FALSE(SecretDomain::Create(pts, Metric::kEuclideanKm, good,
                                    {0.5, 0.5}, {0, 0})
                   .ok());
  // Triangle inequality: d(0,2) = 5 > d(0,1) + d(1,2) = 2.
  std::vector<Point> pts3(3);
  Matrix tri(3, 3);
  tri(0, 1) = tri(1, 0) = 1;
  tri(1, 2) = tri(2, 1) = 1;
  tri(0, 2) = tri(2, 0) = 5;
  EXPECT_FALSE(SecretDomain::Create(pts3, Metric::kEuclideanKm, tri,
                                    {0.2, 0.3, 0.5}, {0, 1, 2})
                   .ok());
}

TEST(DomainTest, WeightsBecomePriors) {
  std::vector<Point> pts = {{"a", 0, 0, 1.0}, {"b", 1, 0, 3.0}};
  auto d = SecretDomain::FromPoints(pts, Metric::kEuclideanKm);
  ASSERT_TRUE(d.ok());
  EXPECT_DOUBLE_EQ(d->prior(0), 0.25);
  EXPECT_DOUBLE_EQ(d->prior(1), 0.75);
}

TEST(DomainTest, NeighborsByDistanceBreaksTiesByIndex) {
  SecretDomain d = testing::LineDomain({0, -1, 1, 3});
  EXPECT_EQ(d.NeighborsByDistance(0), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(d.NeighborsByDistance(3), (std::vector<int>{3, 2, 0, 1}));
}

TEST(BuildDomainTest, DeterministicAndDistinct) {
  Rng rng(1);
  std::vector<Point> points = testing::RandomPoints(500, 10.0, rng);
  points.push_back(points[0]);  // duplicate coordinates are skipped
  auto a = BuildDomain(points, Metric::kEuclideanKm, 100, 42);
  auto b = BuildDomain(points, Metric::kEuclideanKm, 100, 42);
  auto c = BuildDomain(points, Metric::kEuclideanKm, 100, 43);
  ASSERT_TRUE(a.ok() && b.ok() && c.ok());
  ASSERT_EQ(a->size(), 100);
  bool same = true, differs = false;
  for (int i = 0; i < 100; ++i) {
    same &= a->record(i).id == b->record(i).id;
    differs |= a->record(i).id != c->record(i).id;
  }
  EXPECT_TRUE(same);
  EXPECT_TRUE(differs);
  EXPECT_FALSE(BuildDomain(points, Metric::kEuclideanKm, 1000, 1).ok());
}

TEST(CostModelTest, DirectDistance) {
  SecretDomain d = testing::LineDomain({0, 1, 2});
  auto c = BuildCostModel(d, CostMode::kDirectDistance);
  ASSERT_TRUE(c.ok());
  for (int x = 0; x < 3; ++x) {
    EXPECT_EQ((*c)(x, x), 0.0);
    for (int y = 0; y < 3; ++y) EXPECT_DOUBLE_EQ((*c)(x, y), d.distance(x, y));
  }
}

TEST(CostModelTest, SingleTaskCollapsesToDistance) {
  SecretDomain d = testing::LineDomain({0, 1, 2, 4});
  std::vector<Task> tasks = {{d.record(1), 1.0}};
  auto c = BuildCostModel(d, CostMode::kTaskDiscrepancy, tasks);
  ASSERT_TRUE(c.ok());
  for (int y = 0; y < 4; ++y) EXPECT_DOUBLE_EQ((*c)(1, y), d.distance(y, 1));
}

TEST(CostModelTest, TwoEndpointTasks) {
  SecretDomain d = testing::LineDomain({0, 1, 2});
  std::vector<Task> tasks = {{d.record(0), 0.5}, {d.record(2), 0.5}};
  auto c = BuildCostModel(d, CostMode::kTaskDiscrepancy, tasks);
  ASSERT_TRUE(c.ok());
  // 0.5 |0 - 2| + 0.5 |2 - 0|.
  EXPECT_DOUBLE_EQ((*c)(0, 2), 2.0);
  // 0.5 |0 - 1| + 0.5 |2 - 1|.
  EXPECT_DOUBLE_EQ((*c)(0, 1), 1.0);
  // 0.5 |1 - 1| + 0.5 |1 - 1|.
  EXPECT_DOUBLE_EQ((*c)(1, 1), 0.0);
}

TEST(CostModelTest, TaskModeValidation) {
  SecretDomain d = testing::LineDomain({0, 1});
  EXPECT_FALSE(BuildCostModel(d, CostMode::kTaskDiscrepancy).ok());
  std::vector<Task> bad = {{d.record(0), 0.3}};
  EXPECT_FALSE(BuildCostModel(d, CostMode::kTaskDiscrepancy, bad).ok());
}

TEST(PerturbationMatrixTest, RowStochasticValidation) {
  PerturbationMatrix z{{0, 1}, Matrix(2, 2, 0.5)};
  EXPECT_TRUE(ValidateRowStochastic(z).ok());
  EXPECT_EQ(z.RowOf(1), 1);
  EXPECT_EQ(z.RowOf(7), -1);
  z.probs(0, 0) = 0.6;
  EXPECT_FALSE(ValidateRowStochastic(z).ok());
  z.probs(0, 1) = 0.4;
  EXPECT_TRUE(ValidateRowStochastic(z).ok());
  z.probs(1, 0) = -0.1;
  z.probs(1, 1) = 1.1;
  EXPECT_FALSE(ValidateRowStochastic(z).ok());
}

}  // namespace
}  // namespace anchormdp
