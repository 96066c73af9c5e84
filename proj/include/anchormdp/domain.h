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

#ifndef ANCHORMDP_DOMAIN_H_
#define ANCHORMDP_DOMAIN_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "anchormdp/matrix.h"

namespace anchormdp {

// A node of the input dataset. For the planar metric (`kEuclideanKm`) the
// coordinates are interpreted as (x, y) in kilometers stored in (lat, lon);
// for `kHaversineKm` they are degrees.
struct Point {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  std::optional<double> weight;
};

enum class Metric { kEuclideanKm, kHaversineKm };

absl::StatusOr<Metric> ParseMetric(absl::string_view name);
absl::string_view MetricName(Metric metric);

// Distance in kilometers between two points under `metric`.
double MetricDistance(Metric metric, const Point& a, const Point& b);

// Great-circle distance on a sphere of radius 6371.0088 km.
double HaversineKm(double lat1_deg, double lon1_deg, double lat2_deg,
                   double lon2_deg);

// The finite secret domain X with its pairwise distances and priors. The
// output domain Y is an index list into the records; by default Y = X.
//
// Immutable once built; Create() validates every invariant.
class SecretDomain {
 public:
  // Validates: square symmetric distances with zero diagonal and strictly
  // positive off-diagonal entries, the triangle inequality (tolerance 1e-9),
  // priors that are nonnegative and sum to 1 +- 1e-12, and outputs that are
  // valid distinct record indices.
  static absl::StatusOr<SecretDomain> Create(std::vector<Point> records,
                                             Metric metric, Matrix distances,
                                             std::vector<double> priors,
                                             std::vector<int> outputs);

  // Same, computing the distance matrix from `metric` with uniform priors
  // (unless every record carries a weight) and Y = X.
  static absl::StatusOr<SecretDomain> FromPoints(std::vector<Point> records,
                                                 Metric metric);

  int size() const { return static_cast<int>(records_.size()); }
  int num_outputs() const { return static_cast<int>(outputs_.size()); }

  const std::vector<Point>& records() const { return records_; }
  const Point& record(int i) const { return records_[i]; }
  Metric metric() const { return metric_; }
  const Matrix& distances() const { return distances_; }
  double distance(int i, int j) const { return distances_(i, j); }
  std::span<const double> priors() const { return priors_; }
  double prior(int i) const { return priors_[i]; }
  std::span<const int> outputs() const { return outputs_; }
  int output(int k) const { return outputs_[k]; }

  // Largest pairwise distance.
  double MaxDistance() const;

  // Records sorted by (distance to `i`, index); `i` itself comes first.
  std::vector<int> NeighborsByDistance(int i) const;

  // Copy with different priors (validated).
  absl::StatusOr<SecretDomain> WithPriors(std::vector<double> priors) const;

 private:
  SecretDomain() = default;

  std::vector<Point> records_;
  Metric metric_ = Metric::kEuclideanKm;
  Matrix distances_;
  std::vector<double> priors_;
  std::vector<int> outputs_;
};

// Reads a node CSV with header `id,lat,lon[,weight]`. Errors name the
// offending line (1-based, header is line 1).
absl::StatusOr<std::vector<Point>> LoadNodes(const std::string& path);
absl::StatusOr<std::vector<Point>> ParseNodes(absl::string_view contents);

// Writes `points` in the node-CSV format. Coordinates are printed with 17
// significant digits so that ParseNodes() reproduces them exactly.
std::string FormatNodes(std::span<const Point> points);
absl::Status WriteNodes(const std::string& path, std::span<const Point> points);

// Uniformly samples `k` of `points` without replacement (deterministic under
// `seed`) and builds the domain. Sampled records whose coordinates coincide
// with an already accepted record (distance 0) are rejected and replaced by
// the next draw, so the result never contains zero-distance pairs.
absl::StatusOr<SecretDomain> BuildDomain(std::span<const Point> points,
                                         Metric metric, int k, uint64_t seed);

enum class CostMode { kDirectDistance, kTaskDiscrepancy };

struct Task {
  Point location;
  double weight = 0.0;
};

// Utility-loss coefficients c[x][k] for record x reported as output Y[k].
struct CostMatrix {
  CostMode mode = CostMode::kDirectDistance;
  Matrix costs;
  std::vector<Task> tasks;

  double operator()(int x, int k) const { return costs(x, k); }
};

// Direct-distance mode: c[x][k] = d(x, Y[k]). Task-discrepancy mode:
// c[x][k] = sum_t w_t |d(x, t) - d(Y[k], t)|, with weights summing to 1.
absl::StatusOr<CostMatrix> BuildCostModel(const SecretDomain& domain,
                                          CostMode mode,
                                          std::span<const Task> tasks = {});

// Cost rows for arbitrary query points (used for grid-cell representatives).
absl::StatusOr<CostMatrix> BuildCostModelForPoints(
    const SecretDomain& domain, std::span<const Point> rows, CostMode mode,
    std::span<const Task> tasks = {});

// Row-stochastic perturbation probabilities. Row r is the perturbation vector
// of record rows[r]; column k corresponds to output Y[k].
struct PerturbationMatrix {
  std::vector<int> rows;
  Matrix probs;

  int num_rows() const { return probs.rows(); }
  int num_cols() const { return probs.cols(); }
  // Position of `record` in `rows`, or -1.
  int RowOf(int record) const;
};

// Checks entries in [0, 1] and row sums equal to 1 within `tolerance`.
absl::Status ValidateRowStochastic(const PerturbationMatrix& z,
                                   double tolerance = 1e-9);

std::string FormatMatrixCsv(const Matrix& m);
std::string FormatPerturbationCsv(const PerturbationMatrix& z);

}  // namespace anchormdp

#endif  // ANCHORMDP_DOMAIN_H_
