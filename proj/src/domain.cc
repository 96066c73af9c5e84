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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <utility>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "anchormdp/random.h"

namespace anchormdp {
namespace {

constexpr double kEarthRadiusKm = 6371.0088;
constexpr double kTriangleTolerance = 1e-9;
constexpr double kPriorTolerance = 1e-12;

std::string FormatDouble(double v) { return absl::StrFormat("%.17g", v); }

Matrix DistanceMatrix(std::span<const Point> records, Metric metric) {
  const int k = static_cast<int>(records.size());
  Matrix d(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      d(i, j) = d(j, i) = MetricDistance(metric, records[i], records[j]);
    }
  }
  return d;
}

absl::Status ValidateTasks(std::span<const Task> tasks) {
  if (tasks.empty()) {
    return absl::InvalidArgumentError(
        "task-discrepancy cost model needs at least one task");
  }
  double total = 0.0;
  for (const Task& t : tasks) {
    if (!(t.weight >= 0.0) || !std::isfinite(t.weight)) {
      return absl::InvalidArgumentError(
          absl::StrCat("negative or non-finite task weight ", t.weight));
    }
    total += t.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    return absl::InvalidArgumentError(
        absl::StrCat("task weights sum to ", total, ", expected 1"));
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<Metric> ParseMetric(absl::string_view name) {
  if (name == "euclidean-km" || name == "euclidean") return Metric::kEuclideanKm;
  if (name == "haversine-km" || name == "haversine") return Metric::kHaversineKm;
  return absl::InvalidArgumentError(absl::StrCat("unknown metric '", name, "'"));
}

absl::string_view MetricName(Metric metric) {
  return metric == Metric::kEuclideanKm ? "euclidean-km" : "haversine-km";
}

double HaversineKm(double lat1_deg, double lon1_deg, double lat2_deg,
                   double lon2_deg) {
  constexpr double kDegToRad = M_PI / 180.0;
  const double phi1 = lat1_deg * kDegToRad;
  const double phi2 = lat2_deg * kDegToRad;
  const double dphi = (lat2_deg - lat1_deg) * kDegToRad;
  const double dlambda = (lon2_deg - lon1_deg) * kDegToRad;
  const double s1 = std::sin(dphi / 2);
  const double s2 = std::sin(dlambda / 2);
  const double a = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

double MetricDistance(Metric metric, const Point& a, const Point& b) {
  switch (metric) {
    case Metric::kEuclideanKm:
      return std::hypot(a.lat - b.lat, a.lon - b.lon);
    case Metric::kHaversineKm:
      return HaversineKm(a.lat, a.lon, b.lat, b.lon);
  }
  return 0.0;
}

absl::StatusOr<SecretDomain> SecretDomain::Create(std::vector<Point> records,
                                                  Metric metric,
                                                  Matrix distances,
                                                  std::vector<double> priors,
                                                  std::vector<int> outputs) {
  const int k = static_cast<int>(records.size());
  if (k < 1) return absl::InvalidArgumentError("domain needs at least one record");
  if (distances.rows() != k || distances.cols() != k) {
    return absl::InvalidArgumentError("distance matrix must be K x K");
  }
  for (int i = 0; i < k; ++i) {
    if (distances(i, i) != 0.0) {
      return absl::InvalidArgumentError(
          absl::StrCat("nonzero self distance at record ", i));
    }
    for (int j = i + 1; j < k; ++j) {
      const double dij = distances(i, j);
      if (dij != distances(j, i)) {
        return absl::InvalidArgumentError(
            absl::StrCat("asymmetric distance between ", i, " and ", j));
      }
      if (!(dij > 0.0) || !std::isfinite(dij)) {
        return absl::InvalidArgumentError(absl::StrCat(
            "distance between distinct records ", i, " and ", j,
            " must be positive and finite, got ", dij));
      }
    }
  }
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      for (int l = 0; l < k; ++l) {
        if (distances(i, l) > distances(i, j) + distances(j, l) +
                                  kTriangleTolerance) {
          return absl::InvalidArgumentError(absl::StrCat(
              "triangle inequality violated for (", i, ", ", j, ", ", l, ")"));
        }
      }
    }
  }
  if (static_cast<int>(priors.size()) != k) {
    return absl::InvalidArgumentError("priors must have one entry per record");
  }
  double total = 0.0;
  for (double p : priors) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      return absl::InvalidArgumentError("priors must be finite and nonnegative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kPriorTolerance) {
    return absl::InvalidArgumentError(
        absl::StrFormat("priors sum to %.17g, expected 1", total));
  }
  if (outputs.empty()) {
    return absl::InvalidArgumentError("output domain must be nonempty");
  }
  std::vector<int> sorted = outputs;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() < 0 || sorted.back() >= k ||
      std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    return absl::InvalidArgumentError(
        "outputs must be distinct record indices");
  }

  SecretDomain domain;
  domain.records_ = std::move(records);
  domain.metric_ = metric;
  domain.distances_ = std::move(distances);
  domain.priors_ = std::move(priors);
  domain.outputs_ = std::move(outputs);
  return domain;
}

absl::StatusOr<SecretDomain> SecretDomain::FromPoints(std::vector<Point> records,
                                                      Metric metric) {
  const int k = static_cast<int>(records.size());
  Matrix d = DistanceMatrix(records, metric);
  std::vector<double> priors(k, 1.0 / k);
  const bool weighted =
      k > 0 && std::all_of(records.begin(), records.end(),
                           [](const Point& p) { return p.weight.has_value(); });
  if (weighted) {
    double total = 0.0;
    for (const Point& p : records) {
      if (!(*p.weight >= 0.0)) {
        return absl::InvalidArgumentError(
            absl::StrCat("negative weight for node ", p.id));
      }
      total += *p.weight;
    }
    if (!(total > 0.0)) {
      return absl::InvalidArgumentError("node weights sum to zero");
    }
    for (int i = 0; i < k; ++i) priors[i] = *records[i].weight / total;
    // Renormalize so the sum is 1 to within rounding of a single division.
    const double s = std::accumulate(priors.begin(), priors.end(), 0.0);
    for (double& p : priors) p /= s;
  } else {
    // Kahan-free uniform priors can drift by a few ulps for large K; push the
    // residual onto the first entry.
    const double s = std::accumulate(priors.begin(), priors.end(), 0.0);
    if (k > 0) priors[0] += 1.0 - s;
  }
  std::vector<int> outputs(k);
  std::iota(outputs.begin(), outputs.end(), 0);
  return Create(std::move(records), metric, std::move(d), std::move(priors),
                std::move(outputs));
}

double SecretDomain::MaxDistance() const {
  double best = 0.0;
  for (double v : distances_.data()) best = std::max(best, v);
  return best;
}

std::vector<int> SecretDomain::NeighborsByDistance(int i) const {
  std::vector<int> order(size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double da = distances_(i, a);
    const double db = distances_(i, b);
    if (da != db) return da < db;
    return a < b;
  });
  return order;
}

absl::StatusOr<SecretDomain> SecretDomain::WithPriors(
    std::vector<double> priors) const {
  return Create(records_, metric_, distances_, std::move(priors), outputs_);
}

absl::StatusOr<std::vector<Point>> ParseNodes(absl::string_view contents) {
  std::vector<Point> points;
  std::vector<absl::string_view> lines = absl::StrSplit(contents, '\n');
  bool saw_header = false;
  bool has_weight = false;
  int line_no = 0;
  for (absl::string_view raw : lines) {
    ++line_no;
    absl::string_view line = absl::StripAsciiWhitespace(raw);
    if (line.empty()) continue;
    std::vector<absl::string_view> fields = absl::StrSplit(line, ',');
    for (auto& f : fields) f = absl::StripAsciiWhitespace(f);
    if (!saw_header) {
      saw_header = true;
      if (fields.size() < 3 || fields[0] != "id" || fields[1] != "lat" ||
          fields[2] != "lon" ||
          (fields.size() == 4 && fields[3] != "weight") || fields.size() > 4) {
        return absl::InvalidArgumentError(absl::StrCat(
            "line ", line_no, ": expected header 'id,lat,lon[,weight]'"));
      }
      has_weight = fields.size() == 4;
      continue;
    }
    const size_t expected = has_weight ? 4 : 3;
    if (fields.size() != expected) {
      return absl::InvalidArgumentError(absl::StrCat(
          "line ", line_no, ": expected ", expected, " fields, got ",
          fields.size()));
    }
    Point p;
    p.id = std::string(fields[0]);
    if (!absl::SimpleAtod(fields[1], &p.lat) || !std::isfinite(p.lat)) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": invalid latitude '", fields[1], "'"));
    }
    if (!absl::SimpleAtod(fields[2], &p.lon) || !std::isfinite(p.lon)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "line ", line_no, ": invalid longitude '", fields[2], "'"));
    }
    if (has_weight) {
      double w = 0.0;
      if (!absl::SimpleAtod(fields[3], &w) || !std::isfinite(w) || w < 0.0) {
        return absl::InvalidArgumentError(
            absl::StrCat("line ", line_no, ": invalid weight '", fields[3], "'"));
      }
      p.weight = w;
    }
    points.push_back(std::move(p));
  }
  if (points.empty()) {
    return absl::InvalidArgumentError("node file contains no records");
  }
  return points;
}

absl::StatusOr<std::vector<Point>> LoadNodes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  absl::StatusOr<std::vector<Point>> points = ParseNodes(buffer.str());
  if (!points.ok()) {
    return absl::Status(points.status().code(),
                        absl::StrCat(path, ": ", points.status().message()));
  }
  return points;
}

std::string FormatNodes(std::span<const Point> points) {
  const bool weighted =
      !points.empty() &&
      std::all_of(points.begin(), points.end(),
                  [](const Point& p) { return p.weight.has_value(); });
  std::string out = weighted ? "id,lat,lon,weight\n" : "id,lat,lon\n";
  for (const Point& p : points) {
    absl::StrAppend(&out, p.id, ",", FormatDouble(p.lat), ",",
                    FormatDouble(p.lon));
    if (weighted) absl::StrAppend(&out, ",", FormatDouble(*p.weight));
    out += '\n';
  }
  return out;
}

absl::Status WriteNodes(const std::string& path, std::span<const Point> points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot write ", path));
  out << FormatNodes(points);
  return out ? absl::OkStatus()
             : absl::DataLossError(absl::StrCat("short write to ", path));
}

absl::StatusOr<SecretDomain> BuildDomain(std::span<const Point> points,
                                         Metric metric, int k, uint64_t seed) {
  if (k < 2) return absl::InvalidArgumentError("K must be at least 2");
  if (k > static_cast<int>(points.size())) {
    return absl::InvalidArgumentError(absl::StrCat(
        "K = ", k, " exceeds the number of points (", points.size(), ")"));
  }
  // Partial Fisher-Yates over an index permutation; duplicates (distance 0 to
  // an accepted record) are skipped and the next draw takes their place.
  std::vector<int> perm(points.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  std::vector<Point> chosen;
  chosen.reserve(k);
  const size_t n = perm.size();
  for (size_t i = 0; i < n && static_cast<int>(chosen.size()) < k; ++i) {
    const size_t j = i + rng.UniformInt(n - i);
    std::swap(perm[i], perm[j]);
    const Point& candidate = points[perm[i]];
    const bool duplicate =
        std::any_of(chosen.begin(), chosen.end(), [&](const Point& p) {
          return MetricDistance(metric, p, candidate) == 0.0;
        });
    if (!duplicate) chosen.push_back(candidate);
  }
  if (static_cast<int>(chosen.size()) < k) {
    return absl::InvalidArgumentError(absl::StrCat(
        "only ", chosen.size(), " distinct locations available for K = ", k));
  }
  return SecretDomain::FromPoints(std::move(chosen), metric);
}

absl::StatusOr<CostMatrix> BuildCostModelForPoints(
    const SecretDomain& domain, std::span<const Point> rows, CostMode mode,
    std::span<const Task> tasks) {
  CostMatrix cost;
  cost.mode = mode;
  const int ny = domain.num_outputs();
  cost.costs = Matrix(static_cast<int>(rows.size()), ny);
  if (mode == CostMode::kTaskDiscrepancy) {
    if (absl::Status s = ValidateTasks(tasks); !s.ok()) return s;
    cost.tasks.assign(tasks.begin(), tasks.end());
  }
  const Metric metric = domain.metric();
  for (size_t r = 0; r < rows.size(); ++r) {
    for (int k = 0; k < ny; ++k) {
      const Point& y = domain.record(domain.output(k));
      double c = 0.0;
      if (mode == CostMode::kDirectDistance) {
        c = MetricDistance(metric, rows[r], y);
      } else {
        for (const Task& t : tasks) {
          c += t.weight * std::abs(MetricDistance(metric, rows[r], t.location) -
                                   MetricDistance(metric, y, t.location));
        }
      }
      cost.costs(static_cast<int>(r), k) = c;
    }
  }
  return cost;
}

absl::StatusOr<CostMatrix> BuildCostModel(const SecretDomain& domain,
                                          CostMode mode,
                                          std::span<const Task> tasks) {
  if (mode == CostMode::kDirectDistance) {
    // Reuse the validated distance matrix so c[x][x] is exactly 0.
    CostMatrix cost;
    cost.mode = mode;
    cost.costs = Matrix(domain.size(), domain.num_outputs());
    for (int x = 0; x < domain.size(); ++x) {
      for (int k = 0; k < domain.num_outputs(); ++k) {
        cost.costs(x, k) = domain.distance(x, domain.output(k));
      }
    }
    return cost;
  }
  return BuildCostModelForPoints(domain, domain.records(), mode, tasks);
}

int PerturbationMatrix::RowOf(int record) const {
  auto it = std::find(rows.begin(), rows.end(), record);
  return it == rows.end() ? -1 : static_cast<int>(it - rows.begin());
}

absl::Status ValidateRowStochastic(const PerturbationMatrix& z,
                                   double tolerance) {
  if (static_cast<int>(z.rows.size()) != z.probs.rows()) {
    return absl::InvalidArgumentError("row index list does not match matrix");
  }
  for (int r = 0; r < z.probs.rows(); ++r) {
    double sum = 0.0;
    for (double v : z.probs.row(r)) {
      if (!(v >= -tolerance && v <= 1.0 + tolerance)) {
        return absl::InvalidArgumentError(
            absl::StrCat("entry outside [0,1] in row ", r, ": ", v));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > tolerance) {
      return absl::InvalidArgumentError(
          absl::StrFormat("row %d sums to %.12g", r, sum));
    }
  }
  return absl::OkStatus();
}

std::string FormatMatrixCsv(const Matrix& m) {
  std::string out;
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += FormatDouble(m(r, c));
    }
    out += '\n';
  }
  return out;
}

std::string FormatPerturbationCsv(const PerturbationMatrix& z) {
  std::string out = "record";
  for (int c = 0; c < z.num_cols(); ++c) absl::StrAppend(&out, ",y", c);
  out += '\n';
  for (int r = 0; r < z.num_rows(); ++r) {
    absl::StrAppend(&out, z.rows[r]);
    for (double v : z.probs.row(r)) absl::StrAppend(&out, ",", FormatDouble(v));
    out += '\n';
  }
  return out;
}

}  // namespace anchormdp
