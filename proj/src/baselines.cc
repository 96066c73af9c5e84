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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "absl/strings/str_cat.h"

namespace anchormdp {
namespace {

absl::StatusOr<LpMechanism> SolveProgram(const MdpProgram& program,
                                         const MdpSolveOptions& options) {
  MdpSolveResult solved = SolveMdpProgram(program, options);
  if (solved.status != LpStatus::kOptimal) {
    return absl::InternalError(absl::StrCat("perturbation LP not solved: ",
                                            LpStatusName(solved.status)));
  }
  LpMechanism m;
  m.z.rows.resize(program.num_rows);
  std::iota(m.z.rows.begin(), m.z.rows.end(), 0);
  m.z.probs = std::move(solved.z);
  m.objective = solved.objective;
  m.num_variables = program.num_variables();
  m.num_inequalities = program.num_inequalities();
  m.num_equalities = program.num_equalities();
  m.generated_rows = solved.generated_rows;
  return m;
}

// Cell of `v` among `n` equal bins of width `step` starting at `lo`; values
// on an interior boundary go to the lower bin.
int Bin(double v, double lo, double step, int n) {
  if (!(step > 0.0)) return 0;
  const int b = static_cast<int>(std::ceil((v - lo) / step)) - 1;
  return std::clamp(b, 0, n - 1);
}

}  // namespace

absl::StatusOr<PerturbationMatrix> EmMatrix(const SecretDomain& domain,
                                            double epsilon,
                                            double scale_factor) {
  if (!(epsilon > 0.0)) {
    return absl::InvalidArgumentError("epsilon must be positive");
  }
  const int k = domain.size();
  const int ny = domain.num_outputs();
  PerturbationMatrix z;
  z.rows.resize(k);
  std::iota(z.rows.begin(), z.rows.end(), 0);
  z.probs = Matrix(k, ny);
  const double rate = scale_factor * epsilon;
  for (int x = 0; x < k; ++x) {
    double dmin = domain.distance(x, domain.output(0));
    for (int c = 1; c < ny; ++c) {
      dmin = std::min(dmin, domain.distance(x, domain.output(c)));
    }
    double total = 0.0;
    for (int c = 0; c < ny; ++c) {
      const double w = std::exp(-rate * (domain.distance(x, domain.output(c)) - dmin));
      z.probs(x, c) = w;
      total += w;
    }
    for (int c = 0; c < ny; ++c) z.probs(x, c) /= total;
  }
  return z;
}

RemapTable BayesianRemap(const SecretDomain& domain,
                         const PerturbationMatrix& z, const CostMatrix& cost) {
  const int ny = z.num_cols();
  RemapTable table;
  table.remap.resize(ny);
  for (int c = 0; c < ny; ++c) {
    double marginal = 0.0;
    for (int r = 0; r < z.num_rows(); ++r) {
      marginal += domain.prior(z.rows[r]) * z.probs(r, c);
    }
    table.remap[c] = c;
    if (!(marginal > 0.0)) continue;
    double best = 0.0;
    for (int target = 0; target < ny; ++target) {
      // Unnormalized posterior expectation; the argmin is unchanged.
      double expected = 0.0;
      for (int r = 0; r < z.num_rows(); ++r) {
        expected += domain.prior(z.rows[r]) * z.probs(r, c) *
                    cost(z.rows[r], target);
      }
      if (target == 0 || expected < best) {
        best = expected;
        table.remap[c] = target;
      }
    }
  }
  return table;
}

PerturbationMatrix ApplyRemap(const PerturbationMatrix& z,
                              const RemapTable& table) {
  PerturbationMatrix out;
  out.rows = z.rows;
  out.probs = Matrix(z.num_rows(), z.num_cols());
  for (int r = 0; r < z.num_rows(); ++r) {
    for (int c = 0; c < z.num_cols(); ++c) {
      out.probs(r, table.remap[c]) += z.probs(r, c);
    }
  }
  return out;
}

MdpProgram FullLpProgram(const SecretDomain& domain, double epsilon,
                         const CostMatrix& cost) {
  const int k = domain.size();
  MdpProgram p;
  p.num_rows = k;
  p.num_cols = domain.num_outputs();
  p.weighted_cost = Matrix(k, p.num_cols);
  for (int x = 0; x < k; ++x) {
    for (int c = 0; c < p.num_cols; ++c) {
      p.weighted_cost(x, c) = domain.prior(x) * cost(x, c);
    }
  }
  p.pairs.reserve(static_cast<size_t>(k) * (k - 1) / 2);
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      p.pairs.push_back({a, b, epsilon * domain.distance(a, b)});
    }
  }
  return p;
}

absl::StatusOr<LpMechanism> FullLp(const SecretDomain& domain, double epsilon,
                                   const CostMatrix& cost,
                                   const MdpSolveOptions& options) {
  if (!(epsilon >= 0.0)) {
    return absl::InvalidArgumentError("epsilon must be nonnegative");
  }
  return SolveProgram(FullLpProgram(domain, epsilon, cost), options);
}

GridPartition BuildGrid(const SecretDomain& domain, int grid_rows,
                        int grid_cols) {
  GridPartition grid;
  grid.rows = std::max(grid_rows, 1);
  grid.cols = std::max(grid_cols, 1);
  const auto& recs = domain.records();
  double lat_lo = recs[0].lat, lat_hi = recs[0].lat;
  double lon_lo = recs[0].lon, lon_hi = recs[0].lon;
  for (const Point& p : recs) {
    lat_lo = std::min(lat_lo, p.lat);
    lat_hi = std::max(lat_hi, p.lat);
    lon_lo = std::min(lon_lo, p.lon);
    lon_hi = std::max(lon_hi, p.lon);
  }
  const double lat_step = (lat_hi - lat_lo) / grid.rows;
  const double lon_step = (lon_hi - lon_lo) / grid.cols;
  std::vector<int> used(grid.rows * grid.cols, -1);
  grid.cell_of_record.resize(recs.size());
  for (size_t i = 0; i < recs.size(); ++i) {
    const int r = Bin(recs[i].lat, lat_lo, lat_step, grid.rows);
    const int c = Bin(recs[i].lon, lon_lo, lon_step, grid.cols);
    const int id = r * grid.cols + c;
    if (used[id] < 0) {
      used[id] = static_cast<int>(grid.cell_id.size());
      grid.cell_id.push_back(id);
    }
    grid.cell_of_record[i] = used[id];
  }
  // Renumber cells in grid order so the result does not depend on record
  // order.
  std::vector<int> order(grid.cell_id.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return grid.cell_id[a] < grid.cell_id[b]; });
  std::vector<int> rank(order.size());
  for (size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i);
  for (int& c : grid.cell_of_record) c = rank[c];
  std::sort(grid.cell_id.begin(), grid.cell_id.end());
  // Representative: centroid of the member records, so a singleton cell is
  // represented by its record exactly.
  grid.centers.resize(grid.cell_id.size());
  std::vector<int> members(grid.cell_id.size(), 0);
  for (size_t i = 0; i < recs.size(); ++i) {
    Point& c = grid.centers[grid.cell_of_record[i]];
    c.lat += recs[i].lat;
    c.lon += recs[i].lon;
    ++members[grid.cell_of_record[i]];
  }
  for (size_t i = 0; i < grid.centers.size(); ++i) {
    grid.centers[i].id = absl::StrCat("cell", grid.cell_id[i]);
    grid.centers[i].lat /= members[i];
    grid.centers[i].lon /= members[i];
  }
  return grid;
}

absl::StatusOr<CoarseLpResult> CoarseLp(const SecretDomain& domain,
                                        int grid_rows, int grid_cols,
                                        double epsilon, const CostMatrix& cost,
                                        const MdpSolveOptions& options) {
  if (grid_rows < 1 || grid_cols < 1) {
    return absl::InvalidArgumentError("grid dimensions must be at least 1x1");
  }
  CoarseLpResult result;
  result.grid = BuildGrid(domain, grid_rows, grid_cols);
  const GridPartition& grid = result.grid;
  const int cells = static_cast<int>(grid.centers.size());
  absl::StatusOr<CostMatrix> center_cost =
      BuildCostModelForPoints(domain, grid.centers, cost.mode, cost.tasks);
  if (!center_cost.ok()) return center_cost.status();

  std::vector<double> cell_prior(cells, 0.0);
  for (int x = 0; x < domain.size(); ++x) {
    cell_prior[grid.cell_of_record[x]] += domain.prior(x);
  }
  MdpProgram p;
  p.num_rows = cells;
  p.num_cols = domain.num_outputs();
  p.weighted_cost = Matrix(cells, p.num_cols);
  for (int i = 0; i < cells; ++i) {
    for (int c = 0; c < p.num_cols; ++c) {
      p.weighted_cost(i, c) = cell_prior[i] * (*center_cost)(i, c);
    }
  }
  for (int a = 0; a < cells; ++a) {
    for (int b = a + 1; b < cells; ++b) {
      const double d =
          MetricDistance(domain.metric(), grid.centers[a], grid.centers[b]);
      p.pairs.push_back({a, b, epsilon * d});
    }
  }
  absl::StatusOr<LpMechanism> solved = SolveProgram(p, options);
  if (!solved.ok()) return solved.status();
  result.cells = *std::move(solved);
  return result;
}

PerturbationMatrix CoarseEffectiveMatrix(const CoarseLpResult& result) {
  const int k = static_cast<int>(result.grid.cell_of_record.size());
  PerturbationMatrix z;
  z.rows.resize(k);
  std::iota(z.rows.begin(), z.rows.end(), 0);
  z.probs = Matrix(k, result.cells.z.num_cols());
  for (int x = 0; x < k; ++x) {
    const int cell = result.grid.cell_of_record[x];
    for (int c = 0; c < z.num_cols(); ++c) {
      z.probs(x, c) = result.cells.z.probs(cell, c);
    }
  }
  return z;
}

}  // namespace anchormdp
