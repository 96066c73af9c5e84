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

#include "anchormdp/mdp_program.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

namespace anchormdp {
namespace {

constexpr int kMaxRounds = 100000;
constexpr double kInfinity = std::numeric_limits<double>::infinity();
// Entering threshold on the cost of a unit-mass column direction.
constexpr double kPricingTolerance = 1e-10;
// Violations at rounding level are left alone.
constexpr double kRepairFloor = 1e-15;

// Tightest `per_row` pairs of every row, deduplicated and ascending.
std::vector<size_t> SeedPairs(const MdpProgram& p,
                              const std::vector<double>& factor, int per_row) {
  std::vector<std::vector<size_t>> by_row(p.num_rows);
  for (size_t i = 0; i < p.pairs.size(); ++i) {
    by_row[p.pairs[i].a].push_back(i);
    by_row[p.pairs[i].b].push_back(i);
  }
  std::vector<bool> seeded(p.pairs.size(), false);
  for (auto& list : by_row) {
    const size_t take =
        std::min<size_t>(list.size(), static_cast<size_t>(std::max(per_row, 0)));
    std::partial_sort(list.begin(), list.begin() + take, list.end(),
                      [&](size_t x, size_t y) {
                        return factor[x] != factor[y] ? factor[x] < factor[y]
                                                      : x < y;
                      });
    for (size_t t = 0; t < take; ++t) seeded[list[t]] = true;
  }
  std::vector<size_t> out;
  for (size_t i = 0; i < p.pairs.size(); ++i) {
    if (seeded[i]) out.push_back(i);
  }
  return out;
}

// Greedy weighted k-median over the columns, about sqrt(cols) of them.
std::vector<int> InitialColumns(const MdpProgram& p) {
  const int count = std::min(
      p.num_cols, std::max(1, static_cast<int>(std::ceil(std::sqrt(p.num_cols)))));
  std::vector<double> best(p.num_rows, kInfinity);
  std::vector<bool> taken(p.num_cols, false);
  std::vector<int> out;
  for (int t = 0; t < count; ++t) {
    int pick = -1;
    double pick_cost = kInfinity;
    for (int y = 0; y < p.num_cols; ++y) {
      if (taken[y]) continue;
      double total = 0.0;
      for (int r = 0; r < p.num_rows; ++r) {
        total += std::min(best[r], p.weighted_cost(r, y));
      }
      if (total < pick_cost) {
        pick_cost = total;
        pick = y;
      }
    }
    taken[pick] = true;
    out.push_back(pick);
    for (int r = 0; r < p.num_rows; ++r) {
      best[r] = std::min(best[r], p.weighted_cost(r, pick));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// rays(s, r) = exp(-shortest path from s to r) over the ratio-pair graph:
// every row of the table is a direction satisfying all ratio constraints.
Matrix RayTable(const MdpProgram& p, const std::vector<double>& exponent) {
  const int n = p.num_rows;
  Matrix dist(n, n, kInfinity);
  for (int r = 0; r < n; ++r) dist(r, r) = 0.0;
  for (size_t i = 0; i < p.pairs.size(); ++i) {
    const int a = p.pairs[i].a;
    const int b = p.pairs[i].b;
    dist(a, b) = std::min(dist(a, b), exponent[i]);
    dist(b, a) = dist(a, b);
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      const double dik = dist(i, k);
      if (dik == kInfinity) continue;
      for (int j = 0; j < n; ++j) {
        dist(i, j) = std::min(dist(i, j), dik + dist(k, j));
      }
    }
  }
  Matrix rays(n, n);
  for (int s = 0; s < n; ++s) {
    for (int r = 0; r < n; ++r) rays(s, r) = std::exp(-dist(s, r));
  }
  return rays;
}

// Inactive columns with a ray of negative reduced cost, scored per unit mass.
std::vector<std::pair<double, int>> PriceByRays(const MdpProgram& p,
                                                const Matrix& rays,
                                                const std::vector<double>& mu,
                                                const std::vector<bool>& active,
                                                double tolerance) {
  std::vector<std::pair<double, int>> out;
  for (int y = 0; y < p.num_cols; ++y) {
    if (active[y]) continue;
    double best = kInfinity;
    for (int s = 0; s < p.num_rows; ++s) {
      double value = 0.0;
      double mass = 0.0;
      for (int r = 0; r < p.num_rows; ++r) {
        value += (p.weighted_cost(r, y) - mu[r]) * rays(s, r);
        mass += rays(s, r);
      }
      best = std::min(best, value / mass);
    }
    if (best < -tolerance) out.push_back({best, y});
  }
  return out;
}

// Exact pricing: min (W[., y] - mu) . v over unit-mass v satisfying every
// ratio pair, one column at a time on a shared model.
class PricingModel {
 public:
  PricingModel(const MdpProgram& p, const std::vector<double>& factor,
               const std::vector<size_t>& seeds, const SolveOptions& options)
      : p_(p), factor_(factor), seeds_(seeds), options_(options) {}

  bool failed() const { return failed_; }

  std::vector<std::pair<double, int>> Price(const std::vector<double>& mu,
                                            const std::vector<bool>& active,
                                            double tolerance) {
    std::vector<std::pair<double, int>> out;
    Init();
    std::vector<double> g(p_.num_rows);
    for (int y = 0; y < p_.num_cols; ++y) {
      if (active[y]) continue;
      for (int r = 0; r < p_.num_rows; ++r) g[r] = p_.weighted_cost(r, y) - mu[r];
      lp_->SetCosts(g);
      while (true) {
        const LpStatus st = lp_->Solve();
        if (st != LpStatus::kOptimal) {
          failed_ = true;
          return {};
        }
        std::vector<LinearRow> rows = Violated(lp_->values());
        if (rows.empty()) break;
        lp_->AddRows(rows, /*equality=*/false);
      }
      if (lp_->objective() < -tolerance) out.push_back({lp_->objective(), y});
    }
    return out;
  }

 private:
  void Init() {
    if (lp_ != nullptr) return;
    lp_ = std::make_unique<IncrementalLp>(options_);
    std::vector<LinearColumn> columns(p_.num_rows);
    for (int r = 0; r < p_.num_rows; ++r) {
      columns[r] = {0.0, 0.0, kInfinity, {}, {}};
    }
    lp_->AddColumns(columns);
    LinearRow mass;
    for (int r = 0; r < p_.num_rows; ++r) {
      mass.index.push_back(r);
      mass.value.push_back(1.0);
    }
    mass.rhs = 1.0;
    lp_->AddRows({mass}, /*equality=*/true);
    added_.assign(p_.pairs.size() * 2, false);
    std::vector<LinearRow> rows;
    for (size_t i : seeds_) {
      rows.push_back(Row(i, 0));
      rows.push_back(Row(i, 1));
    }
    lp_->AddRows(rows, /*equality=*/false);
  }

  LinearRow Row(size_t i, int dir) {
    added_[i * 2 + dir] = true;
    const int from = dir == 0 ? p_.pairs[i].a : p_.pairs[i].b;
    const int to = dir == 0 ? p_.pairs[i].b : p_.pairs[i].a;
    return {{from, to}, {1.0, -factor_[i]}, 0.0};
  }

  std::vector<LinearRow> Violated(const std::vector<double>& v) {
    const double tol = options_.feasibility_tolerance;
    std::vector<double> worst(p_.num_rows, tol);
    std::vector<int64_t> pick(p_.num_rows, -1);
    for (size_t i = 0; i < p_.pairs.size(); ++i) {
      const int a = p_.pairs[i].a;
      const int b = p_.pairs[i].b;
      for (int dir = 0; dir < 2; ++dir) {
        const int from = dir == 0 ? a : b;
        const int to = dir == 0 ? b : a;
        const double lhs = v[from] - factor_[i] * v[to];
        if (lhs > worst[to] && !added_[i * 2 + dir]) {
          worst[to] = lhs;
          pick[to] = static_cast<int64_t>(i * 2 + dir);
        }
      }
    }
    std::vector<LinearRow> rows;
    for (int64_t k : pick) {
      if (k >= 0) rows.push_back(Row(k / 2, static_cast<int>(k % 2)));
    }
    return rows;
  }

  const MdpProgram& p_;
  const std::vector<double>& factor_;
  const std::vector<size_t>& seeds_;
  SolveOptions options_;
  std::unique_ptr<IncrementalLp> lp_;
  std::vector<bool> added_;
  bool failed_ = false;
};

// Most violated missing ratio row per scaled variable z[to][y], over the
// active columns.
template <typename MakeRow>
std::vector<LinearRow> MostViolated(const MdpProgram& p,
                                    const std::vector<double>& factor,
                                    double tol, const std::vector<double>& x,
                                    const std::vector<int>& var,
                                    const std::vector<bool>& active,
                                    const std::vector<bool>& added,
                                    MakeRow& make_row) {
  const int cols = p.num_cols;
  std::vector<double> worst(static_cast<size_t>(p.num_rows) * cols, tol);
  std::vector<int64_t> pick(worst.size(), -1);
  for (size_t i = 0; i < p.pairs.size(); ++i) {
    const RatioPair& pair = p.pairs[i];
    for (int y = 0; y < cols; ++y) {
      if (!active[y]) continue;
      const double za = x[var[pair.a * cols + y]];
      const double zb = x[var[pair.b * cols + y]];
      for (int dir = 0; dir < 2; ++dir) {
        const double lhs = dir == 0 ? za - factor[i] * zb : zb - factor[i] * za;
        const int to = dir == 0 ? pair.b : pair.a;
        const size_t slot = static_cast<size_t>(to) * cols + y;
        if (lhs > worst[slot] && !added[(i * 2 + dir) * cols + y]) {
          worst[slot] = lhs;
          pick[slot] = static_cast<int64_t>(i * 2 + dir);
        }
      }
    }
  }
  std::vector<LinearRow> rows;
  for (size_t slot = 0; slot < pick.size(); ++slot) {
    if (pick[slot] < 0) continue;
    rows.push_back(make_row(pick[slot] / 2, static_cast<int>(pick[slot] % 2),
                            static_cast<int>(slot % cols)));
  }
  return rows;
}

// Lifts every entry to the ratio closure max_s z[s][y] rays(s, r), which
// meets every pair, and normalizes the rows. The normalization leaves
// violations at rounding level; mixing in the mean row with the smallest
// weight clears them, since identical rows meet every pair and mixing scales
// a violation z_a - f z_b down by the slack q (f - 1) the mean row adds.
// Returns the weight.
double Repair(const MdpProgram& p, const std::vector<double>& factor,
              const Matrix& rays, Matrix& z) {
  const int rows = p.num_rows;
  const int cols = p.num_cols;
  std::vector<double> lifted(rows);
  for (int y = 0; y < cols; ++y) {
    for (int r = 0; r < rows; ++r) {
      double v = z(r, y);
      for (int s = 0; s < rows; ++s) v = std::max(v, z(s, y) * rays(s, r));
      lifted[r] = v;
    }
    for (int r = 0; r < rows; ++r) z(r, y) = lifted[r];
  }
  for (int r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (int y = 0; y < cols; ++y) sum += z(r, y);
    for (int y = 0; y < cols; ++y) z(r, y) /= sum;
  }
  std::vector<double> mean(cols, 0.0);
  for (int r = 0; r < rows; ++r) {
    for (int y = 0; y < cols; ++y) mean[y] += z(r, y) / rows;
  }
  double t = 0.0;
  for (size_t i = 0; i < p.pairs.size(); ++i) {
    const int a = p.pairs[i].a;
    const int b = p.pairs[i].b;
    for (int y = 0; y < cols; ++y) {
      for (int dir = 0; dir < 2; ++dir) {
        const double from = dir == 0 ? z(a, y) : z(b, y);
        const double to = dir == 0 ? z(b, y) : z(a, y);
        const double violation = from - factor[i] * to;
        if (violation <= kRepairFloor) continue;
        const double slack = mean[y] * (factor[i] - 1.0);
        t = std::max(t, slack > 0.0 ? violation / (violation + slack) : 1.0);
      }
    }
  }
  if (t <= 0.0) return 0.0;
  // Rounding slack so that the mixed entries clear the bound.
  t = std::min(1.0, t * (1.0 + 1e-6));
  for (int r = 0; r < rows; ++r) {
    for (int y = 0; y < cols; ++y) z(r, y) = (1.0 - t) * z(r, y) + t * mean[y];
  }
  return t;
}

LinearRow RatioRow(const MdpProgram& p, int from, int to, int y,
                   double factor) {
  return {{MdpVar(p, from, y), MdpVar(p, to, y)}, {1.0, -factor}, 0.0};
}

// Objective and unit row sums only.
LinearProgram BaseProgram(const MdpProgram& p) {
  LinearProgram lp(p.num_rows * p.num_cols);
  for (int r = 0; r < p.num_rows; ++r) {
    LinearRow sum;
    for (int y = 0; y < p.num_cols; ++y) {
      lp.set_objective(MdpVar(p, r, y), p.weighted_cost(r, y));
      sum.index.push_back(MdpVar(p, r, y));
      sum.value.push_back(1.0);
    }
    sum.rhs = 1.0;
    lp.AddEquality(std::move(sum));
  }
  return lp;
}

}  // namespace

LinearProgram ToLinearProgram(const MdpProgram& p, double max_exponent) {
  LinearProgram lp = BaseProgram(p);
  for (const RatioPair& pair : p.pairs) {
    const double f = std::exp(std::min(pair.exponent, max_exponent));
    for (int y = 0; y < p.num_cols; ++y) {
      lp.AddInequality(RatioRow(p, pair.a, pair.b, y, f));
      lp.AddInequality(RatioRow(p, pair.b, pair.a, y, f));
    }
  }
  return lp;
}

double RepairRatios(const MdpProgram& p, Matrix& z, double max_exponent) {
  std::vector<double> exponent(p.pairs.size());
  std::vector<double> factor(p.pairs.size());
  for (size_t i = 0; i < p.pairs.size(); ++i) {
    exponent[i] = std::min(p.pairs[i].exponent, max_exponent);
    factor[i] = std::exp(exponent[i]);
  }
  return Repair(p, factor, RayTable(p, exponent), z);
}

MdpSolveResult SolveMdpProgram(const MdpProgram& p,
                               const MdpSolveOptions& options) {
  const int rows = p.num_rows;
  const int cols = p.num_cols;
  MdpSolveResult result;
  if (rows == 0) {
    result.status = LpStatus::kOptimal;
    result.z = Matrix(0, cols);
    return result;
  }
  if (cols == 0) {
    result.status = LpStatus::kInfeasible;
    return result;
  }
  const size_t num_pairs = p.pairs.size();
  std::vector<double> exponent(num_pairs);
  std::vector<double> factor(num_pairs);
  for (size_t i = 0; i < num_pairs; ++i) {
    exponent[i] = std::min(p.pairs[i].exponent, options.max_exponent);
    factor[i] = std::exp(exponent[i]);
  }
  const double tol = options.lp.feasibility_tolerance;
  const std::vector<size_t> seeds =
      SeedPairs(p, factor, options.initial_pairs_per_row);

  // Restricted master: row sums over the active output columns.
  IncrementalLp master(options.lp);
  master.AddRows(std::vector<LinearRow>(rows, LinearRow{{}, {}, 1.0}),
                 /*equality=*/true);
  std::vector<int> var(static_cast<size_t>(rows) * cols, -1);
  std::vector<bool> active(cols, false);
  std::vector<bool> added(num_pairs * 2 * cols, false);
  auto ratio_row = [&](size_t i, int dir, int y) {
    added[(i * 2 + dir) * cols + y] = true;
    const int from = dir == 0 ? p.pairs[i].a : p.pairs[i].b;
    const int to = dir == 0 ? p.pairs[i].b : p.pairs[i].a;
    return LinearRow{{var[from * cols + y], var[to * cols + y]},
                     {1.0, -factor[i]},
                     0.0};
  };
  auto activate = [&](const std::vector<int>& ys) {
    std::vector<LinearColumn> columns;
    for (int y : ys) {
      for (int r = 0; r < rows; ++r) {
        columns.push_back({p.weighted_cost(r, y), 0.0, 1.0, {r}, {1.0}});
      }
    }
    int next = master.AddColumns(columns);
    for (int y : ys) {
      active[y] = true;
      for (int r = 0; r < rows; ++r) var[r * cols + y] = next++;
    }
    std::vector<LinearRow> seeded;
    for (int y : ys) {
      for (size_t i : seeds) {
        seeded.push_back(ratio_row(i, 0, y));
        seeded.push_back(ratio_row(i, 1, y));
      }
    }
    master.AddRows(seeded, /*equality=*/false);
  };
  activate(InitialColumns(p));

  PricingModel pricing(p, factor, seeds, options.lp);
  const Matrix rays = RayTable(p, exponent);
  const int max_new = std::max(1, (cols + 9) / 10);
  IncrementalLp::Method method = IncrementalLp::Method::kDual;
  while (true) {
    if (++result.rounds > kMaxRounds) {
      result.status = LpStatus::kNumericFailure;
      return result;
    }
    const LpStatus status = master.Solve(method);
    if (status != LpStatus::kOptimal) {
      result.status = status;
      return result;
    }
    const std::vector<double>& x = master.values();
    std::vector<LinearRow> violated =
        MostViolated(p, factor, tol, x, var, active, added, ratio_row);
    if (!violated.empty()) {
      result.generated_rows += static_cast<int>(violated.size());
      master.AddRows(violated, /*equality=*/false);
      method = IncrementalLp::Method::kDual;
      continue;
    }
    // Row sums are the first `rows` rows of the master.
    const std::vector<double> mu(master.row_duals().begin(),
                                 master.row_duals().begin() + rows);
    std::vector<std::pair<double, int>> entering =
        PriceByRays(p, rays, mu, active, kPricingTolerance);
    if (entering.empty()) {
      entering = pricing.Price(mu, active, kPricingTolerance);
      if (pricing.failed()) {
        result.status = LpStatus::kNumericFailure;
        return result;
      }
    }
    if (entering.empty()) break;
    std::sort(entering.begin(), entering.end());
    if (entering.size() > static_cast<size_t>(max_new)) entering.resize(max_new);
    std::vector<int> ys;
    for (const auto& [score, y] : entering) ys.push_back(y);
    activate(ys);
    method = IncrementalLp::Method::kPrimal;
  }

  result.status = LpStatus::kOptimal;
  result.z = Matrix(rows, cols);
  const std::vector<double>& x = master.values();
  for (int r = 0; r < rows; ++r) {
    for (int y = 0; y < cols; ++y) {
      if (active[y]) result.z(r, y) = x[var[r * cols + y]];
    }
  }
  result.repair_weight = Repair(p, factor, rays, result.z);
  for (int r = 0; r < rows; ++r) {
    for (int y = 0; y < cols; ++y) {
      result.objective += p.weighted_cost(r, y) * result.z(r, y);
    }
  }
  return result;
}

}  // namespace anchormdp
