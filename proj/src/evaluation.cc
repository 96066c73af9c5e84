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

#include "anchormdp/evaluation.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace anchormdp {

double ExpectedUtilityLoss(const PerturbationMatrix& z,
                           std::span<const double> priors,
                           const CostMatrix& cost) {
  double loss = 0.0;
  for (int r = 0; r < z.num_rows(); ++r) {
    const int x = z.rows[r];
    double row = 0.0;
    for (int c = 0; c < z.num_cols(); ++c) row += cost(x, c) * z.probs(r, c);
    loss += priors[x] * row;
  }
  return loss;
}

double UserUtilityLoss(const PandaRun& run, const CostMatrix& cost) {
  if (run.users.empty()) return 0.0;
  double total = 0.0;
  for (size_t n = 0; n < run.users.size(); ++n) {
    std::span<const double> row = EffectiveRow(run, static_cast<int>(n));
    for (size_t c = 0; c < row.size(); ++c) {
      total += cost(run.users[n], static_cast<int>(c)) * row[c];
    }
  }
  return total / run.users.size();
}

bool ViolatesMdp(std::span<const double> zn, std::span<const double> zm,
                 double epsilon, double d) {
  const double f = std::exp(epsilon * d);
  for (size_t y = 0; y < zn.size(); ++y) {
    if (zn[y] > f * zm[y] + kViolationTolerance) return true;
    if (zm[y] > f * zn[y] + kViolationTolerance) return true;
  }
  return false;
}

ViolationCount CountViolations(const SecretDomain& domain,
                               const PerturbationMatrix& z,
                               std::span<const int> users, double epsilon) {
  ViolationCount count;
  for (size_t n = 0; n < users.size(); ++n) {
    for (size_t m = n + 1; m < users.size(); ++m) {
      if (users[n] == users[m]) continue;
      const int rn = z.RowOf(users[n]);
      const int rm = z.RowOf(users[m]);
      ++count.samples;
      if (ViolatesMdp(z.probs.row(rn), z.probs.row(rm), epsilon,
                      domain.distance(users[n], users[m]))) {
        ++count.violations;
      }
    }
  }
  return count;
}

ViolationCount CountViolations(const SecretDomain& domain,
                               const PandaRun& run, double epsilon) {
  ViolationCount count;
  const std::vector<int>& users = run.users;
  for (size_t n = 0; n < users.size(); ++n) {
    for (size_t m = n + 1; m < users.size(); ++m) {
      if (users[n] == users[m]) continue;
      ++count.samples;
      if (ViolatesMdp(EffectiveRow(run, static_cast<int>(n)),
                      EffectiveRow(run, static_cast<int>(m)), epsilon,
                      domain.distance(users[n], users[m]))) {
        ++count.violations;
      }
    }
  }
  return count;
}

double WorstCaseRatio(const SecretDomain& domain, const PerturbationMatrix& z) {
  double worst = 0.0;
  for (int a = 0; a < z.num_rows(); ++a) {
    for (int b = 0; b < z.num_rows(); ++b) {
      if (a == b) continue;
      const double d = domain.distance(z.rows[a], z.rows[b]);
      for (int c = 0; c < z.num_cols(); ++c) {
        const double za = z.probs(a, c);
        const double zb = z.probs(b, c);
        if (za <= 0.0) continue;
        if (zb <= 0.0) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, (std::log(za) - std::log(zb)) / d);
      }
    }
  }
  return worst;
}

BudgetBreakdown BudgetAllocation(const MarginContext& ctx,
                                 const SafetyMarginPlan& plan,
                                 std::span<const std::pair<int, int>> pairs) {
  BudgetBreakdown out;
  int counted = 0;
  for (const auto& [x, xp] : pairs) {
    BudgetShare s;
    s.x = x;
    s.xp = xp;
    const double total = ctx.epsilon * ctx.domain->distance(x, xp);
    const MarginEstimate* e = plan.Find(x, xp);
    const double xi_hat = e != nullptr ? e->xi_hat : 0.0;
    s.phase1 = ctx.eps_bar(x, xp) / ctx.epsilon;
    s.margin = xi_hat / total;
    s.phase2 = 1.0 - s.phase1 - s.margin;
    s.exhausted = s.phase2 < 0.0;
    out.pairs.push_back(s);
    if (s.exhausted) {
      ++out.num_exhausted;
      continue;
    }
    out.mean_phase1 += s.phase1;
    out.mean_margin += s.margin;
    out.mean_phase2 += s.phase2;
    ++counted;
  }
  if (counted > 0) {
    out.mean_phase1 /= counted;
    out.mean_margin /= counted;
    out.mean_phase2 /= counted;
  }
  return out;
}

double ClusteringCoefficient(std::span<const int> nodes,
                             const Matrix& distances, double threshold) {
  const int n = static_cast<int>(nodes.size());
  if (n == 0) return 0.0;
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      adj[i][j] = i != j && distances(nodes[i], nodes[j]) < threshold;
    }
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    std::vector<int> nbr;
    for (int j = 0; j < n; ++j) {
      if (adj[i][j]) nbr.push_back(j);
    }
    const int64_t k = static_cast<int64_t>(nbr.size());
    if (k < 2) continue;
    int64_t m = 0;
    for (size_t a = 0; a < nbr.size(); ++a) {
      for (size_t b = a + 1; b < nbr.size(); ++b) {
        if (adj[nbr[a]][nbr[b]]) ++m;
      }
    }
    total += 2.0 * m / (k * (k - 1));
  }
  return total / n;
}

LpSizeStats LpSize(const MdpProgram& program, int domain_size) {
  LpSizeStats s;
  s.variables = program.num_variables();
  s.inequalities = program.num_inequalities();
  s.equalities = program.num_equalities();
  s.anchor_fraction =
      domain_size > 0 ? static_cast<double>(program.num_rows) / domain_size : 0;
  return s;
}

}  // namespace anchormdp
