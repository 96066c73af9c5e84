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
#include <tuple>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace anchormdp {
namespace {

bool CandidateLess(const Candidate& a, const Candidate& b) {
  return std::tie(a.delta, a.x, a.xp) < std::tie(b.delta, b.x, b.xp);
}

}  // namespace

Matrix SurrogateProbTable(const Matrix& weights, const SecretDomain& domain) {
  const int k = domain.size();
  Matrix v(k, k);
  for (int q = 0; q < k; ++q) {
    double none_closer = 1.0;
    for (int x : domain.NeighborsByDistance(q)) {
      v(q, x) = weights(q, x) * none_closer;
      none_closer *= 1.0 - weights(q, x);
    }
  }
  return v;
}

double SurrogateProb(const AnchorPolicy& policy, const SecretDomain& domain,
                     int q, int surrogate) {
  double v = SelectionProb(policy, domain.distance(q, surrogate));
  const double ds = domain.distance(q, surrogate);
  for (int x = 0; x < domain.size(); ++x) {
    const double dx = domain.distance(q, x);
    if (dx < ds || (dx == ds && x < surrogate)) {
      v *= 1.0 - SelectionProb(policy, dx);
    }
  }
  return v;
}

MarginContext::MarginContext(const SecretDomain& domain,
                             const AnchorPolicy& policy, double epsilon)
    : domain(&domain),
      policy(policy),
      epsilon(epsilon),
      gamma(policy.gamma),
      weights(SelectionMatrix(policy, domain)),
      eps_bar(EpsilonBarTable(weights, domain)),
      surrogate(SurrogateProbTable(weights, domain)) {}

CandidateMarginSet PrecomputeCandidates(const MarginContext& ctx, int n,
                                        int m) {
  const int k = ctx.domain->size();
  CandidateMarginSet set;
  set.n = n;
  set.m = m;
  set.candidates.reserve(static_cast<size_t>(k) * k);
  const double base = ctx.Budget(n, m);
  for (int x = 0; x < k; ++x) {
    for (int xp = 0; xp < k; ++xp) {
      set.candidates.push_back(
          {x, xp, ctx.Budget(x, xp) - base, ctx.Eligible(n, m, x, xp)});
    }
  }
  std::sort(set.candidates.begin(), set.candidates.end(), CandidateLess);
  return set;
}

double SuccessProb(const MarginContext& ctx, int n, int m, double xi) {
  const int k = ctx.domain->size();
  const double base = ctx.Budget(n, m);
  double h = 0.0;
  for (int x = 0; x < k; ++x) {
    for (int xp = 0; xp < k; ++xp) {
      if (ctx.Eligible(n, m, x, xp) && ctx.Budget(x, xp) - base <= xi) {
        h += ctx.surrogate(n, x) * ctx.surrogate(m, xp);
      }
    }
  }
  return h;
}

std::vector<double> IncrementalSweep(const CandidateMarginSet& set,
                                     const Matrix& surrogate_probs) {
  const auto& c = set.candidates;
  std::vector<double> out(c.size());
  double h = 0.0;
  size_t group_start = 0;
  for (size_t l = 0; l < c.size(); ++l) {
    if (c[l].eligible) {
      h += surrogate_probs(set.n, c[l].x) * surrogate_probs(set.m, c[l].xp);
    }
    if (l + 1 == c.size() || c[l + 1].delta != c[l].delta) {
      std::fill(out.begin() + group_start, out.begin() + l + 1, h);
      group_start = l + 1;
    }
  }
  return out;
}

XiResult ExactMarginXi(const CandidateMarginSet& set,
                       const Matrix& surrogate_probs, double delta) {
  const auto& c = set.candidates;
  const double target = 1.0 - delta;
  XiResult result;
  double h = 0.0;
  for (size_t l = 0; l < c.size(); ++l) {
    if (c[l].eligible) {
      h += surrogate_probs(set.n, c[l].x) * surrogate_probs(set.m, c[l].xp);
    }
    if (l + 1 < c.size() && c[l + 1].delta == c[l].delta) continue;
    if (h >= target) return {c[l].delta, h, true};
  }
  if (!c.empty()) result.xi = c.back().delta;
  result.h = h;
  return result;
}

const MarginOracle::Sweep& MarginOracle::GetSweep(int n, int m) {
  const int64_t key = static_cast<int64_t>(n) * ctx_.domain->size() + m;
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;

  const SecretDomain& domain = *ctx_.domain;
  const int k = domain.size();
  std::vector<int> near_n;
  std::vector<int> near_m;
  for (int x = 0; x < k; ++x) {
    if (domain.distance(n, x) < ctx_.gamma) near_n.push_back(x);
    if (domain.distance(m, x) < ctx_.gamma) near_m.push_back(x);
  }
  const double base = ctx_.Budget(n, m);
  std::vector<Candidate> eligible;
  eligible.reserve(near_n.size() * near_m.size());
  for (int x : near_n) {
    for (int xp : near_m) {
      if (ctx_.eps_bar(x, xp) < ctx_.epsilon) {
        eligible.push_back({x, xp, ctx_.Budget(x, xp) - base, true});
      }
    }
  }
  std::sort(eligible.begin(), eligible.end(), CandidateLess);

  if (!have_max_budget_) {
    max_budget_ = ctx_.Budget(0, 0);
    for (int x = 0; x < k; ++x) {
      for (int xp = 0; xp < k; ++xp) {
        max_budget_ = std::max(max_budget_, ctx_.Budget(x, xp));
      }
    }
    have_max_budget_ = true;
  }
  Sweep sweep;
  sweep.max_delta = max_budget_ - base;
  double h = 0.0;
  for (size_t l = 0; l < eligible.size(); ++l) {
    h += ctx_.surrogate(n, eligible[l].x) * ctx_.surrogate(m, eligible[l].xp);
    if (l + 1 < eligible.size() && eligible[l + 1].delta == eligible[l].delta) {
      continue;
    }
    sweep.deltas.push_back(eligible[l].delta);
    sweep.h.push_back(h);
  }
  return cache_.emplace(key, std::move(sweep)).first->second;
}

XiResult MarginOracle::Xi(int n, int m, double delta) {
  const Sweep& sweep = GetSweep(n, m);
  const double target = 1.0 - delta;
  // h is nondecreasing along the sweep, so the first crossing is found by
  // bisection over the cached cumulative values.
  auto it = std::lower_bound(sweep.h.begin(), sweep.h.end(), target);
  if (it == sweep.h.end()) {
    return {sweep.max_delta, sweep.h.empty() ? 0.0 : sweep.h.back(), false};
  }
  const size_t l = it - sweep.h.begin();
  return {sweep.deltas[l], sweep.h[l], true};
}

std::vector<int> NearestRecords(const SecretDomain& domain, int x, int count) {
  std::vector<int> order = domain.NeighborsByDistance(x);
  order.resize(std::min<size_t>(order.size(), std::max(count, 0)));
  return order;
}

double ContainmentProb(const MarginContext& ctx, int x,
                       std::span<const int> neighborhood) {
  const SecretDomain& domain = *ctx.domain;
  double total = 0.0;
  for (int u = 0; u < domain.size(); ++u) {
    total += domain.prior(u) * ctx.weights(u, x);
  }
  // Index order, so a neighborhood covering the domain gives exactly 1.
  std::vector<int> members(neighborhood.begin(), neighborhood.end());
  std::sort(members.begin(), members.end());
  double inside = 0.0;
  for (int u : members) inside += domain.prior(u) * ctx.weights(u, x);
  return total > 0.0 ? std::min(1.0, inside / total) : 0.0;
}

absl::StatusOr<MarginEstimate> EstimatedMargin(const MarginContext& ctx,
                                               MarginOracle& oracle, int x,
                                               int xp, int gamma_nn,
                                               double delta) {
  if (gamma_nn < 1) {
    return absl::InvalidArgumentError("Gamma must be at least 1");
  }
  const std::vector<int> sx = NearestRecords(*ctx.domain, x, gamma_nn);
  const std::vector<int> sxp = NearestRecords(*ctx.domain, xp, gamma_nn);
  MarginEstimate e;
  e.x = x;
  e.xp = xp;
  e.neighborhood = static_cast<int>(sx.size());
  e.containment = ContainmentProb(ctx, x, sx) * ContainmentProb(ctx, xp, sxp);
  if (!(e.containment > 1.0 - delta)) {
    return absl::FailedPreconditionError(absl::StrFormat(
        "Gamma too small: containment probability %.17g <= 1 - delta for "
        "anchor pair (%d, %d) with Gamma = %d",
        e.containment, x, xp, gamma_nn));
  }
  e.delta_adj = std::clamp(1.0 - (1.0 - delta) / e.containment, 0.0, 1.0);
  double sup = 0.0;
  for (int a : sx) {
    for (int b : sxp) {
      if (a == b) continue;
      const XiResult xi = oracle.Xi(a, b, e.delta_adj);
      if (!xi.feasible) e.feasible = false;
      sup = std::max(sup, xi.xi);
    }
  }
  e.xi_hat = sup;
  return e;
}

absl::StatusOr<MarginEstimate> EstimatedMargin(const MarginContext& ctx, int x,
                                               int xp, int gamma_nn,
                                               double delta) {
  MarginOracle oracle(ctx);
  return EstimatedMargin(ctx, oracle, x, xp, gamma_nn, delta);
}

void SafetyMarginPlan::Add(const MarginEstimate& e) {
  const int64_t key = Key(e.x, e.xp);
  auto it = index_.find(key);
  if (it != index_.end()) {
    entries_[it->second] = e;
    return;
  }
  index_.emplace(key, entries_.size());
  entries_.push_back(e);
}

const MarginEstimate* SafetyMarginPlan::Find(int x, int xp) const {
  auto it = index_.find(Key(x, xp));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::string SafetyMarginPlan::ToCsv() const {
  std::string out =
      "x,xp,xi_hat,delta_adj,containment,neighborhood,feasible\n";
  for (const MarginEstimate& e : entries_) {
    absl::StrAppend(&out,
                    absl::StrFormat("%d,%d,%.17g,%.17g,%.17g,%d,%d\n", e.x,
                                    e.xp, e.xi_hat, e.delta_adj, e.containment,
                                    e.neighborhood, e.feasible ? 1 : 0));
  }
  return out;
}

absl::StatusOr<SafetyMarginPlan> BuildMarginPlan(
    const MarginContext& ctx, std::span<const std::pair<int, int>> pairs,
    int gamma_nn, double delta) {
  MarginOracle oracle(ctx);
  SafetyMarginPlan plan;
  for (const auto& [x, xp] : pairs) {
    if (plan.Find(x, xp) != nullptr) continue;
    absl::StatusOr<MarginEstimate> e =
        EstimatedMargin(ctx, oracle, x, xp, gamma_nn, delta);
    if (!e.ok()) return e.status();
    plan.Add(*e);
  }
  return plan;
}

}  // namespace anchormdp
