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

#ifndef ANCHORMDP_SAFETY_MARGIN_H_
#define ANCHORMDP_SAFETY_MARGIN_H_

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "anchormdp/anchor_selection.h"
#include "anchormdp/domain.h"
#include "anchormdp/matrix.h"

namespace anchormdp {

// v[q][x]: probability that x is the nearest selected anchor of a user at q.
// "Nearer" is by (distance to q, index).
Matrix SurrogateProbTable(const Matrix& weights, const SecretDomain& domain);
double SurrogateProb(const AnchorPolicy& policy, const SecretDomain& domain,
                     int q, int surrogate);

// Everything the margin computations share for one (domain, policy, epsilon).
struct MarginContext {
  MarginContext(const SecretDomain& domain, const AnchorPolicy& policy,
                double epsilon);

  // (epsilon - eps_bar(x, x')) * d(x, x'): the exponent available to
  // Phase II between x and x'. Zero when x == x'.
  double Budget(int x, int xp) const {
    return (epsilon - eps_bar(x, xp)) * domain->distance(x, xp);
  }
  // Whether (x, x') can ever belong to the guaranteed set for true pair
  // (n, m): both surrogates within gamma and Phase I not exhausting eps.
  bool Eligible(int n, int m, int x, int xp) const {
    return domain->distance(n, x) < gamma && domain->distance(m, xp) < gamma &&
           eps_bar(x, xp) < epsilon;
  }

  const SecretDomain* domain;
  AnchorPolicy policy;
  double epsilon;
  double gamma;
  Matrix weights;   // selection probabilities W[n][x]
  Matrix eps_bar;   // EpsilonBarTable
  Matrix surrogate; // SurrogateProbTable
};

struct Candidate {
  int x = 0;
  int xp = 0;
  double delta = 0.0;  // Budget(x, x') - Budget(n, m)
  bool eligible = false;
};

// All K^2 candidate margins for the true pair (n, m), in ascending order of
// `delta` (ties by (x, x')).
struct CandidateMarginSet {
  int n = 0;
  int m = 0;
  std::vector<Candidate> candidates;
};

CandidateMarginSet PrecomputeCandidates(const MarginContext& ctx, int n, int m);

// h(xi) by direct summation over every pair (x, x') with delta <= xi.
double SuccessProb(const MarginContext& ctx, int n, int m, double xi);

struct XiResult {
  double xi = 0.0;
  double h = 0.0;  // h(xi)
  bool feasible = false;
};

// Smallest candidate margin whose h reaches 1 - delta, by incremental linear
// scan. If none does, returns the largest candidate with feasible = false.
XiResult ExactMarginXi(const CandidateMarginSet& candidates,
                       const Matrix& surrogate_probs, double delta);

// h evaluated along the sweep: entry l is h(candidates[l].delta) as produced
// by the incremental update (the value after the whole tie group).
std::vector<double> IncrementalSweep(const CandidateMarginSet& candidates,
                                     const Matrix& surrogate_probs);

// Caches the eligible part of each true pair's sweep so that repeated
// margin queries with different tolerances are cheap. Produces exactly the
// values of ExactMarginXi.
class MarginOracle {
 public:
  explicit MarginOracle(const MarginContext& ctx) : ctx_(ctx) {}

  XiResult Xi(int n, int m, double delta);

 private:
  struct Sweep {
    std::vector<double> deltas;  // tie-group end values, ascending
    std::vector<double> h;       // cumulative h at each group end
    double max_delta = 0.0;      // largest candidate overall
  };
  const Sweep& GetSweep(int n, int m);

  const MarginContext& ctx_;
  std::unordered_map<int64_t, Sweep> cache_;
  double max_budget_ = 0.0;
  bool have_max_budget_ = false;
};

// Gamma nearest records to x by (distance, index), x first.
std::vector<int> NearestRecords(const SecretDomain& domain, int x, int count);

struct MarginEstimate {
  int x = 0;
  int xp = 0;
  double xi_hat = 0.0;
  double delta_adj = 0.0;
  double containment = 0.0;  // q
  int neighborhood = 0;      // |S_x| = |S_x'|
  bool feasible = true;      // every exact margin in the supremum feasible
};

// Server-side margin for anchor pair (x, x') from the Gamma-nearest
// neighborhoods. Fails with "Gamma too small" when the containment
// probability does not exceed 1 - delta. Pairs of identical true records are
// skipped in the supremum; the result is clamped to be nonnegative.
absl::StatusOr<MarginEstimate> EstimatedMargin(const MarginContext& ctx,
                                               MarginOracle& oracle, int x,
                                               int xp, int gamma_nn,
                                               double delta);
absl::StatusOr<MarginEstimate> EstimatedMargin(const MarginContext& ctx, int x,
                                               int xp, int gamma_nn,
                                               double delta);

// Containment probability of S_x under the posterior of the true record
// given that x was selected.
double ContainmentProb(const MarginContext& ctx, int x,
                       std::span<const int> neighborhood);

// Margins for a set of anchor pairs, keyed by unordered pair.
class SafetyMarginPlan {
 public:
  void Add(const MarginEstimate& e);
  const MarginEstimate* Find(int x, int xp) const;
  const std::vector<MarginEstimate>& entries() const { return entries_; }

  // Columns: x,xp,xi_hat,delta_adj,containment,neighborhood,feasible.
  std::string ToCsv() const;

 private:
  static int64_t Key(int x, int xp) {
    if (x > xp) std::swap(x, xp);
    return (static_cast<int64_t>(x) << 32) | static_cast<uint32_t>(xp);
  }
  std::vector<MarginEstimate> entries_;
  std::unordered_map<int64_t, size_t> index_;
};

absl::StatusOr<SafetyMarginPlan> BuildMarginPlan(
    const MarginContext& ctx, std::span<const std::pair<int, int>> pairs,
    int gamma_nn, double delta);

}  // namespace anchormdp

#endif  // ANCHORMDP_SAFETY_MARGIN_H_
