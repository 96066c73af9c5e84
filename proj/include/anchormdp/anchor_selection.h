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

#ifndef ANCHORMDP_ANCHOR_SELECTION_H_
#define ANCHORMDP_ANCHOR_SELECTION_H_

#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "anchormdp/domain.h"
#include "anchormdp/matrix.h"
#include "anchormdp/random.h"

namespace anchormdp {

enum class DecayFamily { kExponential, kPowerLaw, kLogistic };

absl::StatusOr<DecayFamily> ParseDecayFamily(absl::string_view name);
absl::string_view DecayFamilyName(DecayFamily family);

// Distance-decaying probability with which a user selects each record as an
// anchor. Beyond `gamma` the probability stays at its value at `gamma`.
struct AnchorPolicy {
  DecayFamily family = DecayFamily::kExponential;
  double alpha = 0.95;
  // km^-1 for the exponential and logistic families; a unitless exponent for
  // the power law.
  double lambda = 0.5;
  double gamma = 1.0;  // km

  absl::Status Validate() const;
};

// alpha = 0.95, lambda = 0.5 and gamma = max pairwise distance / 50.
AnchorPolicy DefaultPolicy(const SecretDomain& domain,
                           DecayFamily family = DecayFamily::kExponential);

// Unclipped decay function of the policy family.
double DecayValue(const AnchorPolicy& policy, double d);

// w(d): DecayValue(min(d, gamma)).
double SelectionProb(const AnchorPolicy& policy, double d);

// W[n][x] = SelectionProb(d(n, x)).
Matrix SelectionMatrix(const AnchorPolicy& policy, const SecretDomain& domain);

struct AnchorSet {
  int owner = -1;
  std::vector<int> anchors;  // ascending
  int redraws = 0;           // empty draws discarded before this one
};

// Independent Bernoulli draw of every record with probability W[owner][x].
// An empty draw is discarded and the whole set redrawn.
AnchorSet SampleAnchorSet(const Matrix& weights, int owner, Rng& rng);
AnchorSet SampleAnchorSet(const AnchorPolicy& policy,
                          const SecretDomain& domain, int owner, Rng& rng);

// Probability of `subset` (ascending indices) under the product distribution
// with inclusion probabilities `w`, without conditioning on nonemptiness.
double SetProbability(std::span<const double> w, std::span<const int> subset);

// log(Pr[A | n] / Pr[A | m]) for rows `wn`, `wm` of the selection matrix;
// `in_set[x]` marks membership.
double SetLogRatio(std::span<const double> wn, std::span<const double> wm,
                   std::span<const bool> in_set);

// Worst-case per-km privacy cost of revealing the anchor set, between records
// n != m: max over the two weight-dominance sets of |log ratio| / d(n, m).
double EpsilonBar(const Matrix& weights, const SecretDomain& domain, int n,
                  int m);
double EpsilonBar(const SecretDomain& domain, const AnchorPolicy& policy,
                  int n, int m);

// Symmetric K x K table of EpsilonBar with a zero diagonal.
Matrix EpsilonBarTable(const Matrix& weights, const SecretDomain& domain);

// One line per user: "owner: a0 a1 ...".
std::string FormatAnchorSets(std::span<const AnchorSet> sets);
absl::StatusOr<std::vector<AnchorSet>> ParseAnchorSets(absl::string_view text);

}  // namespace anchormdp

#endif  // ANCHORMDP_ANCHOR_SELECTION_H_
