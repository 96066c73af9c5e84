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

#include "anchormdp/anchor_selection.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"

namespace anchormdp {
namespace {

// Accumulates log ratios of records in and out of the dominance set
// {x : sign * (w_n - w_m) > 0}. Returns a value >= 0 for sign = +1 and
// <= 0 for sign = -1.
double DominanceCost(std::span<const double> wn, std::span<const double> wm,
                     int sign) {
  double cost = 0.0;
  for (size_t x = 0; x < wn.size(); ++x) {
    const double diff = wn[x] - wm[x];
    if (sign * diff > 0) {
      cost += std::log(wn[x]) - std::log(wm[x]);
    } else if (diff != 0) {
      cost += std::log1p(-wn[x]) - std::log1p(-wm[x]);
    }
  }
  return cost;
}

}  // namespace

absl::StatusOr<DecayFamily> ParseDecayFamily(absl::string_view name) {
  if (name == "exp" || name == "exponential") return DecayFamily::kExponential;
  if (name == "power" || name == "power-law") return DecayFamily::kPowerLaw;
  if (name == "logistic") return DecayFamily::kLogistic;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown policy family '", name, "'"));
}

absl::string_view DecayFamilyName(DecayFamily family) {
  switch (family) {
    case DecayFamily::kExponential:
      return "exp";
    case DecayFamily::kPowerLaw:
      return "power";
    case DecayFamily::kLogistic:
      return "logistic";
  }
  return "unknown";
}

absl::Status AnchorPolicy::Validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("alpha must lie in (0, 1), got ", alpha));
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    return absl::InvalidArgumentError(
        absl::StrCat("lambda must be positive, got ", lambda));
  }
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    return absl::InvalidArgumentError(
        absl::StrCat("gamma must be positive, got ", gamma));
  }
  if (!(DecayValue(*this, gamma) > 0.0)) {
    return absl::InvalidArgumentError(
        "selection probability underflows to 0 at gamma");
  }
  return absl::OkStatus();
}

AnchorPolicy DefaultPolicy(const SecretDomain& domain, DecayFamily family) {
  AnchorPolicy policy;
  policy.family = family;
  policy.gamma = domain.MaxDistance() / 50.0;
  return policy;
}

double DecayValue(const AnchorPolicy& policy, double d) {
  switch (policy.family) {
    case DecayFamily::kExponential:
      return policy.alpha * std::exp(-policy.lambda * d);
    case DecayFamily::kPowerLaw:
      return policy.alpha / (1.0 + std::pow(d, policy.lambda));
    case DecayFamily::kLogistic:
      return 2.0 * policy.alpha / (1.0 + std::exp(policy.lambda * d));
  }
  return 0.0;
}

double SelectionProb(const AnchorPolicy& policy, double d) {
  return DecayValue(policy, std::min(d, policy.gamma));
}

Matrix SelectionMatrix(const AnchorPolicy& policy,
                       const SecretDomain& domain) {
  const int k = domain.size();
  Matrix w(k, k);
  for (int n = 0; n < k; ++n) {
    for (int x = 0; x < k; ++x) w(n, x) = SelectionProb(policy, domain.distance(n, x));
  }
  return w;
}

AnchorSet SampleAnchorSet(const Matrix& weights, int owner, Rng& rng) {
  AnchorSet set;
  set.owner = owner;
  std::span<const double> w = weights.row(owner);
  while (true) {
    set.anchors.clear();
    for (int x = 0; x < static_cast<int>(w.size()); ++x) {
      if (rng.Bernoulli(w[x])) set.anchors.push_back(x);
    }
    if (!set.anchors.empty()) return set;
    ++set.redraws;
  }
}

AnchorSet SampleAnchorSet(const AnchorPolicy& policy,
                          const SecretDomain& domain, int owner, Rng& rng) {
  Matrix w(1, domain.size());
  for (int x = 0; x < domain.size(); ++x) {
    w(0, x) = SelectionProb(policy, domain.distance(owner, x));
  }
  AnchorSet set = SampleAnchorSet(w, 0, rng);
  set.owner = owner;
  return set;
}

double SetProbability(std::span<const double> w, std::span<const int> subset) {
  double p = 1.0;
  size_t next = 0;
  for (int x = 0; x < static_cast<int>(w.size()); ++x) {
    if (next < subset.size() && subset[next] == x) {
      p *= w[x];
      ++next;
    } else {
      p *= 1.0 - w[x];
    }
  }
  return p;
}

double SetLogRatio(std::span<const double> wn, std::span<const double> wm,
                   std::span<const bool> in_set) {
  double cost = 0.0;
  for (size_t x = 0; x < wn.size(); ++x) {
    if (in_set[x]) {
      cost += std::log(wn[x]) - std::log(wm[x]);
    } else {
      cost += std::log1p(-wn[x]) - std::log1p(-wm[x]);
    }
  }
  return cost;
}

double EpsilonBar(const Matrix& weights, const SecretDomain& domain, int n,
                  int m) {
  std::span<const double> wn = weights.row(n);
  std::span<const double> wm = weights.row(m);
  const double upper = DominanceCost(wn, wm, +1);
  const double lower = DominanceCost(wn, wm, -1);
  return std::max(upper, -lower) / domain.distance(n, m);
}

double EpsilonBar(const SecretDomain& domain, const AnchorPolicy& policy,
                  int n, int m) {
  Matrix w(2, domain.size());
  for (int x = 0; x < domain.size(); ++x) {
    w(0, x) = SelectionProb(policy, domain.distance(n, x));
    w(1, x) = SelectionProb(policy, domain.distance(m, x));
  }
  const double upper = DominanceCost(w.row(0), w.row(1), +1);
  const double lower = DominanceCost(w.row(0), w.row(1), -1);
  return std::max(upper, -lower) / domain.distance(n, m);
}

Matrix EpsilonBarTable(const Matrix& weights, const SecretDomain& domain) {
  const int k = domain.size();
  Matrix table(k, k);
  for (int n = 0; n < k; ++n) {
    for (int m = n + 1; m < k; ++m) {
      table(n, m) = table(m, n) = EpsilonBar(weights, domain, n, m);
    }
  }
  return table;
}

std::string FormatAnchorSets(std::span<const AnchorSet> sets) {
  std::string out;
  for (const AnchorSet& s : sets) {
    absl::StrAppend(&out, s.owner, ":");
    for (int a : s.anchors) absl::StrAppend(&out, " ", a);
    out += '\n';
  }
  return out;
}

absl::StatusOr<std::vector<AnchorSet>> ParseAnchorSets(absl::string_view text) {
  std::vector<AnchorSet> sets;
  int line_no = 0;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    ++line_no;
    line = absl::StripAsciiWhitespace(line);
    if (line.empty()) continue;
    std::vector<absl::string_view> parts = absl::StrSplit(line, ':');
    if (parts.size() != 2) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": expected 'owner: anchors'"));
    }
    AnchorSet set;
    if (!absl::SimpleAtoi(absl::StripAsciiWhitespace(parts[0]), &set.owner)) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": bad owner index"));
    }
    for (absl::string_view tok :
         absl::StrSplit(parts[1], ' ', absl::SkipEmpty())) {
      int a = 0;
      if (!absl::SimpleAtoi(tok, &a)) {
        return absl::InvalidArgumentError(
            absl::StrCat("line ", line_no, ": bad anchor index '", tok, "'"));
      }
      set.anchors.push_back(a);
    }
    if (set.anchors.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": empty anchor set"));
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

}  // namespace anchormdp
