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

#include "anchormdp/anpo.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace anchormdp {
namespace {

constexpr int kMaxReportedPairs = 5;

AnpoProblem AnchorSkeleton(const SecretDomain& domain,
                           std::span<const AnchorSet> sets,
                           const CostMatrix& cost) {
  AnpoProblem problem;
  problem.anchors = AnchorUnion(sets);
  problem.row_of.assign(domain.size(), -1);
  for (size_t r = 0; r < problem.anchors.size(); ++r) {
    problem.row_of[problem.anchors[r]] = static_cast<int>(r);
  }
  MdpProgram& p = problem.program;
  p.num_rows = static_cast<int>(problem.anchors.size());
  p.num_cols = domain.num_outputs();
  p.weighted_cost = Matrix(p.num_rows, p.num_cols);
  for (int r = 0; r < p.num_rows; ++r) {
    const int x = problem.anchors[r];
    for (int c = 0; c < p.num_cols; ++c) {
      p.weighted_cost(r, c) = domain.prior(x) * cost(x, c);
    }
  }
  return problem;
}

}  // namespace

std::vector<int> AnchorUnion(std::span<const AnchorSet> sets) {
  std::vector<int> all;
  for (const AnchorSet& s : sets) {
    all.insert(all.end(), s.anchors.begin(), s.anchors.end());
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

std::vector<std::pair<int, int>> AnchorPairs(std::span<const AnchorSet> sets,
                                             bool same_user_pairs) {
  const std::vector<int> anchors = AnchorUnion(sets);
  if (anchors.empty()) return {};
  const int span = anchors.back() + 1;
  std::vector<bool> mark(static_cast<size_t>(span) * span, false);
  for (size_t n = 0; n < sets.size(); ++n) {
    for (size_t m = same_user_pairs ? n : n + 1; m < sets.size(); ++m) {
      for (int x : sets[n].anchors) {
        for (int xp : sets[m].anchors) {
          if (x == xp) continue;
          const int lo = std::min(x, xp);
          const int hi = std::max(x, xp);
          mark[static_cast<size_t>(lo) * span + hi] = true;
        }
      }
    }
  }
  std::vector<std::pair<int, int>> pairs;
  for (int lo : anchors) {
    for (int hi : anchors) {
      if (lo < hi && mark[static_cast<size_t>(lo) * span + hi]) {
        pairs.emplace_back(lo, hi);
      }
    }
  }
  return pairs;
}

absl::StatusOr<AnpoProblem> BuildAnpo(const SecretDomain& domain,
                                      std::span<const AnchorSet> sets,
                                      double epsilon, const Matrix& eps_bar,
                                      const SafetyMarginPlan& plan,
                                      const CostMatrix& cost,
                                      const AnpoOptions& options) {
  AnpoProblem problem = AnchorSkeleton(domain, sets, cost);
  std::vector<std::string> exhausted;
  int num_exhausted = 0;
  for (const auto& [x, xp] : AnchorPairs(sets, options.same_user_pairs)) {
    const MarginEstimate* margin = plan.Find(x, xp);
    if (margin == nullptr) {
      return absl::FailedPreconditionError(
          absl::StrCat("no safety margin for anchor pair (", x, ", ", xp, ")"));
    }
    if (!margin->feasible) {
      return absl::FailedPreconditionError(absl::StrFormat(
          "success probability 1 - delta unreachable for anchor pair (%d, %d)",
          x, xp));
    }
    const double exponent =
        (epsilon - eps_bar(x, xp)) * domain.distance(x, xp) - margin->xi_hat;
    if (!(exponent > 0.0)) {
      if (num_exhausted++ < kMaxReportedPairs) {
        exhausted.push_back(absl::StrFormat(
            "(%d, %d, eps_bar=%.6g, xi_hat=%.6g, d=%.6g)", x, xp,
            eps_bar(x, xp), margin->xi_hat, domain.distance(x, xp)));
      }
      continue;
    }
    problem.program.pairs.push_back(
        {problem.row_of[x], problem.row_of[xp], exponent});
  }
  if (num_exhausted > 0) {
    std::string list;
    for (const std::string& s : exhausted) absl::StrAppend(&list, " ", s);
    return absl::FailedPreconditionError(
        absl::StrCat("privacy budget exhausted for ", num_exhausted,
                     " anchor pair(s):", list));
  }
  return problem;
}

AnpoProblem BuildRelaxedAnpo(const SecretDomain& domain,
                             std::span<const AnchorSet> sets, double epsilon,
                             const CostMatrix& cost,
                             const AnpoOptions& options) {
  AnpoProblem problem = AnchorSkeleton(domain, sets, cost);
  for (const auto& [x, xp] : AnchorPairs(sets, options.same_user_pairs)) {
    problem.program.pairs.push_back({problem.row_of[x], problem.row_of[xp],
                                     epsilon * domain.distance(x, xp)});
  }
  return problem;
}

absl::StatusOr<AnpoSolution> SolveAnpo(const AnpoProblem& problem,
                                       const MdpSolveOptions& options) {
  MdpSolveResult solved = SolveMdpProgram(problem.program, options);
  if (solved.status != LpStatus::kOptimal) {
    return absl::InternalError(
        absl::StrCat("anchor LP not solved: ", LpStatusName(solved.status)));
  }
  AnpoSolution out;
  out.z.rows = problem.anchors;
  out.z.probs = std::move(solved.z);
  out.objective = solved.objective;
  out.generated_rows = solved.generated_rows;
  return out;
}

absl::StatusOr<double> RelaxedAnpo(const SecretDomain& domain,
                                   std::span<const AnchorSet> sets,
                                   double epsilon, const CostMatrix& cost,
                                   const AnpoOptions& options) {
  absl::StatusOr<AnpoSolution> s = SolveAnpo(
      BuildRelaxedAnpo(domain, sets, epsilon, cost, options), options.solver);
  if (!s.ok()) return s.status();
  return s->objective;
}

int SurrogateOf(const SecretDomain& domain, int x_n,
                std::span<const int> anchors) {
  int best = -1;
  for (int a : anchors) {
    if (best < 0) {
      best = a;
      continue;
    }
    const double da = domain.distance(x_n, a);
    const double db = domain.distance(x_n, best);
    if (da < db || (da == db && a < best)) best = a;
  }
  return best;
}

UserPerturber MakeUserPerturber(const SecretDomain& domain, int x_n,
                                const AnchorSet& set,
                                const PerturbationMatrix& anchor_matrix) {
  UserPerturber user;
  user.anchors = set.anchors;
  user.surrogate = SurrogateOf(domain, x_n, set.anchors);
  user.rows.rows = set.anchors;
  user.rows.probs = Matrix(static_cast<int>(set.anchors.size()),
                           anchor_matrix.num_cols());
  for (size_t i = 0; i < set.anchors.size(); ++i) {
    const int r = anchor_matrix.RowOf(set.anchors[i]);
    if (r < 0) continue;
    for (int c = 0; c < anchor_matrix.num_cols(); ++c) {
      user.rows.probs(static_cast<int>(i), c) = anchor_matrix.probs(r, c);
    }
  }
  return user;
}

absl::StatusOr<int> Perturb(const UserPerturber& user, Rng& rng) {
  const int r = user.rows.RowOf(user.surrogate);
  if (r < 0) return absl::FailedPreconditionError("surrogate row missing");
  std::span<const double> row = user.rows.probs.row(r);
  double sum = 0.0;
  for (double v : row) sum += v;
  if (std::abs(sum - 1.0) > 1e-9) {
    return absl::FailedPreconditionError(
        absl::StrFormat("surrogate row sums to %.12g", sum));
  }
  return rng.Categorical(row);
}

absl::StatusOr<PandaRun> RunPanda(const MarginContext& ctx,
                                  std::span<const int> users,
                                  const CostMatrix& cost,
                                  const PandaConfig& config, Rng& rng) {
  const SecretDomain& domain = *ctx.domain;
  PandaRun run;
  run.users.assign(users.begin(), users.end());
  for (int u : users) {
    run.sets.push_back(SampleAnchorSet(ctx.weights, u, rng));
    run.empty_redraws += run.sets.back().redraws;
    run.surrogates.push_back(SurrogateOf(domain, u, run.sets.back().anchors));
  }
  run.pairs = AnchorPairs(run.sets, config.anpo.same_user_pairs);
  absl::StatusOr<SafetyMarginPlan> plan =
      BuildMarginPlan(ctx, run.pairs, config.gamma_nn, config.delta);
  if (!plan.ok()) return plan.status();
  run.plan = *std::move(plan);
  absl::StatusOr<AnpoProblem> problem = BuildAnpo(
      domain, run.sets, ctx.epsilon, ctx.eps_bar, run.plan, cost, config.anpo);
  if (!problem.ok()) return problem.status();
  run.problem = *std::move(problem);
  absl::StatusOr<AnpoSolution> solution =
      SolveAnpo(run.problem, config.anpo.solver);
  if (!solution.ok()) return solution.status();
  run.solution = *std::move(solution);
  return run;
}

std::span<const double> EffectiveRow(const PandaRun& run, int user) {
  const int r = run.problem.row_of[run.surrogates[user]];
  return run.solution.z.probs.row(r);
}

}  // namespace anchormdp
