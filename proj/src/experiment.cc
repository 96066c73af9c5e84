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

#include "anchormdp/experiment.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <thread>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "anchormdp/anpo.h"
#include "anchormdp/baselines.h"
#include "anchormdp/random.h"
#include "anchormdp/safety_margin.h"

namespace anchormdp {
namespace {

constexpr double kMetersPerKm = 1000.0;

std::string G(double v) { return absl::StrFormat("%.17g", v); }

bool IsPanda(const std::string& m) {
  return m == "panda" || m == "panda_e" || m == "panda_p" || m == "panda_l";
}

DecayFamily PandaFamily(const std::string& m, DecayFamily fallback) {
  if (m == "panda_e") return DecayFamily::kExponential;
  if (m == "panda_p") return DecayFamily::kPowerLaw;
  if (m == "panda_l") return DecayFamily::kLogistic;
  return fallback;
}

const std::vector<std::string>& KnownMechanisms() {
  static const auto* known = new std::vector<std::string>{
      "em", "em_br", "full_lp", "lp_ca", "panda", "panda_e", "panda_p",
      "panda_l"};
  return *known;
}

void FillStatic(ExperimentReport& r, const SecretDomain& domain,
                const PerturbationMatrix& z, const PerturbationMatrix& privacy_z,
                const CostMatrix& cost, std::span<const int> users,
                double epsilon) {
  r.utility_loss_m =
      kMetersPerKm * ExpectedUtilityLoss(z, domain.priors(), cost);
  r.objective = r.utility_loss_m / kMetersPerKm;
  r.violations = CountViolations(domain, privacy_z, users, epsilon);
}

void FillLpSize(ExperimentReport& r, const LpMechanism& m, int rows, int k) {
  r.lp.variables = m.num_variables;
  r.lp.inequalities = m.num_inequalities;
  r.lp.equalities = m.num_equalities;
  r.lp.anchor_fraction = static_cast<double>(rows) / k;
}

// Runs one mechanism; errors become the report status.
absl::Status RunMechanism(const RunConfig& config, const std::string& mech,
                          int mech_index, const SecretDomain& domain,
                          const CostMatrix& cost, std::span<const int> users,
                          uint64_t repeat_seed,
                          std::map<DecayFamily, std::unique_ptr<MarginContext>>&
                              contexts,
                          ExperimentReport& r) {
  const double eps = config.epsilon;
  if (mech == "em" || mech == "em_br") {
    absl::StatusOr<PerturbationMatrix> em =
        EmMatrix(domain, eps, config.em_scale);
    if (!em.ok()) return em.status();
    if (mech == "em") {
      FillStatic(r, domain, *em, *em, cost, users, eps);
    } else {
      const PerturbationMatrix remapped =
          ApplyRemap(*em, BayesianRemap(domain, *em, cost));
      // Remapping is post-processing; privacy is measured before it.
      FillStatic(r, domain, remapped, *em, cost, users, eps);
    }
    return absl::OkStatus();
  }
  if (mech == "full_lp") {
    if (domain.size() > config.full_lp_max_k && !config.allow_large_lp) {
      return absl::ResourceExhaustedError(absl::StrCat(
          "full LP refused for K = ", domain.size(), " > cap ",
          config.full_lp_max_k, " (override with --allow-large-lp)"));
    }
    absl::StatusOr<LpMechanism> lp = FullLp(domain, eps, cost);
    if (!lp.ok()) return lp.status();
    FillStatic(r, domain, lp->z, lp->z, cost, users, eps);
    FillLpSize(r, *lp, domain.size(), domain.size());
    return absl::OkStatus();
  }
  if (mech == "lp_ca") {
    absl::StatusOr<CoarseLpResult> ca =
        CoarseLp(domain, config.grid_rows, config.grid_cols, eps, cost);
    if (!ca.ok()) return ca.status();
    const PerturbationMatrix eff = CoarseEffectiveMatrix(*ca);
    FillStatic(r, domain, eff, eff, cost, users, eps);
    FillLpSize(r, ca->cells, static_cast<int>(ca->grid.centers.size()),
               domain.size());
    return absl::OkStatus();
  }
  if (IsPanda(mech)) {
    const DecayFamily family = PandaFamily(mech, config.family);
    auto& ctx = contexts[family];
    if (ctx == nullptr) {
      AnchorPolicy policy = DefaultPolicy(domain, family);
      policy.alpha = config.alpha;
      policy.lambda = config.lambda;
      if (config.gamma.has_value()) policy.gamma = *config.gamma;
      if (absl::Status s = policy.Validate(); !s.ok()) return s;
      ctx = std::make_unique<MarginContext>(domain, policy, eps);
    }
    PandaConfig pc;
    pc.epsilon = eps;
    pc.delta = config.delta;
    pc.gamma_nn = config.gamma_nn;
    Rng rng(DeriveSeed(repeat_seed, 100 + mech_index));
    absl::StatusOr<PandaRun> run = RunPanda(*ctx, users, cost, pc, rng);
    if (!run.ok()) return run.status();
    r.utility_loss_m = kMetersPerKm * UserUtilityLoss(*run, cost);
    r.objective = run->solution.objective;
    r.violations = CountViolations(domain, *run, eps);
    r.lp = LpSize(run->problem.program, domain.size());
    r.budget = BudgetAllocation(*ctx, run->plan, run->pairs);
    absl::StatusOr<double> relaxed = RelaxedAnpo(domain, run->sets, eps, cost);
    if (relaxed.ok()) {
      r.relaxed_objective = *relaxed;
      r.approx_ratio = *relaxed > 0 ? r.objective / *relaxed : 0.0;
    }
    return absl::OkStatus();
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown mechanism ", mech));
}

std::vector<ExperimentReport> RunRepeat(const RunConfig& config,
                                        std::span<const Point> points,
                                        Metric metric, int repeat) {
  const uint64_t repeat_seed = DeriveSeed(config.seed, repeat);
  std::vector<ExperimentReport> reports;
  auto fail_all = [&](const absl::Status& s) {
    for (const std::string& m : config.mechanisms) {
      ExperimentReport r;
      r.mechanism = m;
      r.repeat = repeat;
      r.seed = repeat_seed;
      r.k = config.k;
      r.users = config.users;
      r.status = std::string(s.message());
      reports.push_back(r);
    }
    return reports;
  };
  absl::StatusOr<SecretDomain> domain =
      BuildDomain(points, metric, config.k, DeriveSeed(repeat_seed, 1));
  if (!domain.ok()) return fail_all(domain.status());
  absl::StatusOr<CostMatrix> cost =
      BuildCostModel(*domain, CostMode::kDirectDistance);
  if (!cost.ok()) return fail_all(cost.status());

  Rng user_rng(DeriveSeed(repeat_seed, 2));
  std::vector<int> users(config.users);
  for (int& u : users) u = user_rng.Categorical(domain->priors());

  std::map<DecayFamily, std::unique_ptr<MarginContext>> contexts;
  for (size_t i = 0; i < config.mechanisms.size(); ++i) {
    ExperimentReport r;
    r.mechanism = config.mechanisms[i];
    r.repeat = repeat;
    r.seed = repeat_seed;
    r.k = domain->size();
    r.users = config.users;
    const auto start = std::chrono::steady_clock::now();
    absl::Status s =
        RunMechanism(config, r.mechanism, static_cast<int>(i), *domain, *cost,
                     users, repeat_seed, contexts, r);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              start)
                    .count();
    if (!s.ok()) {
      ExperimentReport failed;
      failed.mechanism = r.mechanism;
      failed.repeat = repeat;
      failed.seed = repeat_seed;
      failed.k = r.k;
      failed.users = r.users;
      failed.status = std::string(s.message());
      failed.seconds = r.seconds;
      r = std::move(failed);
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

// CSV fields must not contain separators.
std::string CsvField(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

absl::StatusOr<SyntheticSpec> ParseSyntheticSpec(absl::string_view text) {
  std::vector<absl::string_view> parts = absl::StrSplit(text, ',');
  SyntheticSpec spec;
  if (parts.size() != 2 || !absl::SimpleAtoi(parts[0], &spec.count) ||
      !absl::SimpleAtod(parts[1], &spec.side_km)) {
    return absl::InvalidArgumentError(
        absl::StrCat("expected --synthetic N,SIDE, got '", text, "'"));
  }
  if (spec.count < 2) {
    return absl::InvalidArgumentError("synthetic count must be at least 2");
  }
  if (!(spec.side_km > 0.0)) {
    return absl::InvalidArgumentError("synthetic side must be positive");
  }
  return spec;
}

std::vector<Point> GenerateSynthetic(const SyntheticSpec& spec, uint64_t seed) {
  Rng rng(seed);
  std::vector<Point> points(spec.count);
  for (int i = 0; i < spec.count; ++i) {
    points[i].id = absl::StrCat("s", i);
    points[i].lat = spec.side_km * rng.Uniform();
    points[i].lon = spec.side_km * rng.Uniform();
  }
  return points;
}

absl::Status RunConfig::Validate() const {
  if (dataset.empty() == !synthetic.has_value()) {
    return absl::InvalidArgumentError(
        "exactly one of --dataset and --synthetic is required");
  }
  if (!(epsilon > 0.0)) return absl::InvalidArgumentError("epsilon must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError("delta must lie in (0, 1)");
  }
  if (repeats < 1) return absl::InvalidArgumentError("repeats must be >= 1");
  if (mechanisms.empty()) {
    return absl::InvalidArgumentError("mechanisms must be nonempty");
  }
  for (const std::string& m : mechanisms) {
    if (std::find(KnownMechanisms().begin(), KnownMechanisms().end(), m) ==
        KnownMechanisms().end()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "unknown mechanism '", m, "' (known: ",
          absl::StrJoin(KnownMechanisms(), ", "), ")"));
    }
  }
  if (k < 2) return absl::InvalidArgumentError("K must be at least 2");
  if (users < 1) return absl::InvalidArgumentError("users must be >= 1");
  if (gamma_nn < 1) return absl::InvalidArgumentError("Gamma must be >= 1");
  if (grid_rows < 1 || grid_cols < 1) {
    return absl::InvalidArgumentError("grid must be at least 1x1");
  }
  if (workers < 1) return absl::InvalidArgumentError("workers must be >= 1");
  return absl::OkStatus();
}

std::string RunConfig::ToText() const {
  std::map<std::string, std::string> kv;
  kv["dataset"] = dataset;
  kv["synthetic"] =
      synthetic ? absl::StrCat(synthetic->count, ",", G(synthetic->side_km))
                : "";
  kv["metric"] = std::string(MetricName(metric));
  kv["k"] = absl::StrCat(k);
  kv["users"] = absl::StrCat(users);
  kv["epsilon"] = G(epsilon);
  kv["delta"] = G(delta);
  kv["policy"] = std::string(DecayFamilyName(family));
  kv["alpha"] = G(alpha);
  kv["lambda"] = G(lambda);
  kv["gamma"] = gamma ? G(*gamma) : "";
  kv["cap-gamma-nn"] = absl::StrCat(gamma_nn);
  kv["em-scale"] = G(em_scale);
  kv["grid"] = absl::StrCat(grid_rows, "x", grid_cols);
  kv["mechanisms"] = absl::StrJoin(mechanisms, ",");
  kv["repeats"] = absl::StrCat(repeats);
  kv["seed"] = absl::StrCat(seed);
  kv["full-lp-max-k"] = absl::StrCat(full_lp_max_k);
  kv["allow-large-lp"] = allow_large_lp ? "true" : "false";
  std::string out;
  for (const auto& [key, value] : kv) absl::StrAppend(&out, key, "=", value, "\n");
  return out;
}

absl::StatusOr<ExperimentResult> RunExperiment(const RunConfig& config) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  std::vector<Point> points;
  Metric metric = config.metric;
  if (config.synthetic.has_value()) {
    points = GenerateSynthetic(*config.synthetic, config.seed);
    metric = Metric::kEuclideanKm;
  } else {
    absl::StatusOr<std::vector<Point>> loaded = LoadNodes(config.dataset);
    if (!loaded.ok()) return loaded.status();
    points = *std::move(loaded);
  }
  if (config.k > static_cast<int>(points.size())) {
    return absl::InvalidArgumentError(absl::StrCat(
        "K = ", config.k, " exceeds the ", points.size(), " available nodes"));
  }

  std::vector<std::vector<ExperimentReport>> per_repeat(config.repeats);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < config.repeats; r = next++) {
      per_repeat[r] = RunRepeat(config, points, metric, r);
    }
  };
  const int threads = std::min(config.workers, config.repeats);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  ExperimentResult result;
  for (auto& reports : per_repeat) {
    for (auto& r : reports) result.reports.push_back(std::move(r));
  }
  return result;
}

std::string ReportCsv(const ExperimentResult& result) {
  std::string out =
      "mechanism,repeat,seed,k,users,status,utility_loss_m,violations,"
      "pairs,violation_rate,variables,inequalities,equalities,"
      "anchor_fraction,objective,relaxed_objective,approx_ratio\n";
  for (const ExperimentReport& r : result.reports) {
    absl::StrAppend(
        &out, r.mechanism, ",", r.repeat, ",", r.seed, ",", r.k, ",", r.users,
        ",", CsvField(r.status), ",", G(r.utility_loss_m), ",",
        r.violations.violations, ",", r.violations.samples, ",",
        G(r.violations.rate()), ",", r.lp.variables, ",", r.lp.inequalities,
        ",", r.lp.equalities, ",", G(r.lp.anchor_fraction), ",", G(r.objective),
        ",", G(r.relaxed_objective), ",", G(r.approx_ratio), "\n");
  }
  return out;
}

std::string BudgetAllocationCsv(const ExperimentResult& result) {
  std::string out =
      "mechanism,repeat,pairs,exhausted,phase1_share,margin_share,"
      "phase2_share\n";
  for (const ExperimentReport& r : result.reports) {
    if (!IsPanda(r.mechanism) || r.status != "ok") continue;
    absl::StrAppend(&out, r.mechanism, ",", r.repeat, ",",
                    r.budget.pairs.size(), ",", r.budget.num_exhausted, ",",
                    G(r.budget.mean_phase1), ",", G(r.budget.mean_margin), ",",
                    G(r.budget.mean_phase2), "\n");
  }
  return out;
}

std::string ViolationsCsv(const ExperimentResult& result) {
  std::string out = "mechanism,repeat,pairs,violations,rate\n";
  for (const ExperimentReport& r : result.reports) {
    if (r.status != "ok") continue;
    absl::StrAppend(&out, r.mechanism, ",", r.repeat, ",", r.violations.samples,
                    ",", r.violations.violations, ",", G(r.violations.rate()),
                    "\n");
  }
  return out;
}

MeanInterval Aggregate(const std::vector<double>& values) {
  MeanInterval m;
  m.count = static_cast<int>(values.size());
  if (values.empty()) return m;
  for (double v : values) m.mean += v;
  m.mean /= values.size();
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.half_width = 1.96 * std::sqrt(ss / (values.size() - 1));
  }
  return m;
}

std::string SummaryText(const RunConfig& config,
                        const ExperimentResult& result) {
  std::string out = "configuration\n";
  for (absl::string_view line : absl::StrSplit(config.ToText(), '\n', absl::SkipEmpty())) {
    absl::StrAppend(&out, "  ", line, "\n");
  }
  absl::StrAppend(&out, "\n",
                  absl::StrFormat("%-9s %4s %24s %22s %12s %10s %9s\n",
                                  "mechanism", "ok", "utility loss (m)",
                                  "violation rate", "variables", "anchors",
                                  "seconds"));
  for (const std::string& m : config.mechanisms) {
    std::vector<double> loss, rate, vars, frac, secs;
    std::vector<std::string> errors;
    for (const ExperimentReport& r : result.reports) {
      if (r.mechanism != m) continue;
      secs.push_back(r.seconds);
      if (r.status != "ok") {
        errors.push_back(absl::StrCat("repeat ", r.repeat, ": ", r.status));
        continue;
      }
      loss.push_back(r.utility_loss_m);
      rate.push_back(r.violations.rate());
      vars.push_back(static_cast<double>(r.lp.variables));
      frac.push_back(r.lp.anchor_fraction);
    }
    const MeanInterval l = Aggregate(loss);
    const MeanInterval v = Aggregate(rate);
    absl::StrAppend(
        &out, absl::StrFormat("%-9s %4d %12.3f+-%-10.3f %10.3g+-%-10.3g %12.0f "
                              "%10.4f %9.2f\n",
                              m, l.count, l.mean, l.half_width, v.mean,
                              v.half_width, Aggregate(vars).mean,
                              Aggregate(frac).mean, Aggregate(secs).mean));
    for (const std::string& e : errors) absl::StrAppend(&out, "    ", e, "\n");
  }
  return out;
}

absl::Status WriteArtifacts(const RunConfig& config,
                            const ExperimentResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec) {
    return absl::UnavailableError(
        absl::StrCat("cannot create ", config.out_dir, ": ", ec.message()));
  }
  const std::vector<std::pair<std::string, std::string>> files = {
      {"config.txt", config.ToText()},
      {"report.csv", ReportCsv(result)},
      {"budget_allocation.csv", BudgetAllocationCsv(result)},
      {"violations.csv", ViolationsCsv(result)},
      {"summary.txt", SummaryText(config, result)},
  };
  for (const auto& [name, contents] : files) {
    const std::string path = (std::filesystem::path(config.out_dir) / name).string();
    std::ofstream f(path, std::ios::binary);
    f << contents;
    if (!f) return absl::DataLossError(absl::StrCat("cannot write ", path));
  }
  return absl::OkStatus();
}

}  // namespace anchormdp
