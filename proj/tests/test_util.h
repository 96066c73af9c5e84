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

// Independent oracles shared by the unit and acceptance tests. Nothing here
// calls into the library's algorithms beyond plain accessors.

#ifndef ANCHORMDP_TESTS_TEST_UTIL_H_
#define ANCHORMDP_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "anchormdp/domain.h"
#include "anchormdp/lp.h"
#include "anchormdp/random.h"

namespace anchormdp::testing {

// Records on a line at the given km positions (planar metric).
inline SecretDomain LineDomain(const std::vector<double>& positions,
                               std::vector<double> priors = {}) {
  std::vector<Point> points;
  for (size_t i = 0; i < positions.size(); ++i) {
    points.push_back({std::to_string(i), positions[i], 0.0, std::nullopt});
  }
  auto d = SecretDomain::FromPoints(points, Metric::kEuclideanKm);
  if (!d.ok()) throw std::runtime_error(std::string(d.status().message()));
  if (priors.empty()) return *std::move(d);
  auto p = d->WithPriors(std::move(priors));
  if (!p.ok()) throw std::runtime_error(std::string(p.status().message()));
  return *std::move(p);
}

inline std::vector<Point> RandomPoints(int k, double side_km, Rng& rng) {
  std::vector<Point> points(k);
  for (int i = 0; i < k; ++i) {
    points[i] = {std::to_string(i), side_km * rng.Uniform(),
                 side_km * rng.Uniform(), std::nullopt};
  }
  return points;
}

// Random planar domain with random (Dirichlet-like) priors.
inline SecretDomain RandomDomain(int k, double side_km, Rng& rng,
                                 bool random_priors = true) {
  auto d = SecretDomain::FromPoints(RandomPoints(k, side_km, rng),
                                    Metric::kEuclideanKm);
  if (!d.ok()) throw std::runtime_error(std::string(d.status().message()));
  if (!random_priors) return *std::move(d);
  std::vector<double> p(k);
  double total = 0.0;
  for (double& v : p) {
    v = -std::log(1.0 - rng.Uniform());
    total += v;
  }
  for (double& v : p) v /= total;
  // Push the rounding residue into one entry so the sum is 1 to 1e-15.
  double s = 0.0;
  for (int i = 1; i < k; ++i) s += p[i];
  p[0] = 1.0 - s;
  auto w = d->WithPriors(p);
  if (!w.ok()) throw std::runtime_error(std::string(w.status().message()));
  return *std::move(w);
}

// Solves A x = b (n x n) by Gaussian elimination with partial pivoting.
// Returns nullopt for (numerically) singular systems.
inline std::optional<std::vector<double>> SolveDense(
    std::vector<std::vector<double>> a, std::vector<double> b) {
  const int n = static_cast<int>(b.size());
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (std::abs(a[piv][col]) < 1e-12) return std::nullopt;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return x;
}

struct VertexOptimum {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
  std::vector<double> x;
};

// Minimum of the objective over every basic feasible point: each choice of
// num_vars constraints (rows, equalities and bounds) made tight. Exact for
// bounded programs; only meant for a handful of variables.
inline VertexOptimum VertexEnumeration(const LinearProgram& lp) {
  const int n = lp.num_vars();
  struct Half {
    std::vector<double> a;
    double b;
    bool eq;
  };
  std::vector<Half> cons;
  auto dense = [n](const LinearRow& r) {
    std::vector<double> a(n, 0.0);
    for (size_t i = 0; i < r.index.size(); ++i) a[r.index[i]] += r.value[i];
    return a;
  };
  for (const LinearRow& r : lp.inequalities()) cons.push_back({dense(r), r.rhs, false});
  for (const LinearRow& r : lp.equalities()) cons.push_back({dense(r), r.rhs, true});
  for (int i = 0; i < n; ++i) {
    std::vector<double> e(n, 0.0);
    e[i] = 1.0;
    cons.push_back({e, lp.upper()[i], false});
    e[i] = -1.0;
    cons.push_back({e, -lp.lower()[i], false});
  }
  const int m = static_cast<int>(cons.size());
  VertexOptimum best;
  std::vector<int> pick(n);
  // Lexicographic enumeration of n-subsets of the m constraints.
  for (int i = 0; i < n; ++i) pick[i] = i;
  if (m < n) return best;
  while (true) {
    std::vector<std::vector<double>> a;
    std::vector<double> b;
    for (int i : pick) {
      a.push_back(cons[i].a);
      b.push_back(cons[i].b);
    }
    if (auto x = SolveDense(a, b)) {
      bool ok = true;
      for (const Half& h : cons) {
        double lhs = 0.0;
        for (int j = 0; j < n; ++j) lhs += h.a[j] * (*x)[j];
        if (lhs > h.b + 1e-9 || (h.eq && lhs < h.b - 1e-9)) {
          ok = false;
          break;
        }
      }
      if (ok) {
        double obj = 0.0;
        for (int j = 0; j < n; ++j) obj += lp.objective()[j] * (*x)[j];
        if (obj < best.objective) {
          best.feasible = true;
          best.objective = obj;
          best.x = *x;
        }
      }
    }
    int i = n - 1;
    while (i >= 0 && pick[i] == m - n + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < n; ++j) pick[j] = pick[j - 1] + 1;
  }
  return best;
}

// Largest |log Pr[A | n] - log Pr[A | m]| / d over all 2^K anchor sets,
// with the set probability computed as a plain product.
inline double ExhaustiveEpsilonBar(const std::vector<double>& wn,
                                   const std::vector<double>& wm, double d) {
  const int k = static_cast<int>(wn.size());
  double best = 0.0;
  for (uint32_t mask = 0; mask < (1u << k); ++mask) {
    double log_n = 0.0;
    double log_m = 0.0;
    for (int x = 0; x < k; ++x) {
      const bool in = (mask >> x) & 1u;
      log_n += std::log(in ? wn[x] : 1.0 - wn[x]);
      log_m += std::log(in ? wm[x] : 1.0 - wm[x]);
    }
    best = std::max(best, std::abs(log_n - log_m) / d);
  }
  return best;
}

// 3-sigma half width of a Bernoulli frequency estimate.
inline double ThreeSigma(double p, int trials) {
  return 3.0 * std::sqrt(std::max(p * (1.0 - p), 0.0) / trials);
}

}  // namespace anchormdp::testing

#endif  // ANCHORMDP_TESTS_TEST_UTIL_H_
