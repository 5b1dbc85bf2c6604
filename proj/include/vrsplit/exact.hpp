/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef VRSPLIT_EXACT_HPP
#define VRSPLIT_EXACT_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "vrsplit/model.hpp"
#include "vrsplit/types.hpp"

namespace vrsplit {

enum class Proof { Optimal, BestFound };

struct SolveResult {
  SplitAssignment assignment;
  EvalReport report;
  Proof proof = Proof::Optimal;
  std::uint64_t nodes_expanded = 0;
  double wall_seconds = 0.0;
};

namespace detail {

// Canonical accumulation: cost, CU load and link flows summed over BSs in
// natural index order. Both solvers score candidates this way, so they agree
// bit-for-bit with each other and with evaluate().
struct CanonicalCheck {
  double cost = 0.0;
  bool feasible = false;
};

inline CanonicalCheck canonical_check(
    const Scenario& s, const std::vector<BsSplitTable>& tables,
    const std::vector<SplitOption>& splits) {
  CanonicalCheck out;
  const std::size_t n = splits.size();
  double cu_used = 0.0;
  std::vector<double> link_flow(s.topology.links.size(), 0.0);
  bool ok = true;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t oi = index_of(splits[k]);
    out.cost += tables[k].cost[oi];
    cu_used += tables[k].cu_load[oi];
    ok = ok && tables[k].usable[oi];
    for (std::size_t e : s.topology.paths[k].edges)
      link_flow[e] += tables[k].flow[oi];
  }
  if (cu_used > s.params.cap_cu) ok = false;
  for (std::size_t e = 0; e < link_flow.size(); ++e)
    if (link_flow[e] > s.topology.links[e].capacity_mbps) ok = false;
  out.feasible = ok;
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Exhaustive oracle
// ---------------------------------------------------------------------------

/// Full 4^N enumeration in lexicographic order of the split vector; the first
/// strictly cheaper feasible candidate wins, so ties resolve to the
/// lexicographically smallest assignment. Guarded to N <= 12.
inline SolveResult solve_bruteforce(const Scenario& s) {
  const std::size_t n = s.num_dus();
  if (n > 12)
    throw TooLarge("brute force is limited to N <= 12, got N = " +
                   std::to_string(n));
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<BsSplitTable> tables;
  tables.reserve(n);
  for (std::size_t k = 0; k < n; ++k) tables.push_back(bs_split_table(s, k));

  std::vector<SplitOption> current(n, SplitOption::S0);
  std::vector<SplitOption> best;
  double best_cost = std::numeric_limits<double>::infinity();
  std::uint64_t visited = 0;

  // Running sums follow the recursion depth, i.e. natural BS order.
  std::vector<double> link_flow(s.topology.links.size(), 0.0);

  auto recurse = [&](auto&& self, std::size_t k, double cost,
                     double cu_used) -> void {
    if (k == n) {
      ++visited;
      if (cost < best_cost) {
        best_cost = cost;
        best = current;
      }
      return;
    }
    for (std::size_t oi = 0; oi < kNumSplits; ++oi) {
      if (!tables[k].usable[oi]) continue;
      const double cu_next = cu_used + tables[k].cu_load[oi];
      if (cu_next > s.params.cap_cu) continue;
      bool links_ok = true;
      for (std::size_t e : s.topology.paths[k].edges) {
        link_flow[e] += tables[k].flow[oi];
        if (link_flow[e] > s.topology.links[e].capacity_mbps) links_ok = false;
      }
      if (links_ok) {
        current[k] = split_from_index(oi);
        self(self, k + 1, cost + tables[k].cost[oi], cu_next);
      }
      for (std::size_t e : s.topology.paths[k].edges)
        link_flow[e] -= tables[k].flow[oi];
    }
  };
  recurse(recurse, 0, 0.0, 0.0);

  if (best.empty() && n > 0)
    throw InfeasibleError("no assignment satisfies the constraint set");

  SolveResult res;
  res.assignment.splits = best;
  res.report = evaluate(s, res.assignment);
  res.proof = Proof::Optimal;
  res.nodes_expanded = visited;
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return res;
}

// ---------------------------------------------------------------------------
// Branch and bound
// ---------------------------------------------------------------------------

/// Exact depth-first branch-and-bound over per-BS split choices.
///
/// Splits that fail their own delay budget or DU capacity are pruned up
/// front. The admissible lower bound of a partial assignment is its
/// accumulated cost plus, for every undecided BS, the cheapest individually
/// usable split cost; shared CU/link capacities are ignored by the bound
/// (dropping constraints can only lower the optimum). BSs are branched in
/// order of decreasing cost spread and children cheapest-first. Candidate
/// leaves are re-scored in natural BS order, so the returned assignment and
/// cost match solve_bruteforce exactly, including lexicographic ties.
inline SolveResult solve_exact(
    const Scenario& s,
    double time_budget_s = std::numeric_limits<double>::infinity()) {
  const std::size_t n = s.num_dus();
  const auto t0 = std::chrono::steady_clock::now();
  const auto deadline =
      std::isfinite(time_budget_s)
          ? t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                     std::chrono::duration<double>(time_budget_s))
          : std::chrono::steady_clock::time_point::max();

  std::vector<BsSplitTable> tables;
  tables.reserve(n);
  for (std::size_t k = 0; k < n; ++k) tables.push_back(bs_split_table(s, k));

  // Per-BS usable options sorted by cost (ties by split index), plus the
  // cheapest usable cost for the bound.
  std::vector<std::vector<std::size_t>> options(n);
  std::vector<double> min_cost(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t oi = 0; oi < kNumSplits; ++oi)
      if (tables[k].usable[oi]) options[k].push_back(oi);
    if (options[k].empty())
      throw InfeasibleError("DU " + std::to_string(k) +
                            " has no individually feasible split");
    std::stable_sort(options[k].begin(), options[k].end(),
                     [&](std::size_t a, std::size_t b) {
                       return tables[k].cost[a] < tables[k].cost[b];
                     });
    min_cost[k] = tables[k].cost[options[k].front()];
  }

  // Branch order: largest cost spread first.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> spread(n, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    spread[k] = tables[k].cost[options[k].back()] - min_cost[k];
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return spread[a] > spread[b];
  });

  // suffix_min[d] = sum of cheapest usable costs for branch depths >= d.
  std::vector<double> suffix_min(n + 1, 0.0);
  for (std::size_t d = n; d > 0; --d)
    suffix_min[d - 1] = suffix_min[d] + min_cost[order[d - 1]];

  std::vector<SplitOption> current(n, SplitOption::S0);
  std::vector<SplitOption> best;
  double best_cost = std::numeric_limits<double>::infinity();

  auto try_incumbent = [&](const std::vector<SplitOption>& cand) {
    const auto check = detail::canonical_check(s, tables, cand);
    if (!check.feasible) return;
    if (check.cost < best_cost ||
        (check.cost == best_cost && cand < best)) {
      best_cost = check.cost;
      best = cand;
    }
  };

  // Warm start: all-S0 if feasible, otherwise greedy cheapest-usable.
  try_incumbent(std::vector<SplitOption>(n, SplitOption::S0));
  if (best.empty()) {
    std::vector<SplitOption> greedy(n, SplitOption::S0);
    for (std::size_t k = 0; k < n; ++k)
      greedy[k] = split_from_index(options[k].front());
    try_incumbent(greedy);
  }

  // Float-noise slack: branch-order partial sums may differ from the
  // canonical order by a few ulps, so prefix pruning keeps a small margin
  // and leaves are always re-scored canonically.
  auto slack = [](double v) { return 1e-9 * std::max(1.0, std::abs(v)); };

  std::vector<double> link_flow(s.topology.links.size(), 0.0);
  std::uint64_t expanded = 0;
  bool timed_out = false;

  auto dfs = [&](auto&& self, std::size_t depth, double cost,
                 double cu_used) -> void {
    if (timed_out) return;
    if ((++expanded & 0x3F) == 0 &&
        std::chrono::steady_clock::now() >= deadline) {
      timed_out = true;
      return;
    }
    if (depth == n) {
      try_incumbent(current);
      return;
    }
    const std::size_t k = order[depth];
    for (std::size_t oi : options[k]) {
      const double child_cost = cost + tables[k].cost[oi];
      const double bound = child_cost + suffix_min[depth + 1];
      if (!best.empty() && bound > best_cost + slack(best_cost)) break;
      const double cu_next = cu_used + tables[k].cu_load[oi];
      if (cu_next > s.params.cap_cu + slack(s.params.cap_cu)) continue;
      bool links_ok = true;
      for (std::size_t e : s.topology.paths[k].edges) {
        link_flow[e] += tables[k].flow[oi];
        const double cap = s.topology.links[e].capacity_mbps;
        if (link_flow[e] > cap + slack(cap)) links_ok = false;
      }
      if (links_ok) {
        current[k] = split_from_index(oi);
        self(self, depth + 1, child_cost, cu_next);
      }
      for (std::size_t e : s.topology.paths[k].edges)
        link_flow[e] -= tables[k].flow[oi];
      if (timed_out) return;
    }
  };
  if (std::chrono::steady_clock::now() >= deadline)
    timed_out = true;
  else if (n > 0)
    dfs(dfs, 0, 0.0, 0.0);

  if (best.empty() && n > 0) {
    if (timed_out)
      throw InfeasibleError(
          "time budget exhausted before any feasible assignment was found");
    throw InfeasibleError("no assignment satisfies the constraint set");
  }

  SolveResult res;
  res.assignment.splits = best;
  res.report = evaluate(s, res.assignment);
  res.proof = timed_out ? Proof::BestFound : Proof::Optimal;
  res.nodes_expanded = expanded;
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return res;
}

}  // namespace vrsplit

#endif  // VRSPLIT_EXACT_HPP
