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

#ifndef VRSPLIT_MODEL_HPP
#define VRSPLIT_MODEL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "vrsplit/types.hpp"

namespace vrsplit {

// ---------------------------------------------------------------------------
// Flows and delays
// ---------------------------------------------------------------------------

/// DU -> CU data flow (Mbps) induced by deploying split `o` under traffic
/// `load_mbps`: the raw load for S0/S1, 1.02*load + 1.5 for S2 and the
/// constant CPRI-like stream for S3.
inline double split_flow(SplitOption o, double load_mbps,
                         const SystemParams& params) {
  switch (o) {
    case SplitOption::S0:
    case SplitOption::S1:
      return load_mbps;
    case SplitOption::S2:
      return 1.02 * load_mbps + 1.5;
    case SplitOption::S3:
      return params.split3_flow;
  }
  return 0.0;
}

/// Store-and-forward one-way delay over a sequence of links, in ms.
/// Per link: 12000/c transmission (c in Mbps, 12000-bit packets) plus
/// 4 us/km propagation, plus a flat 5 us per-hop processing charge.
inline double path_delay_ms(std::span<const Link> edges) {
  double us = 0.0;
  for (const Link& l : edges) {
    if (std::isnan(l.length_km))
      throw MissingGeometry("link " + std::to_string(l.a) + "-" +
                            std::to_string(l.b) +
                            " has no length and its endpoints no coordinates");
    us += 12000.0 / l.capacity_mbps + 4.0 * l.length_km + 5.0;
  }
  return us / 1000.0;
}

inline double path_delay_ms(const Topology& topo, const RoutePath& path) {
  std::vector<Link> edges;
  edges.reserve(path.edges.size());
  for (std::size_t e : path.edges) edges.push_back(topo.links[e]);
  return path_delay_ms(edges);
}

// ---------------------------------------------------------------------------
// Per-BS cost/load primitives
// ---------------------------------------------------------------------------
// These helpers are the single source for every cost and load expression.
// evaluate() and both solvers go through them, so that a given (scenario,
// split) pair always yields bit-identical numbers regardless of the caller.

inline double du_compute_cost(const SystemParams& p, double lambda,
                              SplitOption o) {
  return p.inst_cost_du + p.proc_cost_du * lambda * p.rho_du[index_of(o)];
}

inline double cu_compute_cost(const SystemParams& p, double lambda,
                              SplitOption o) {
  return p.inst_cost_cu + lambda * p.proc_cost_cu * p.rho_cu[index_of(o)];
}

inline double du_load(const SystemParams& p, double lambda, SplitOption o) {
  return lambda * p.rho_du[index_of(o)];
}

inline double cu_load(const SystemParams& p, double lambda, SplitOption o) {
  return lambda * p.rho_cu[index_of(o)];
}

/// Everything the solvers need about one BS, tabulated over the four splits.
/// `usable[o]` combines the per-BS checks that do not depend on other BSs:
/// the delay budget and the DU compute capacity.
struct BsSplitTable {
  std::array<double, kNumSplits> cost{};      // V_n + U_n0 + V_n0
  std::array<double, kNumSplits> flow{};      // r, Mbps
  std::array<double, kNumSplits> cu_load{};   // RC at the CU
  std::array<double, kNumSplits> du_load{};   // RC at the DU
  std::array<bool, kNumSplits> usable{};      // delay + DU capacity
};

inline BsSplitTable bs_split_table(const Scenario& s, std::size_t k) {
  const double lambda = s.traffic_mbps[k];
  const RoutePath& path = s.topology.paths[k];
  BsSplitTable t;
  for (std::size_t oi = 0; oi < kNumSplits; ++oi) {
    const SplitOption o = split_from_index(oi);
    t.flow[oi] = split_flow(o, lambda, s.params);
    t.cu_load[oi] = cu_load(s.params, lambda, o);
    t.du_load[oi] = du_load(s.params, lambda, o);
    const double v_du = du_compute_cost(s.params, lambda, o);
    const double v_cu = cu_compute_cost(s.params, lambda, o);
    const double u = path.cost_per_mbps * t.flow[oi];
    t.cost[oi] = (v_du + u) + v_cu;
    t.usable[oi] = path.delay_ms <= s.params.delay_max_ms[oi] &&
                   t.du_load[oi] <= s.params.cap_du;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Assignment evaluation
// ---------------------------------------------------------------------------

/// Evaluates one assignment: flows, per-BS cost components, normalized
/// constraint dissatisfaction and the total cost J. Pure; identical inputs
/// produce bit-identical reports.
inline EvalReport evaluate(const Scenario& s, const SplitAssignment& a) {
  const std::size_t n = s.num_dus();
  if (a.size() != n)
    throw DimensionMismatch("assignment length " + std::to_string(a.size()) +
                            " does not match DU count " + std::to_string(n));

  EvalReport r;
  r.du_costs.resize(n);
  r.cu_costs.resize(n);
  r.routing_costs.resize(n);
  r.flows.resize(n);
  r.violations.du_compute.assign(n, 0.0);
  r.violations.delay.assign(n, 0.0);
  r.violations.link.assign(s.topology.links.size(), 0.0);

  std::vector<double> link_flow(s.topology.links.size(), 0.0);
  double cu_used = 0.0;
  double total = 0.0;

  for (std::size_t k = 0; k < n; ++k) {
    const SplitOption o = a.splits[k];
    const double lambda = s.traffic_mbps[k];
    const RoutePath& path = s.topology.paths[k];

    r.flows[k] = split_flow(o, lambda, s.params);
    r.du_costs[k] = du_compute_cost(s.params, lambda, o);
    r.cu_costs[k] = cu_compute_cost(s.params, lambda, o);
    r.routing_costs[k] = path.cost_per_mbps * r.flows[k];
    total += (r.du_costs[k] + r.routing_costs[k]) + r.cu_costs[k];

    cu_used += cu_load(s.params, lambda, o);
    const double du_used = du_load(s.params, lambda, o);
    if (s.params.cap_du > 0)
      r.violations.du_compute[k] =
          std::max(0.0, (du_used - s.params.cap_du) / s.params.cap_du);
    else if (du_used > 0)
      r.violations.du_compute[k] = du_used;

    const double dmax = s.params.delay_max_ms[index_of(o)];
    r.violations.delay[k] = std::max(0.0, (path.delay_ms - dmax) / dmax);

    for (std::size_t e : path.edges) link_flow[e] += r.flows[k];
  }

  if (s.params.cap_cu > 0)
    r.violations.cu_compute =
        std::max(0.0, (cu_used - s.params.cap_cu) / s.params.cap_cu);
  else if (cu_used > 0)
    r.violations.cu_compute = cu_used;

  for (std::size_t e = 0; e < link_flow.size(); ++e) {
    const double cap = s.topology.links[e].capacity_mbps;
    r.violations.link[e] = std::max(0.0, (link_flow[e] - cap) / cap);
  }

  r.total_cost = total;
  r.feasible = r.violations.all_zero();
  return r;
}

// ---------------------------------------------------------------------------
// Penalization
// ---------------------------------------------------------------------------

using PenaltyCoefficients = std::array<double, ConstraintVector::kFamilies>;

/// Weighted sum of per-family dissatisfaction: xi = sum_i mu_i * C_i with the
/// family order [cu, du, link, delay]. The penalized cost used by training is
/// L = J + xi.
inline double penalization(const EvalReport& report,
                           const PenaltyCoefficients& mu) {
  for (double m : mu)
    if (m < 0) throw NegativeCoefficient("penalty coefficients must be >= 0");
  const auto c = report.violations.family_max();
  double xi = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) xi += mu[i] * c[i];
  return xi;
}

// ---------------------------------------------------------------------------
// Fixed baselines
// ---------------------------------------------------------------------------

enum class BaselineMode { DRAN, CRAN };

/// All-S0 (D-RAN) or all-S3 (C-RAN) benchmark. The C-RAN report is often
/// infeasible; its cost is still returned, benchmark semantics.
inline EvalReport fixed_baseline_cost(const Scenario& s, BaselineMode mode) {
  const SplitOption o =
      mode == BaselineMode::DRAN ? SplitOption::S0 : SplitOption::S3;
  return evaluate(s, SplitAssignment::uniform(s.num_dus(), o));
}

}  // namespace vrsplit

#endif  // VRSPLIT_MODEL_HPP
