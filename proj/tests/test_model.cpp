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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support.hpp"
#include "vrsplit/model.hpp"
#include "vrsplit/rng.hpp"

using namespace vrsplit;
using vrsplit::testsupport::line_scenario;
using vrsplit::testsupport::random_scenario;
using vrsplit::testsupport::single_link_scenario;

namespace {

// Straight re-check of the raw constraint inequalities, independent of the
// normalized violation vectors produced by evaluate().
bool raw_feasible(const Scenario& s, const SplitAssignment& a) {
  double cu_used = 0.0;
  std::vector<double> link_flow(s.topology.links.size(), 0.0);
  for (std::size_t k = 0; k < s.num_dus(); ++k) {
    const SplitOption o = a.splits[k];
    const double lambda = s.traffic_mbps[k];
    cu_used += lambda * s.params.rho_cu[index_of(o)];
    if (lambda * s.params.rho_du[index_of(o)] > s.params.cap_du) return false;
    const RoutePath& p = s.topology.paths[k];
    if (p.delay_ms > s.params.delay_max_ms[index_of(o)]) return false;
    for (std::size_t e : p.edges)
      link_flow[e] += split_flow(o, lambda, s.params);
  }
  if (cu_used > s.params.cap_cu) return false;
  for (std::size_t e = 0; e < link_flow.size(); ++e)
    if (link_flow[e] > s.topology.links[e].capacity_mbps) return false;
  return true;
}

SplitAssignment random_assignment(std::size_t n, Rng& rng) {
  SplitAssignment a;
  a.splits.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    a.splits.push_back(split_from_index(std::size_t(rng.below(4))));
  return a;
}

}  // namespace

TEST_CASE("split_flow reproduces the per-split flow table") {
  const SystemParams p = SystemParams::defaults();
  CHECK(split_flow(SplitOption::S3, 150.0, p) == 2500.0);
  CHECK(split_flow(SplitOption::S0, 0.0, p) == 0.0);
  CHECK(split_flow(SplitOption::S2, 150.0, p) == Catch::Approx(154.5).epsilon(0));

  // Whole table at arbitrary nonnegative loads.
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const double lambda = rng.uniform(0.0, 2000.0);
    CHECK(split_flow(SplitOption::S0, lambda, p) == lambda);
    CHECK(split_flow(SplitOption::S1, lambda, p) == lambda);
    CHECK(split_flow(SplitOption::S2, lambda, p) == 1.02 * lambda + 1.5);
    CHECK(split_flow(SplitOption::S3, lambda, p) == 2500.0);
  }
}

TEST_CASE("delay budgets match the per-split requirements") {
  const SystemParams p = SystemParams::defaults();
  CHECK(p.delay_max_ms[0] == 30.0);
  CHECK(p.delay_max_ms[1] == 30.0);
  CHECK(p.delay_max_ms[2] == 2.0);
  CHECK(p.delay_max_ms[3] == 0.25);
}

TEST_CASE("path_delay: store-and-forward components") {
  SECTION("1 km link at 100 Gbps") {
    const Link l{0, 1, 100000.0, 0.0, 1.0};
    const std::vector<Link> edges{l};
    // (12000/100000 + 4*1 + 5) us = 9.12 us
    CHECK(path_delay_ms(edges) == Catch::Approx(0.00912).margin(1e-15));
  }
  SECTION("zero-length, effectively infinite capacity: processing only") {
    const Link l{0, 1, std::numeric_limits<double>::infinity(), 0.0, 0.0};
    const std::vector<Link> edges{l};
    CHECK(path_delay_ms(edges) == Catch::Approx(0.005).margin(1e-18));
  }
  SECTION("two identical links double the delay") {
    const Link l{0, 1, 2500.0, 0.0, 3.5};
    const std::vector<Link> one{l};
    const std::vector<Link> two{l, l};
    CHECK(path_delay_ms(two) == Catch::Approx(2.0 * path_delay_ms(one)).epsilon(1e-15));
  }
  SECTION("missing geometry is an error") {
    Link l{0, 1, 1000.0, 0.0, std::numeric_limits<double>::quiet_NaN()};
    const std::vector<Link> edges{l};
    CHECK_THROWS_AS(path_delay_ms(edges), MissingGeometry);
  }
}

TEST_CASE("evaluate: single-DU cost breakdown") {
  // lambda=150, zeta=0, alpha_n=1, beta_n=1, alpha_0=0.5, rho^d_0=0.05:
  // V = 1 + 1*150*0.05 = 8.5, V0 = 0.5, J = 9.0.
  Scenario s = single_link_scenario(150.0, 0.0);
  const EvalReport r = evaluate(s, SplitAssignment::uniform(1, SplitOption::S0));
  CHECK(r.du_costs[0] == Catch::Approx(8.5).epsilon(0));
  CHECK(r.cu_costs[0] == Catch::Approx(0.5).epsilon(0));
  CHECK(r.routing_costs[0] == 0.0);
  CHECK(r.total_cost == Catch::Approx(9.0).epsilon(0));
  CHECK(r.feasible);
}

TEST_CASE("evaluate: zero traffic degenerates to instantiation costs") {
  Scenario s = random_scenario(11);
  for (double& t : s.traffic_mbps) t = 0.0;
  const auto r =
      evaluate(s, SplitAssignment::uniform(s.num_dus(), SplitOption::S0));
  const double expected =
      double(s.num_dus()) * (s.params.inst_cost_du + s.params.inst_cost_cu);
  CHECK(r.total_cost == Catch::Approx(expected).epsilon(1e-12));
  CHECK(r.feasible);
  CHECK(r.violations.all_zero());
}

TEST_CASE("evaluate: DU compute boundary is feasible") {
  Scenario s = single_link_scenario(150.0, 0.0);
  REQUIRE(s.params.cap_du == 7.5);  // 150 * 0.05 == 7.5 exactly
  const auto r = evaluate(s, SplitAssignment::uniform(1, SplitOption::S0));
  CHECK(r.violations.du_compute[0] == 0.0);
  CHECK(r.feasible);
}

TEST_CASE("evaluate rejects mismatched assignment lengths") {
  Scenario s = line_scenario();
  CHECK_THROWS_AS(evaluate(s, SplitAssignment::uniform(3, SplitOption::S0)),
                  DimensionMismatch);
}

TEST_CASE("evaluate: cost decomposition and purity") {
  Rng rng(99);
  for (int it = 0; it < 20; ++it) {
    const Scenario s = random_scenario(1000 + it);
    const SplitAssignment a = random_assignment(s.num_dus(), rng);
    const EvalReport r1 = evaluate(s, a);
    const EvalReport r2 = evaluate(s, a);

    // Purity: bit-identical reports.
    CHECK(r1.total_cost == r2.total_cost);
    CHECK(r1.du_costs == r2.du_costs);
    CHECK(r1.violations.link == r2.violations.link);
    CHECK(r1.feasible == r2.feasible);

    // Total equals the sum of the three component vectors.
    double sum = 0.0;
    for (std::size_t k = 0; k < s.num_dus(); ++k)
      sum += r1.du_costs[k] + r1.cu_costs[k] + r1.routing_costs[k];
    CHECK(r1.total_cost == Catch::Approx(sum).epsilon(1e-12));

    // Feasibility flag agrees with a raw re-check of the inequalities.
    CHECK(r1.feasible == raw_feasible(s, a));
    CHECK(r1.feasible == r1.violations.all_zero());
  }
}

TEST_CASE("evaluate: scaling routing weights scales U and leaves V alone") {
  const Scenario base = random_scenario(42);
  Rng rng(5);
  const SplitAssignment a = random_assignment(base.num_dus(), rng);
  const EvalReport r0 = evaluate(base, a);

  for (double gamma : {0.0, 0.25, 1.0, 3.0}) {
    Scenario scaled = base;
    for (Link& l : scaled.topology.links) l.cost_per_mbps *= gamma;
    shortest_paths(scaled.topology);
    // Keep the routes themselves fixed for the comparison: uniform scaling
    // preserves shortest paths, so only the path costs change.
    const EvalReport r = evaluate(scaled, a);
    for (std::size_t k = 0; k < base.num_dus(); ++k) {
      CHECK(r.routing_costs[k] ==
            Catch::Approx(gamma * r0.routing_costs[k]).margin(1e-12));
      CHECK(r.du_costs[k] == r0.du_costs[k]);
      CHECK(r.cu_costs[k] == r0.cu_costs[k]);
    }
  }
}

TEST_CASE("penalization: zero on feasible, linear and homogeneous in mu") {
  Scenario s = single_link_scenario(150.0, 1e-4);
  const EvalReport feasible =
      evaluate(s, SplitAssignment::uniform(1, SplitOption::S0));
  REQUIRE(feasible.feasible);
  CHECK(penalization(feasible, {3.0, 5.0, 7.0, 11.0}) == 0.0);

  // Craft an infeasible report: S3 on a long path violates its delay budget.
  Scenario far = single_link_scenario(150.0, 1e-4, 100000.0, 80.0);
  const EvalReport bad =
      evaluate(far, SplitAssignment::uniform(1, SplitOption::S3));
  REQUIRE_FALSE(bad.feasible);
  const double xi1 = penalization(bad, {1.0, 1.0, 1.0, 1.0});
  const double xi2 = penalization(bad, {2.0, 2.0, 2.0, 2.0});
  CHECK(xi1 > 0.0);
  CHECK(xi2 == Catch::Approx(2.0 * xi1).epsilon(1e-15));

  const auto fam = bad.violations.family_max();
  double manual = 0.0;
  for (double c : fam) manual += c;
  CHECK(xi1 == Catch::Approx(manual).epsilon(1e-15));

  CHECK_THROWS_AS(penalization(bad, {-1.0, 0.0, 0.0, 0.0}),
                  NegativeCoefficient);
}

TEST_CASE("fixed baselines") {
  const Scenario s = random_scenario(77);
  const EvalReport dran = fixed_baseline_cost(s, BaselineMode::DRAN);
  const EvalReport via_eval =
      evaluate(s, SplitAssignment::uniform(s.num_dus(), SplitOption::S0));
  CHECK(dran.total_cost == via_eval.total_cost);
  CHECK(dran.feasible == via_eval.feasible);

  const EvalReport cran = fixed_baseline_cost(s, BaselineMode::CRAN);
  for (double f : cran.flows) CHECK(f == 2500.0);
}
