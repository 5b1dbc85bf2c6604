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
#include <limits>
#include <set>

#include "support.hpp"
#include "vrsplit/json_io.hpp"
#include "vrsplit/topology.hpp"

using namespace vrsplit;

namespace {

// Independent Bellman-Ford distances from the CU; oracle for Dijkstra.
std::vector<double> bellman_ford_from_cu(const Topology& t) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(t.nodes.size(), kInf);
  dist[0] = 0.0;
  for (std::size_t round = 0; round + 1 < t.nodes.size(); ++round) {
    bool changed = false;
    for (const Link& l : t.links) {
      if (dist[l.a] + l.cost_per_mbps < dist[l.b]) {
        dist[l.b] = dist[l.a] + l.cost_per_mbps;
        changed = true;
      }
      if (dist[l.b] + l.cost_per_mbps < dist[l.a]) {
        dist[l.a] = dist[l.b] + l.cost_per_mbps;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return dist;
}

bool is_connected(const Topology& t) {
  std::vector<bool> seen(t.nodes.size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (const Link& l : t.links) {
      const std::size_t v = l.a == u ? l.b : l.b == u ? l.a : u;
      if (v != u && !seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  for (bool b : seen)
    if (!b) return false;
  return true;
}

}  // namespace

TEST_CASE("waxman: co-located nodes with alpha=1 give a complete graph") {
  WaxmanConfig cfg;
  cfg.n_du = 4;
  cfg.n_router = 3;
  cfg.alpha = 1.0;
  cfg.beta = 1.0;
  cfg.area_km = 0.0;  // every node at the same point
  cfg.seed = 3;
  const Topology t = generate_waxman(cfg);
  const std::size_t n = t.nodes.size();
  CHECK(t.links.size() == n * (n - 1) / 2);
}

TEST_CASE("waxman: seed determinism") {
  WaxmanConfig cfg;
  cfg.n_du = 8;
  cfg.n_router = 4;
  cfg.seed = 99;
  const Topology a = generate_waxman(cfg);
  const Topology b = generate_waxman(cfg);
  REQUIRE(a.nodes.size() == b.nodes.size());
  REQUIRE(a.links.size() == b.links.size());
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    CHECK(a.nodes[i].x_km == b.nodes[i].x_km);
    CHECK(a.nodes[i].y_km == b.nodes[i].y_km);
    CHECK(a.nodes[i].kind == b.nodes[i].kind);
  }
  for (std::size_t i = 0; i < a.links.size(); ++i) {
    CHECK(a.links[i].a == b.links[i].a);
    CHECK(a.links[i].b == b.links[i].b);
    CHECK(a.links[i].capacity_mbps == b.links[i].capacity_mbps);
    CHECK(a.links[i].cost_per_mbps == b.links[i].cost_per_mbps);
  }
}

TEST_CASE("waxman: edge count within 3 sigma of the probability-sum oracle") {
  // The oracle sums p_ij = alpha*exp(-d/(beta*D_max)) over all pairs from the
  // same coordinates the generator drew. Connectivity repair can only add a
  // handful of edges, which is covered by the slack term below.
  WaxmanConfig cfg;
  cfg.n_du = 79;
  cfg.n_router = 20;
  cfg.alpha = 0.5;
  cfg.beta = 0.1;
  cfg.area_km = 100.0;
  cfg.seed = 12345;
  const Topology t = generate_waxman(cfg);
  const std::size_t n = t.nodes.size();
  REQUIRE(n == 100);

  double dmax = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      dmax = std::max(dmax, euclidean_km(t.nodes[i], t.nodes[j]));
  double mean = 0.0, var = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = waxman_probability(
          cfg.alpha, cfg.beta, euclidean_km(t.nodes[i], t.nodes[j]), dmax);
      mean += p;
      var += p * (1 - p);
    }
  const double sigma = std::sqrt(var);
  const double count = double(t.links.size());
  INFO("edges=" << count << " mean=" << mean << " sigma=" << sigma);
  CHECK(count >= mean - 3 * sigma);
  CHECK(count <= mean + 3 * sigma + double(n));  // + n covers repair edges
}

TEST_CASE("waxman: generated topologies satisfy the invariants") {
  for (std::uint64_t seed : {1ull, 7ull, 42ull, 1234ull, 77777ull}) {
    WaxmanConfig cfg;
    cfg.n_du = 6;
    cfg.n_router = 3;
    cfg.alpha = 0.5;
    cfg.beta = 0.2;
    cfg.seed = seed;
    const Topology t = generate_waxman(cfg);
    CHECK_NOTHROW(t.validate());
    CHECK(is_connected(t));
    CHECK(t.nodes[0].kind == NodeKind::CU);
    CHECK(t.num_dus() == 6);
    for (const Link& l : t.links) CHECK(l.capacity_mbps > 0.0);
  }
}

TEST_CASE("shortest_paths: the line graph has its unique path") {
  Scenario s = testsupport::line_scenario();
  REQUIRE(s.topology.paths.size() == 1);
  const RoutePath& p = s.topology.paths[0];
  CHECK(p.nodes == std::vector<std::size_t>{1, 2, 0});
  CHECK(p.edges.size() == 2);
}

TEST_CASE("shortest_paths: equal-cost tie prefers fewer hops") {
  // DU(1) -> CU(0) directly at cost 2, or via router(2) with 1+1.
  Topology t;
  t.nodes = {{0, NodeKind::CU, false, 0, 0},
             {1, NodeKind::DU, false, 0, 0},
             {2, NodeKind::Router, false, 0, 0}};
  t.links = {{0, 1, 1000.0, 2.0, 0.0},
             {1, 2, 1000.0, 1.0, 0.0},
             {0, 2, 1000.0, 1.0, 0.0}};
  shortest_paths(t);
  CHECK(t.paths[0].nodes == std::vector<std::size_t>{1, 0});
  CHECK(t.paths[0].cost_per_mbps == 2.0);
}

TEST_CASE("shortest_paths: equal cost and hops prefer the smaller node ids") {
  // Two 2-hop routes of equal cost: via router 2 or router 3.
  Topology t;
  t.nodes = {{0, NodeKind::CU, false, 0, 0},
             {1, NodeKind::DU, false, 0, 0},
             {2, NodeKind::Router, false, 0, 0},
             {3, NodeKind::Router, false, 0, 0}};
  t.links = {{1, 2, 1000.0, 1.0, 0.0},
             {0, 2, 1000.0, 1.0, 0.0},
             {1, 3, 1000.0, 1.0, 0.0},
             {0, 3, 1000.0, 1.0, 0.0}};
  shortest_paths(t);
  CHECK(t.paths[0].nodes == std::vector<std::size_t>{1, 2, 0});
}

TEST_CASE("shortest_paths: costs match the Bellman-Ford oracle") {
  for (std::uint64_t seed : {5ull, 17ull, 23ull}) {
    WaxmanConfig cfg;
    cfg.n_du = 30;
    cfg.n_router = 19;  // 50 nodes total
    cfg.alpha = 0.6;
    cfg.beta = 0.3;
    cfg.seed = seed;
    Topology t = generate_waxman(cfg);
    const std::vector<double> oracle = bellman_ford_from_cu(t);
    const std::vector<std::size_t> dus = t.du_ids();
    for (std::size_t k = 0; k < dus.size(); ++k)
      CHECK(t.paths[k].cost_per_mbps ==
            Catch::Approx(oracle[dus[k]]).epsilon(1e-12));
  }
}

TEST_CASE("shortest_paths: unreachable DU raises") {
  Topology t;
  t.nodes = {{0, NodeKind::CU, false, 0, 0}, {1, NodeKind::DU, false, 0, 0}};
  CHECK_THROWS_AS(shortest_paths(t), Unreachable);
}

TEST_CASE("ingest: distance-derived link costs") {
  // Two nodes 100 km apart, cost omitted: 0.01 * 100 = 1.0 per Mbps.
  const std::string doc = R"({
    "nodes": [
      {"id": 0, "kind": "CU", "x_km": 0.0, "y_km": 0.0},
      {"id": 1, "kind": "DU", "x_km": 100.0, "y_km": 0.0}
    ],
    "links": [{"a": 0, "b": 1, "capacity_mbps": 50000}],
    "traffic_mbps": [100.0],
    "params": {
      "rho_du": [0.05, 0.04, 0.00325, 0.0],
      "rho_cu": [0.0, 0.001, 0.00175, 0.05],
      "cap_cu": 75.0, "cap_du": 7.5,
      "inst_cost_du": 1.0, "inst_cost_cu": 0.5,
      "proc_cost_du": 1.0, "proc_cost_cu": 0.017,
      "delay_max_ms": [30.0, 30.0, 2.0, 0.25],
      "split3_flow_mbps": 2500.0
    }
  })";
  const Scenario s = parse_scenario(doc);
  CHECK(s.topology.links[0].cost_per_mbps == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(s.topology.links[0].length_km == Catch::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("ingest: explicit costs win over distance charging") {
  const std::string doc = R"({
    "nodes": [
      {"id": 0, "kind": "CU", "x_km": 0.0, "y_km": 0.0},
      {"id": 1, "kind": "DU", "x_km": 100.0, "y_km": 0.0}
    ],
    "links": [{"a": 0, "b": 1, "capacity_mbps": 50000, "cost_per_mbps": 0.25}],
    "traffic_mbps": [100.0],
    "params": {
      "rho_du": [0.05, 0.04, 0.00325, 0.0],
      "rho_cu": [0.0, 0.001, 0.00175, 0.05],
      "cap_cu": 75.0, "cap_du": 7.5,
      "inst_cost_du": 1.0, "inst_cost_cu": 0.5,
      "proc_cost_du": 1.0, "proc_cost_cu": 0.017,
      "delay_max_ms": [30.0, 30.0, 2.0, 0.25],
      "split3_flow_mbps": 2500.0
    }
  })";
  CHECK(parse_scenario(doc).topology.links[0].cost_per_mbps == 0.25);
}

TEST_CASE("ingest: co-located nodes have zero propagation delay") {
  const std::string doc = R"({
    "nodes": [
      {"id": 0, "kind": "CU", "x_km": 5.0, "y_km": 5.0},
      {"id": 1, "kind": "DU", "x_km": 5.0, "y_km": 5.0}
    ],
    "links": [{"a": 0, "b": 1, "capacity_mbps": 1200000}],
    "traffic_mbps": [100.0],
    "params": {
      "rho_du": [0.05, 0.04, 0.00325, 0.0],
      "rho_cu": [0.0, 0.001, 0.00175, 0.05],
      "cap_cu": 75.0, "cap_du": 7.5,
      "inst_cost_du": 1.0, "inst_cost_cu": 0.5,
      "proc_cost_du": 1.0, "proc_cost_cu": 0.017,
      "delay_max_ms": [30.0, 30.0, 2.0, 0.25],
      "split3_flow_mbps": 2500.0
    }
  })";
  const Scenario s = parse_scenario(doc);
  // 12000/1.2e6 = 0.01 us transmission + 5 us processing, no propagation.
  CHECK(s.topology.paths[0].delay_ms == Catch::Approx(0.00501).epsilon(1e-12));
}

TEST_CASE("ingest: unknown fields and malformed documents are rejected") {
  CHECK_THROWS_AS(parse_scenario("{"), ParseError);
  CHECK_THROWS_AS(parse_scenario(R"({"nodes": [], "links": [],
    "traffic_mbps": [], "params": {}, "extra": 1})"),
                  ParseError);
  // Unknown node field.
  CHECK_THROWS_AS(parse_scenario(R"({
    "nodes": [{"id": 0, "kind": "CU", "color": "red"}],
    "links": [], "traffic_mbps": [], "params": {}})"),
                  ParseError);
}

TEST_CASE("ingest: lat/lon files use great-circle distances") {
  // One degree of latitude is ~111.19 km on the reference sphere.
  const std::string doc = R"({
    "nodes": [
      {"id": 0, "kind": "CU", "lat": 0.0, "lon": 0.0},
      {"id": 1, "kind": "DU", "lat": 1.0, "lon": 0.0}
    ],
    "links": [{"a": 0, "b": 1, "capacity_mbps": 50000}],
    "traffic_mbps": [100.0],
    "params": {
      "rho_du": [0.05, 0.04, 0.00325, 0.0],
      "rho_cu": [0.0, 0.001, 0.00175, 0.05],
      "cap_cu": 75.0, "cap_du": 7.5,
      "inst_cost_du": 1.0, "inst_cost_cu": 0.5,
      "proc_cost_du": 1.0, "proc_cost_cu": 0.017,
      "delay_max_ms": [30.0, 30.0, 2.0, 0.25],
      "split3_flow_mbps": 2500.0
    }
  })";
  const Scenario s = parse_scenario(doc);
  CHECK(s.topology.links[0].length_km ==
        Catch::Approx(111.1949).epsilon(1e-4));
  CHECK(s.topology.links[0].cost_per_mbps ==
        Catch::Approx(1.111949).epsilon(1e-4));
}

TEST_CASE("scenario json round-trips") {
  const Scenario s = testsupport::random_scenario(4242);
  const std::string text = scenario_to_json(s);
  const Scenario back = parse_scenario(text);
  CHECK(back.num_dus() == s.num_dus());
  CHECK(back.traffic_mbps == s.traffic_mbps);
  REQUIRE(back.topology.links.size() == s.topology.links.size());
  for (std::size_t i = 0; i < s.topology.links.size(); ++i) {
    CHECK(back.topology.links[i].capacity_mbps ==
          s.topology.links[i].capacity_mbps);
    CHECK(back.topology.links[i].cost_per_mbps ==
          s.topology.links[i].cost_per_mbps);
  }
  // Same routes, hence identical evaluation of any assignment.
  const auto a = SplitAssignment::uniform(s.num_dus(), SplitOption::S2);
  CHECK(evaluate(back, a).total_cost == evaluate(s, a).total_cost);
}
