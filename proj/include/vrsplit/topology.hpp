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

#ifndef VRSPLIT_TOPOLOGY_HPP
#define VRSPLIT_TOPOLOGY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <tuple>
#include <vector>

#include "vrsplit/model.hpp"
#include "vrsplit/rng.hpp"
#include "vrsplit/types.hpp"

namespace vrsplit {

// ---------------------------------------------------------------------------
// Distances
// ---------------------------------------------------------------------------

inline double euclidean_km(const Node& a, const Node& b) {
  const double dx = a.x_km - b.x_km;
  const double dy = a.y_km - b.y_km;
  return std::sqrt(dx * dx + dy * dy);
}

/// Haversine great-circle distance; coordinates are (lat, lon) in degrees
/// stored in (x_km, y_km). Mean Earth radius 6371.0088 km.
inline double great_circle_km(const Node& a, const Node& b) {
  constexpr double kRadiusKm = 6371.0088;
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double lat1 = a.x_km * kDeg, lat2 = b.x_km * kDeg;
  const double dlat = (b.x_km - a.x_km) * kDeg;
  const double dlon = (b.y_km - a.y_km) * kDeg;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1) * std::cos(lat2) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2.0 * kRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

inline double node_distance_km(const Topology& topo, std::size_t a,
                               std::size_t b) {
  const Node& na = topo.nodes[a];
  const Node& nb = topo.nodes[b];
  if (!na.has_coords || !nb.has_coords)
    return std::numeric_limits<double>::quiet_NaN();
  return topo.geodesic ? great_circle_km(na, nb) : euclidean_km(na, nb);
}

/// Fills Link::length_km for every link from node coordinates. Links whose
/// endpoints lack coordinates keep NaN; path_delay_ms reports those.
inline void derive_link_lengths(Topology& topo) {
  for (Link& l : topo.links) l.length_km = node_distance_km(topo, l.a, l.b);
}

// ---------------------------------------------------------------------------
// Shortest paths
// ---------------------------------------------------------------------------

/// Dijkstra from the CU over the undirected link set with the per-Mbps
/// routing cost as edge weight. Ties are broken by fewer hops, then by the
/// lowest lexicographic node-id sequence read from the DU towards the CU,
/// which makes the routes unique and platform independent.
///
/// Fills topo.paths (ordered like du_ids()) including delays and summed
/// routing costs. Throws Unreachable when some DU has no route.
inline void shortest_paths(Topology& topo) {
  const std::size_t n = topo.nodes.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  // Adjacency: (neighbor, link index).
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(n);
  for (std::size_t e = 0; e < topo.links.size(); ++e) {
    adj[topo.links[e].a].emplace_back(topo.links[e].b, e);
    adj[topo.links[e].b].emplace_back(topo.links[e].a, e);
  }

  std::vector<double> dist(n, kInf);
  std::vector<std::size_t> hops(n, kNone);
  std::vector<std::size_t> parent(n, kNone);      // next node towards the CU
  std::vector<std::size_t> parent_link(n, kNone);
  std::vector<bool> settled(n, false);

  using Key = std::tuple<double, std::size_t, std::size_t>;  // dist,hops,node
  std::priority_queue<Key, std::vector<Key>, std::greater<>> pq;
  dist[0] = 0.0;
  hops[0] = 0;
  pq.emplace(0.0, 0, 0);

  while (!pq.empty()) {
    const auto [d, h, u] = pq.top();
    pq.pop();
    if (settled[u]) continue;
    settled[u] = true;
    for (const auto& [v, e] : adj[u]) {
      if (settled[v]) continue;
      const double nd = d + topo.links[e].cost_per_mbps;
      const std::size_t nh = h + 1;
      if (nd < dist[v] || (nd == dist[v] && nh < hops[v])) {
        dist[v] = nd;
        hops[v] = nh;
        parent[v] = u;
        parent_link[v] = e;
        pq.emplace(nd, nh, v);
      } else if (nd == dist[v] && nh == hops[v] && u < parent[v]) {
        // Equal cost and hop count: prefer the smaller next-hop id. Applied
        // recursively this yields the lexicographically smallest sequence.
        parent[v] = u;
        parent_link[v] = e;
      }
    }
  }

  topo.paths.clear();
  for (std::size_t du : topo.du_ids()) {
    if (!settled[du])
      throw Unreachable("DU " + std::to_string(du) + " has no path to the CU");
    RoutePath p;
    std::size_t v = du;
    p.nodes.push_back(v);
    while (v != 0) {
      p.edges.push_back(parent_link[v]);
      v = parent[v];
      p.nodes.push_back(v);
    }
    for (std::size_t e : p.edges)
      p.cost_per_mbps += topo.links[e].cost_per_mbps;
    p.delay_ms = path_delay_ms(topo, p);
    topo.paths.push_back(std::move(p));
  }
}

// ---------------------------------------------------------------------------
// Waxman generation
// ---------------------------------------------------------------------------

struct WaxmanConfig {
  std::size_t n_du = 10;
  std::size_t n_router = 5;
  double alpha = 0.5;  // link probability scale, (0, 1]
  double beta = 0.1;   // edge length control, (0, 1]
  double area_km = 100.0;
  std::pair<double, double> capacity_range{1000.0, 100000.0};  // Mbps
  std::pair<double, double> link_cost_range{5e-5, 5e-4};       // per Mbps
  std::uint64_t seed = 1;

  void validate() const {
    if (n_du < 1) throw Error("n_du must be >= 1");
    if (!(alpha > 0 && alpha <= 1)) throw Error("alpha must be in (0,1]");
    if (!(beta > 0 && beta <= 1)) throw Error("beta must be in (0,1]");
    if (!(area_km >= 0)) throw Error("area must be >= 0");
    if (capacity_range.first > capacity_range.second ||
        capacity_range.first <= 0)
      throw Error("invalid capacity range");
    if (link_cost_range.first > link_cost_range.second ||
        link_cost_range.first < 0)
      throw Error("invalid link cost range");
  }
};

/// Waxman edge probability alpha * exp(-d / (beta * d_max)). A zero d_max
/// (all nodes co-located) degenerates to probability alpha.
inline double waxman_probability(double alpha, double beta, double dist,
                                 double dist_max) {
  if (dist_max <= 0) return alpha;
  return alpha * std::exp(-dist / (beta * dist_max));
}

/// Generates a random Waxman topology: 1 + n_du + n_router nodes scattered
/// uniformly over the square, pairwise links drawn with the Waxman
/// probability, uniform capacities and per-Mbps costs. The node closest to
/// the area center becomes the CU (re-labelled as node 0); of the remaining
/// nodes the first n_du in draw order become DUs. Disconnected draws are
/// repaired by adding the shortest missing inter-component edge until the
/// graph is connected. Deterministic in the seed.
inline Topology generate_waxman(const WaxmanConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const std::size_t total = 1 + cfg.n_du + cfg.n_router;

  std::vector<double> xs(total), ys(total);
  for (std::size_t i = 0; i < total; ++i) {
    xs[i] = rng.uniform(0.0, cfg.area_km);
    ys[i] = rng.uniform(0.0, cfg.area_km);
  }

  double dist_max = 0.0;
  auto dist = [&](std::size_t i, std::size_t j) {
    const double dx = xs[i] - xs[j], dy = ys[i] - ys[j];
    return std::sqrt(dx * dx + dy * dy);
  };
  for (std::size_t i = 0; i < total; ++i)
    for (std::size_t j = i + 1; j < total; ++j)
      dist_max = std::max(dist_max, dist(i, j));

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < total; ++i)
    for (std::size_t j = i + 1; j < total; ++j)
      if (rng.uniform() < waxman_probability(cfg.alpha, cfg.beta, dist(i, j),
                                             dist_max))
        edges.emplace_back(i, j);

  // Connectivity repair: greedily join the closest pair of distinct
  // components. Each added edge reduces the component count by one, so at
  // most total-1 repairs are needed.
  std::vector<std::size_t> comp(total);
  auto rebuild_components = [&] {
    for (std::size_t i = 0; i < total; ++i) comp[i] = i;
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& [a, b] : edges) {
        const std::size_t c = std::min(comp[a], comp[b]);
        if (comp[a] != c || comp[b] != c) {
          // Relabel the larger id; loop until settled.
          const std::size_t from = std::max(comp[a], comp[b]);
          for (std::size_t i = 0; i < total; ++i)
            if (comp[i] == from) comp[i] = c;
          changed = true;
        }
      }
    }
  };
  rebuild_components();
  std::size_t repairs = 0;
  while (true) {
    bool connected = true;
    for (std::size_t i = 1; i < total; ++i)
      if (comp[i] != comp[0]) connected = false;
    if (connected) break;
    if (++repairs > total)
      throw GenerationFailed("connectivity repair did not converge");
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::size_t, std::size_t> best_pair{0, 0};
    for (std::size_t i = 0; i < total; ++i)
      for (std::size_t j = i + 1; j < total; ++j) {
        if (comp[i] == comp[j]) continue;
        const double d = dist(i, j);
        if (d < best) {
          best = d;
          best_pair = {i, j};
        }
      }
    edges.push_back(best_pair);
    rebuild_components();
  }

  // CU: closest node to the area center, smallest index on ties.
  const double cx = cfg.area_km / 2, cy = cfg.area_km / 2;
  std::size_t cu = 0;
  double cu_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < total; ++i) {
    const double dx = xs[i] - cx, dy = ys[i] - cy;
    const double d = std::sqrt(dx * dx + dy * dy);
    if (d < cu_dist) {
      cu_dist = d;
      cu = i;
    }
  }

  // Relabel: CU -> 0, everyone else keeps draw order. First n_du of the
  // remaining nodes become DUs, the rest routers.
  std::vector<std::size_t> new_id(total);
  new_id[cu] = 0;
  std::size_t next = 1;
  for (std::size_t i = 0; i < total; ++i)
    if (i != cu) new_id[i] = next++;

  Topology topo;
  topo.nodes.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    Node& node = topo.nodes[new_id[i]];
    node.id = new_id[i];
    node.has_coords = true;
    node.x_km = xs[i];
    node.y_km = ys[i];
    node.kind = node.id == 0 ? NodeKind::CU
                : node.id <= cfg.n_du ? NodeKind::DU
                                      : NodeKind::Router;
  }
  topo.links.reserve(edges.size());
  for (const auto& [a, b] : edges) {
    Link l;
    l.a = std::min(new_id[a], new_id[b]);
    l.b = std::max(new_id[a], new_id[b]);
    l.capacity_mbps =
        rng.uniform(cfg.capacity_range.first, cfg.capacity_range.second);
    l.cost_per_mbps =
        rng.uniform(cfg.link_cost_range.first, cfg.link_cost_range.second);
    topo.links.push_back(l);
  }

  derive_link_lengths(topo);
  shortest_paths(topo);
  topo.validate();
  return topo;
}

}  // namespace vrsplit

#endif  // VRSPLIT_TOPOLOGY_HPP
