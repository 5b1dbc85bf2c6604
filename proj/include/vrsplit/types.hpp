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

#ifndef VRSPLIT_TYPES_HPP
#define VRSPLIT_TYPES_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace vrsplit {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct NegativeCoefficient : Error { using Error::Error; };
struct MissingGeometry : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct Unreachable : Error { using Error::Error; };
struct GenerationFailed : Error { using Error::Error; };
struct InfeasibleError : Error { using Error::Error; };
struct TooLarge : Error { using Error::Error; };
struct NegativeGap : Error { using Error::Error; };
struct GraphConsumed : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };
struct MissingCheckpoint : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Functional splits
// ---------------------------------------------------------------------------

/// The four functional split options, ordered by increasing centralization:
/// S0 keeps everything at the DU (D-RAN), S3 moves everything but RF to the
/// CU (C-RAN).
enum class SplitOption : std::uint8_t { S0 = 0, S1 = 1, S2 = 2, S3 = 3 };

inline constexpr std::size_t kNumSplits = 4;

inline constexpr std::array<SplitOption, kNumSplits> kAllSplits = {
    SplitOption::S0, SplitOption::S1, SplitOption::S2, SplitOption::S3};

inline constexpr std::size_t index_of(SplitOption o) {
  return static_cast<std::size_t>(o);
}

inline SplitOption split_from_index(std::size_t i) {
  if (i >= kNumSplits) throw Error("split index out of range: " + std::to_string(i));
  return static_cast<SplitOption>(i);
}

inline char split_char(SplitOption o) {
  return static_cast<char>('0' + index_of(o));
}

// ---------------------------------------------------------------------------
// System parameters
// ---------------------------------------------------------------------------

/// Per-deployment constants: compute loads per split, server capacities,
/// instantiation/processing costs and per-split delay budgets.
///
/// Compute loads and capacities are expressed in reference cores (RC) per
/// Mbps and RC respectively; only the products beta * lambda * rho enter the
/// cost, so any consistent unit pair works.
struct SystemParams {
  std::array<double, kNumSplits> rho_du{};     // RC per Mbps at the DU
  std::array<double, kNumSplits> rho_cu{};     // RC per Mbps at the CU
  double cap_cu = 0.0;                         // H_0, RC
  double cap_du = 0.0;                         // H_n, RC (same for every DU)
  double inst_cost_du = 0.0;                   // VM instantiation cost per DU
  double inst_cost_cu = 0.0;                   // VM instantiation cost at CU
  double proc_cost_du = 0.0;                   // processing cost weight at DU
  double proc_cost_cu = 0.0;                   // processing cost weight at CU
  std::array<double, kNumSplits> delay_max_ms{};  // one-way budget per split
  double split3_flow = 0.0;                    // CPRI-like constant flow, Mbps

  /// Reference constants from the measurement-based setup used throughout:
  /// 75/7.5 RC capacities, the per-split load vectors, CU instantiation at
  /// half the DU cost and CU processing at 0.017x the DU rate.
  static SystemParams defaults() {
    SystemParams p;
    p.rho_du = {0.05, 0.04, 0.00325, 0.0};
    p.rho_cu = {0.0, 0.001, 0.00175, 0.05};
    p.cap_cu = 75.0;
    p.cap_du = 7.5;
    p.inst_cost_du = 1.0;
    p.inst_cost_cu = 0.5;
    p.proc_cost_du = 1.0;
    p.proc_cost_cu = 0.017;
    p.delay_max_ms = {30.0, 30.0, 2.0, 0.25};
    p.split3_flow = 2500.0;
    return p;
  }

  /// Throws on negative entries or cap_cu < cap_du. Returns false (without
  /// throwing) when the monotonicity expected of split loads does not hold,
  /// so callers can warn on loaded configs.
  bool validate() const {
    for (std::size_t o = 0; o < kNumSplits; ++o) {
      if (rho_du[o] < 0 || rho_cu[o] < 0)
        throw Error("negative compute load in system params");
      if (delay_max_ms[o] <= 0) throw Error("non-positive delay budget");
    }
    if (cap_cu < 0 || cap_du < 0 || inst_cost_du < 0 || inst_cost_cu < 0 ||
        proc_cost_du < 0 || proc_cost_cu < 0 || split3_flow < 0)
      throw Error("negative capacity or cost in system params");
    if (cap_cu < cap_du) throw Error("cap_cu must be >= cap_du");
    bool monotone = true;
    for (std::size_t o = 1; o < kNumSplits; ++o) {
      if (rho_du[o] > rho_du[o - 1]) monotone = false;
      if (rho_cu[o] < rho_cu[o - 1]) monotone = false;
    }
    return monotone;
  }
};

// ---------------------------------------------------------------------------
// Topology
// ---------------------------------------------------------------------------

enum class NodeKind : std::uint8_t { CU, DU, Router };

inline const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::CU: return "CU";
    case NodeKind::DU: return "DU";
    case NodeKind::Router: return "Router";
  }
  return "?";
}

struct Node {
  std::size_t id = 0;
  NodeKind kind = NodeKind::Router;
  bool has_coords = false;
  double x_km = 0.0;  // planar coordinates; may hold lat/lon for ingested
  double y_km = 0.0;  // files (geodesic flag set on the topology)
};

struct Link {
  std::size_t a = 0;
  std::size_t b = 0;
  double capacity_mbps = 0.0;
  double cost_per_mbps = 0.0;
  // Euclidean or great-circle distance between endpoints; NaN when either
  // endpoint has no coordinates.
  double length_km = std::numeric_limits<double>::quiet_NaN();
};

/// The fixed DU -> CU route: ordered link indices, the node sequence from the
/// DU to the CU, the store-and-forward delay and the summed per-Mbps cost.
struct RoutePath {
  std::vector<std::size_t> edges;   // link indices, DU side first
  std::vector<std::size_t> nodes;   // node ids, nodes.front() is the DU
  double delay_ms = 0.0;
  double cost_per_mbps = 0.0;

  bool uses_link(std::size_t link_index) const {
    for (std::size_t e : edges)
      if (e == link_index) return true;
    return false;
  }
};

struct Topology {
  std::vector<Node> nodes;
  std::vector<Link> links;
  // Paths indexed like du_ids(): paths[k] belongs to the k-th DU in id order.
  std::vector<RoutePath> paths;
  // Coordinates are (lat, lon) degrees instead of planar km.
  bool geodesic = false;

  std::vector<std::size_t> du_ids() const {
    std::vector<std::size_t> out;
    for (const Node& n : nodes)
      if (n.kind == NodeKind::DU) out.push_back(n.id);
    return out;
  }

  std::size_t num_dus() const {
    std::size_t c = 0;
    for (const Node& n : nodes) c += n.kind == NodeKind::DU;
    return c;
  }

  void validate() const {
    std::size_t cu_count = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].id != i) throw Error("node ids must equal their index");
      if (nodes[i].kind == NodeKind::CU) {
        ++cu_count;
        if (i != 0) throw Error("the CU must be node 0");
      }
    }
    if (cu_count != 1) throw Error("topology must contain exactly one CU");
    for (const Link& l : links) {
      if (l.a >= nodes.size() || l.b >= nodes.size() || l.a == l.b)
        throw Error("link endpoints out of range");
      if (!(l.capacity_mbps > 0)) throw Error("link capacities must be > 0");
      if (l.cost_per_mbps < 0) throw Error("link costs must be >= 0");
    }
    if (paths.size() != num_dus())
      throw Error("one path per DU is required");
    for (const RoutePath& p : paths) {
      if (p.edges.empty() || p.nodes.size() != p.edges.size() + 1)
        throw Error("malformed path");
      for (std::size_t e : p.edges)
        if (e >= links.size()) throw Error("path references unknown link");
      if (p.nodes.back() != 0) throw Error("paths must end at the CU");
    }
  }
};

// ---------------------------------------------------------------------------
// Scenario and assignments
// ---------------------------------------------------------------------------

/// A complete problem instance: the RAN graph with routes, the per-DU uplink
/// demand and the system constants.
struct Scenario {
  Topology topology;
  std::vector<double> traffic_mbps;  // aligned with topology.du_ids()
  SystemParams params;

  std::size_t num_dus() const { return traffic_mbps.size(); }

  void validate() const {
    topology.validate();
    params.validate();
    if (traffic_mbps.size() != topology.num_dus())
      throw DimensionMismatch("traffic vector length must match DU count");
    for (double t : traffic_mbps)
      if (!(t >= 0)) throw Error("traffic entries must be >= 0");
  }
};

/// One split choice per DU, aligned with Scenario::traffic_mbps.
struct SplitAssignment {
  std::vector<SplitOption> splits;

  std::size_t size() const { return splits.size(); }

  static SplitAssignment uniform(std::size_t n, SplitOption o) {
    SplitAssignment a;
    a.splits.assign(n, o);
    return a;
  }

  std::string to_string() const {
    std::string s;
    s.reserve(splits.size());
    for (SplitOption o : splits) s.push_back(split_char(o));
    return s;
  }

  static SplitAssignment from_string(const std::string& s) {
    SplitAssignment a;
    a.splits.reserve(s.size());
    for (char c : s) {
      if (c < '0' || c > '3') throw ParseError("invalid split character");
      a.splits.push_back(static_cast<SplitOption>(c - '0'));
    }
    return a;
  }

  friend bool operator==(const SplitAssignment& x, const SplitAssignment& y) {
    return x.splits == y.splits;
  }
  // Lexicographic order on the split vector; used for deterministic
  // tie-breaking everywhere.
  friend bool operator<(const SplitAssignment& x, const SplitAssignment& y) {
    return x.splits < y.splits;
  }
};

// ---------------------------------------------------------------------------
// Evaluation results
// ---------------------------------------------------------------------------

/// Normalized constraint dissatisfaction. Each entry is the positive excess
/// relative to the respective bound, so 0 means satisfied and the entries are
/// comparable across constraint families.
struct ConstraintVector {
  double cu_compute = 0.0;
  std::vector<double> du_compute;  // per DU
  std::vector<double> link;        // per link
  std::vector<double> delay;       // per DU

  static constexpr std::size_t kFamilies = 4;

  bool all_zero() const {
    if (cu_compute != 0.0) return false;
    for (double v : du_compute)
      if (v != 0.0) return false;
    for (double v : link)
      if (v != 0.0) return false;
    for (double v : delay)
      if (v != 0.0) return false;
    return true;
  }

  /// Per-family aggregate (max over entries): [cu, du, link, delay].
  std::array<double, kFamilies> family_max() const {
    std::array<double, kFamilies> out{cu_compute, 0.0, 0.0, 0.0};
    for (double v : du_compute) out[1] = std::max(out[1], v);
    for (double v : link) out[2] = std::max(out[2], v);
    for (double v : delay) out[3] = std::max(out[3], v);
    return out;
  }
};

/// Full cost breakdown of one assignment on one scenario.
struct EvalReport {
  double total_cost = 0.0;             // J
  std::vector<double> du_costs;        // V_n
  std::vector<double> cu_costs;        // V_n0
  std::vector<double> routing_costs;   // U_n0
  std::vector<double> flows;           // r per DU, Mbps
  ConstraintVector violations;
  bool feasible = false;
};

}  // namespace vrsplit

#endif  // VRSPLIT_TYPES_HPP
