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

#ifndef VRSPLIT_JSON_IO_HPP
#define VRSPLIT_JSON_IO_HPP

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "vrsplit/topology.hpp"
#include "vrsplit/types.hpp"

namespace vrsplit {

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::set<std::string>& known,
                           const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key()))
      throw ParseError("unknown field \"" + it.key() + "\" in " + where);
}

inline const json& require(const json& obj, const std::string& key,
                           const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw ParseError("missing field \"" + key + "\" in " + where);
  return *it;
}

inline double as_number(const json& v, const std::string& where) {
  if (!v.is_number())
    throw ParseError(where + " must be a number");
  return v.get<double>();
}

inline std::array<double, 4> as_array4(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 4)
    throw ParseError(where + " must be an array of 4 numbers");
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i)
    out[i] = as_number(v[i], where + "[" + std::to_string(i) + "]");
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scenario document
// ---------------------------------------------------------------------------
// {
//   "nodes":  [{"id":0, "kind":"CU", "x_km":.., "y_km":..}, ...],
//   "links":  [{"a":0, "b":1, "capacity_mbps":.., "cost_per_mbps":..}, ...],
//   "traffic_mbps": [..],           // one entry per DU, in node-id order
//   "params": { "rho_du":[..4], "rho_cu":[..4], "cap_cu":.., "cap_du":..,
//               "inst_cost_du":.., "inst_cost_cu":.., "proc_cost_du":..,
//               "proc_cost_cu":.., "delay_max_ms":[..4],
//               "split3_flow_mbps":.. }
// }
//
// Nodes may carry planar coordinates ("x_km"/"y_km") or geographic ones
// ("lat"/"lon", great-circle distances); mixing the two styles in one file is
// rejected. "cost_per_mbps" may be omitted on a link, in which case it is
// charged at 0.01 monetary units per Mbps per km of link length. Unknown
// fields are rejected everywhere.

inline Scenario parse_scenario(const std::string& text) {
  using detail::as_array4;
  using detail::as_number;
  using detail::json;
  using detail::reject_unknown;
  using detail::require;

  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("document root must be an object");
  reject_unknown(doc, {"nodes", "links", "traffic_mbps", "params"}, "document");

  Scenario s;
  const json& jnodes = require(doc, "nodes", "document");
  if (!jnodes.is_array() || jnodes.empty())
    throw ParseError("\"nodes\" must be a non-empty array");

  bool any_planar = false, any_geodesic = false;
  s.topology.nodes.resize(jnodes.size());
  for (std::size_t i = 0; i < jnodes.size(); ++i) {
    const std::string where = "nodes[" + std::to_string(i) + "]";
    const json& jn = jnodes[i];
    if (!jn.is_object()) throw ParseError(where + " must be an object");
    reject_unknown(jn, {"id", "kind", "x_km", "y_km", "lat", "lon"}, where);
    const auto id = require(jn, "id", where).get<std::size_t>();
    if (id != i)
      throw ParseError(where + ": ids must be consecutive from 0, got " +
                       std::to_string(id));
    Node& node = s.topology.nodes[i];
    node.id = id;
    const std::string kind = require(jn, "kind", where).get<std::string>();
    if (kind == "CU") node.kind = NodeKind::CU;
    else if (kind == "DU") node.kind = NodeKind::DU;
    else if (kind == "Router") node.kind = NodeKind::Router;
    else throw ParseError(where + ": kind must be CU, DU or Router");

    const bool planar = jn.contains("x_km") || jn.contains("y_km");
    const bool geodesic = jn.contains("lat") || jn.contains("lon");
    if (planar && geodesic)
      throw ParseError(where + ": use either x_km/y_km or lat/lon");
    if (planar) {
      node.x_km = as_number(require(jn, "x_km", where), where + ".x_km");
      node.y_km = as_number(require(jn, "y_km", where), where + ".y_km");
      node.has_coords = true;
      any_planar = true;
    } else if (geodesic) {
      node.x_km = as_number(require(jn, "lat", where), where + ".lat");
      node.y_km = as_number(require(jn, "lon", where), where + ".lon");
      node.has_coords = true;
      any_geodesic = true;
    }
  }
  if (any_planar && any_geodesic)
    throw ParseError("planar and lat/lon coordinates mixed in one document");
  s.topology.geodesic = any_geodesic;

  const json& jlinks = require(doc, "links", "document");
  if (!jlinks.is_array()) throw ParseError("\"links\" must be an array");
  for (std::size_t i = 0; i < jlinks.size(); ++i) {
    const std::string where = "links[" + std::to_string(i) + "]";
    const json& jl = jlinks[i];
    if (!jl.is_object()) throw ParseError(where + " must be an object");
    reject_unknown(jl, {"a", "b", "capacity_mbps", "cost_per_mbps"}, where);
    Link l;
    l.a = require(jl, "a", where).get<std::size_t>();
    l.b = require(jl, "b", where).get<std::size_t>();
    if (l.a >= s.topology.nodes.size() || l.b >= s.topology.nodes.size() ||
        l.a == l.b)
      throw ParseError(where + ": bad endpoints");
    l.capacity_mbps =
        as_number(require(jl, "capacity_mbps", where), where + ".capacity_mbps");
    if (jl.contains("cost_per_mbps")) {
      l.cost_per_mbps =
          as_number(jl["cost_per_mbps"], where + ".cost_per_mbps");
    } else {
      // Distance-charged routing: 0.01 monetary units per Mbps per km.
      const double d = node_distance_km(s.topology, l.a, l.b);
      if (std::isnan(d))
        throw ParseError(where +
                         ": cost_per_mbps omitted but endpoints lack "
                         "coordinates to derive it");
      l.cost_per_mbps = 0.01 * d;
    }
    s.topology.links.push_back(l);
  }

  const json& jtraffic = require(doc, "traffic_mbps", "document");
  if (!jtraffic.is_array())
    throw ParseError("\"traffic_mbps\" must be an array");
  for (std::size_t i = 0; i < jtraffic.size(); ++i)
    s.traffic_mbps.push_back(
        as_number(jtraffic[i], "traffic_mbps[" + std::to_string(i) + "]"));

  const json& jp = require(doc, "params", "document");
  if (!jp.is_object()) throw ParseError("\"params\" must be an object");
  reject_unknown(jp,
                 {"rho_du", "rho_cu", "cap_cu", "cap_du", "inst_cost_du",
                  "inst_cost_cu", "proc_cost_du", "proc_cost_cu",
                  "delay_max_ms", "split3_flow_mbps"},
                 "params");
  s.params.rho_du = as_array4(require(jp, "rho_du", "params"), "params.rho_du");
  s.params.rho_cu = as_array4(require(jp, "rho_cu", "params"), "params.rho_cu");
  s.params.cap_cu = as_number(require(jp, "cap_cu", "params"), "params.cap_cu");
  s.params.cap_du = as_number(require(jp, "cap_du", "params"), "params.cap_du");
  s.params.inst_cost_du =
      as_number(require(jp, "inst_cost_du", "params"), "params.inst_cost_du");
  s.params.inst_cost_cu =
      as_number(require(jp, "inst_cost_cu", "params"), "params.inst_cost_cu");
  s.params.proc_cost_du =
      as_number(require(jp, "proc_cost_du", "params"), "params.proc_cost_du");
  s.params.proc_cost_cu =
      as_number(require(jp, "proc_cost_cu", "params"), "params.proc_cost_cu");
  s.params.delay_max_ms =
      as_array4(require(jp, "delay_max_ms", "params"), "params.delay_max_ms");
  s.params.split3_flow = as_number(require(jp, "split3_flow_mbps", "params"),
                                   "params.split3_flow_mbps");

  derive_link_lengths(s.topology);
  shortest_paths(s.topology);
  s.validate();
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

inline std::string scenario_to_json(const Scenario& s) {
  using detail::json;
  json doc;
  doc["nodes"] = json::array();
  for (const Node& n : s.topology.nodes) {
    json jn;
    jn["id"] = n.id;
    jn["kind"] = node_kind_name(n.kind);
    if (n.has_coords) {
      if (s.topology.geodesic) {
        jn["lat"] = n.x_km;
        jn["lon"] = n.y_km;
      } else {
        jn["x_km"] = n.x_km;
        jn["y_km"] = n.y_km;
      }
    }
    doc["nodes"].push_back(jn);
  }
  doc["links"] = json::array();
  for (const Link& l : s.topology.links) {
    json jl;
    jl["a"] = l.a;
    jl["b"] = l.b;
    jl["capacity_mbps"] = l.capacity_mbps;
    jl["cost_per_mbps"] = l.cost_per_mbps;
    doc["links"].push_back(jl);
  }
  doc["traffic_mbps"] = s.traffic_mbps;
  json jp;
  jp["rho_du"] = s.params.rho_du;
  jp["rho_cu"] = s.params.rho_cu;
  jp["cap_cu"] = s.params.cap_cu;
  jp["cap_du"] = s.params.cap_du;
  jp["inst_cost_du"] = s.params.inst_cost_du;
  jp["inst_cost_cu"] = s.params.inst_cost_cu;
  jp["proc_cost_du"] = s.params.proc_cost_du;
  jp["proc_cost_cu"] = s.params.proc_cost_cu;
  jp["delay_max_ms"] = s.params.delay_max_ms;
  jp["split3_flow_mbps"] = s.params.split3_flow;
  doc["params"] = jp;
  return doc.dump(2) + "\n";
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scenario file: " + path);
  out << scenario_to_json(s);
}

}  // namespace vrsplit

#endif  // VRSPLIT_JSON_IO_HPP
