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

#ifndef VRSPLIT_INFER_HPP
#define VRSPLIT_INFER_HPP

#include <limits>
#include <vector>

#include "vrsplit/model.hpp"
#include "vrsplit/nn.hpp"
#include "vrsplit/rng.hpp"
#include "vrsplit/types.hpp"

namespace vrsplit {

struct InferResult {
  SplitAssignment assignment;  // natural BS order
  EvalReport report;
  double penalized_cost = 0.0;  // J + xi at unit penalty coefficients
  std::size_t source_model = 0;
};

inline constexpr double kInferDefaultTemperature = 15.0;
inline constexpr std::size_t kInferDefaultSamples = 16;

namespace detail {

struct Candidate {
  SplitAssignment assignment;
  EvalReport report;
  double penalized = 0.0;
  std::size_t model = 0;
};

/// Preference order: any feasible candidate beats any infeasible one;
/// feasible candidates compare by J, infeasible ones by the penalized cost;
/// exact ties go to the lexicographically smallest split vector.
inline bool better(const Candidate& x, const Candidate& y) {
  if (x.report.feasible != y.report.feasible) return x.report.feasible;
  const double xv = x.report.feasible ? x.report.total_cost : x.penalized;
  const double yv = y.report.feasible ? y.report.total_cost : y.penalized;
  if (xv != yv) return xv < yv;
  return x.assignment < y.assignment;
}

inline Candidate score(const Scenario& scenario, SplitAssignment assignment,
                       std::size_t model) {
  Candidate c;
  c.assignment = std::move(assignment);
  c.report = evaluate(scenario, c.assignment);
  c.penalized =
      c.report.total_cost + penalization(c.report, {1.0, 1.0, 1.0, 1.0});
  c.model = model;
  return c;
}

inline SplitAssignment to_natural_order(const SplitAssignment& presented,
                                        const std::vector<std::size_t>* order) {
  if (!order) return presented;
  SplitAssignment nat;
  nat.splits.resize(presented.size(), SplitOption::S0);
  for (std::size_t t = 0; t < presented.size(); ++t)
    nat.splits[(*order)[t]] = presented.splits[t];
  return nat;
}

inline std::vector<FeatureVec> presented_features(
    const Scenario& scenario, const std::vector<std::size_t>* order) {
  std::vector<FeatureVec> feats = scenario_features(scenario);
  if (!order) return feats;
  std::vector<FeatureVec> out(feats.size());
  for (std::size_t t = 0; t < feats.size(); ++t) out[t] = feats[(*order)[t]];
  return out;
}

inline InferResult finish(const Candidate& best) {
  InferResult r;
  r.assignment = best.assignment;
  r.report = best.report;
  r.penalized_cost = best.penalized;
  r.source_model = best.model;
  return r;
}

}  // namespace detail

/// Greedy-decodes every model and returns the cheapest feasible candidate;
/// when no candidate is feasible the one with the lowest penalized cost is
/// returned with report.feasible == false. `order` optionally sets the BS
/// presentation order (defaults to natural order).
inline InferResult infer_greedy(const std::vector<PolicyParams>& models,
                                const Scenario& scenario,
                                const std::vector<std::size_t>* order = nullptr) {
  if (models.empty()) throw Error("infer_greedy: no models");
  const std::vector<FeatureVec> feats =
      detail::presented_features(scenario, order);
  std::vector<detail::Candidate> candidates;
  candidates.reserve(models.size());
  for (std::size_t m = 0; m < models.size(); ++m) {
    PolicyRollout roll =
        policy_forward(models[m], feats, DecodeMode::Greedy, 1.0);
    candidates.push_back(detail::score(
        scenario, detail::to_natural_order(roll.assignment, order), m));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (detail::better(candidates[i], candidates[best])) best = i;
  return detail::finish(candidates[best]);
}

/// Temperature-sampling search: per model, `samples` stochastic decodes at
/// softmax temperature `temperature` plus that model's greedy decode are
/// pooled; the winner is chosen like in infer_greedy. Deterministic in the
/// seed.
inline InferResult infer_temperature(const std::vector<PolicyParams>& models,
                                     const Scenario& scenario,
                                     double temperature = kInferDefaultTemperature,
                                     std::size_t samples = kInferDefaultSamples,
                                     std::uint64_t seed = 0,
                                     const std::vector<std::size_t>* order = nullptr) {
  if (models.empty()) throw Error("infer_temperature: no models");
  if (!(temperature > 0)) throw Error("temperature must be > 0");
  if (samples < 1) throw Error("sample count must be >= 1");
  const std::vector<FeatureVec> feats =
      detail::presented_features(scenario, order);
  std::vector<detail::Candidate> candidates;
  candidates.reserve(models.size() * (samples + 1));
  for (std::size_t m = 0; m < models.size(); ++m) {
    PolicyRollout greedy =
        policy_forward(models[m], feats, DecodeMode::Greedy, 1.0);
    candidates.push_back(detail::score(
        scenario, detail::to_natural_order(greedy.assignment, order), m));
    for (std::size_t sidx = 0; sidx < samples; ++sidx) {
      Rng rng(derive_seed(seed, 0x7E, m, sidx));
      PolicyRollout roll = policy_forward(models[m], feats, DecodeMode::Sample,
                                          temperature, &rng);
      candidates.push_back(detail::score(
          scenario, detail::to_natural_order(roll.assignment, order), m));
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (detail::better(candidates[i], candidates[best])) best = i;
  return detail::finish(candidates[best]);
}

/// Percentage excess of a candidate cost over the optimal reference cost.
/// A clearly negative gap means the reference was not optimal and raises
/// NegativeGap; sub-rounding negatives (> -1e-9) clamp to zero.
inline double optimality_gap(const EvalReport& candidate,
                             const EvalReport& reference) {
  if (!reference.feasible)
    throw Error("optimality_gap: reference report must be feasible");
  if (reference.total_cost == 0.0)
    return candidate.total_cost == 0.0 ? 0.0
           : std::numeric_limits<double>::infinity();
  const double gap = 100.0 * (candidate.total_cost - reference.total_cost) /
                     reference.total_cost;
  if (gap < -1e-9)
    throw NegativeGap("candidate is cheaper than the optimal reference (gap " +
                      std::to_string(gap) + "%)");
  return std::max(0.0, gap);
}

}  // namespace vrsplit

#endif  // VRSPLIT_INFER_HPP
