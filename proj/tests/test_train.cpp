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
#include <sstream>

#include "support.hpp"
#include "vrsplit/exact.hpp"
#include "vrsplit/train.hpp"

using namespace vrsplit;
using vrsplit::testsupport::single_link_scenario;

namespace {

// Small, fast config for behavioural tests.
TrainConfig tiny_config(std::uint64_t seed, std::size_t epochs,
                        std::size_t batch = 16) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch = batch;
  cfg.hidden = 8;
  cfg.embed = 8;
  cfg.critic_mlp_hidden = 8;
  cfg.seed = seed;
  cfg.threads = 2;
  return cfg;
}

// Every split individually feasible and no shared constraint can bind:
// a short, fat link and an oversized CU.
Scenario slack_scenario() {
  Scenario s = single_link_scenario(150.0, 1e-4, 1e9, 0.5);
  s.params.cap_cu = 1e9;
  return s;
}

bool params_equal(const PolicyParams& a, const PolicyParams& b) {
  const auto ta = tensor_list(a);
  const auto tb = tensor_list(b);
  for (std::size_t i = 0; i < ta.size(); ++i)
    if (ta[i]->v != tb[i]->v) return false;
  return true;
}

}  // namespace

TEST_CASE("train: logged Lagrangian equals cost plus penalization") {
  const Scenario s = testsupport::small_scenario(4, 5);
  const TrainResult res = train(tiny_config(1, 12), s);
  REQUIRE(res.log.epochs.size() == 12);
  for (const EpochLog& row : res.log.epochs) {
    CHECK(row.mean_lagrangian ==
          Catch::Approx(row.mean_cost + row.mean_penalty).epsilon(1e-12));
    CHECK(std::isfinite(row.loss));
    CHECK(std::isfinite(row.critic_loss));
  }
}

TEST_CASE("train: fixed mode keeps mu constant") {
  const Scenario s = testsupport::small_scenario(4, 6);
  TrainConfig cfg = tiny_config(2, 10);
  cfg.penalty = PenaltyMode::Fixed;
  cfg.mu0 = {1.0, 1.0, 1.0, 1.0};
  const TrainResult res = train(cfg, s);
  for (const EpochLog& row : res.log.epochs) CHECK(row.mu == cfg.mu0);
}

TEST_CASE("train: zero mu reduces to unconstrained REINFORCE") {
  const Scenario s = testsupport::small_scenario(4, 6);
  TrainConfig cfg = tiny_config(3, 10);
  cfg.mu0 = {0.0, 0.0, 0.0, 0.0};
  const TrainResult res = train(cfg, s);
  for (const EpochLog& row : res.log.epochs) CHECK(row.mean_penalty == 0.0);
}

TEST_CASE("train: adaptive mu stays put on an all-feasible scenario") {
  const Scenario s = slack_scenario();
  TrainConfig cfg = tiny_config(4, 10);
  cfg.penalty = PenaltyMode::Adaptive;
  const TrainResult res = train(cfg, s);
  for (const EpochLog& row : res.log.epochs) {
    CHECK(row.mu == cfg.mu0);           // C = 0 at every sample
    CHECK(row.mean_penalty == 0.0);     // zero from epoch 0
  }
}

TEST_CASE("train: adaptive mu is non-negative and non-decreasing") {
  const Scenario s = testsupport::small_scenario(4, 7);
  TrainConfig cfg = tiny_config(5, 15);
  cfg.penalty = PenaltyMode::Adaptive;
  cfg.eta_dual = 0.01;
  const TrainResult res = train(cfg, s);
  PenaltyCoefficients prev = cfg.mu0;
  for (const EpochLog& row : res.log.epochs) {
    for (std::size_t f = 0; f < row.mu.size(); ++f) {
      CHECK(row.mu[f] >= 0.0);
      CHECK(row.mu[f] >= prev[f]);
    }
    prev = row.mu;
  }
}

TEST_CASE("train: single-BS policy converges to the brute-force optimum") {
  // 4000 km of fiber rules out S2/S3 by a wide delay margin (the violation
  // penalties dwarf any compute saving at unit mu); S1 undercuts S0 on
  // compute, so S1 is both the constrained optimum and the minimizer of the
  // penalized cost.
  Scenario s = single_link_scenario(150.0, 1e-4, 100000.0, 4000.0);
  const SolveResult opt = solve_bruteforce(s);
  REQUIRE(opt.assignment.splits[0] == SplitOption::S1);

  TrainConfig cfg = tiny_config(6, 900, 32);
  cfg.lr_agent = 2e-3;
  cfg.lr_critic = 1e-2;
  const TrainResult res = train(cfg, s);

  const std::vector<FeatureVec> feats = scenario_features(s);
  const PolicyRollout roll =
      policy_forward(res.state.policy, feats, DecodeMode::Greedy, 1.0);
  CHECK(roll.assignment.splits[0] == SplitOption::S1);
  CHECK(roll.step_probs[0][index_of(SplitOption::S1)] > 0.99);
}

TEST_CASE("train: resume replays the uninterrupted run bit-exactly") {
  const Scenario s = testsupport::small_scenario(4, 8);
  TrainConfig cfg = tiny_config(7, 6);

  const TrainResult full = train(cfg, s);

  TrainConfig head = cfg;
  head.epochs = 3;
  const TrainResult first = train(head, s);
  const TrainResult second = train(cfg, s, &first.state);

  CHECK(params_equal(full.state.policy, second.state.policy));
  CHECK(full.state.mu == second.state.mu);
  REQUIRE(second.log.epochs.size() == 3);  // epochs 3..5
  for (std::size_t i = 0; i < 3; ++i) {
    const EpochLog& a = full.log.epochs[3 + i];
    const EpochLog& b = second.log.epochs[i];
    CHECK(a.epoch == b.epoch);
    CHECK(a.loss == b.loss);
    CHECK(a.mean_cost == b.mean_cost);
    CHECK(a.mean_penalty == b.mean_penalty);
    CHECK(a.critic_loss == b.critic_loss);
  }
}

TEST_CASE("train: thread count does not change the results") {
  const Scenario s = testsupport::small_scenario(4, 9);
  TrainConfig serial = tiny_config(8, 5);
  serial.threads = 1;
  TrainConfig parallel = tiny_config(8, 5);
  parallel.threads = 2;
  const TrainResult a = train(serial, s);
  const TrainResult b = train(parallel, s);
  CHECK(params_equal(a.state.policy, b.state.policy));
  for (std::size_t i = 0; i < a.log.epochs.size(); ++i)
    CHECK(a.log.epochs[i].loss == b.log.epochs[i].loss);
}

TEST_CASE("train: csv stream has the documented columns") {
  const Scenario s = testsupport::small_scenario(4, 10);
  TrainConfig cfg = tiny_config(9, 2);
  std::ostringstream csv;
  cfg.csv = &csv;
  train(cfg, s);
  std::istringstream in(csv.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "epoch,loss,J,xi,L,mu_cu,mu_du,mu_link,mu_delay,critic_loss");
  std::string row;
  std::size_t rows = 0;
  while (std::getline(in, row))
    if (!row.empty()) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("pretrain_ensemble: seed separation and persistence") {
  const Scenario s = testsupport::small_scenario(4, 11);
  const TrainConfig cfg = tiny_config(10, 3);

  const std::vector<TrainResult> solo = pretrain_ensemble(cfg, s, 1);
  const TrainResult direct = train(cfg, s);
  CHECK(params_equal(solo[0].state.policy, direct.state.policy));

  const std::vector<TrainResult> trio = pretrain_ensemble(cfg, s, 3);
  CHECK_FALSE(params_equal(trio[0].state.policy, trio[1].state.policy));
  CHECK_FALSE(params_equal(trio[1].state.policy, trio[2].state.policy));
}
