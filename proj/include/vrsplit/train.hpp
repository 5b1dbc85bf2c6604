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

#ifndef VRSPLIT_TRAIN_HPP
#define VRSPLIT_TRAIN_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "vrsplit/adam.hpp"
#include "vrsplit/checkpoint.hpp"
#include "vrsplit/exact.hpp"
#include "vrsplit/model.hpp"
#include "vrsplit/nn.hpp"
#include "vrsplit/rng.hpp"
#include "vrsplit/types.hpp"

namespace vrsplit {

enum class PenaltyMode { Fixed, Adaptive };

struct TrainConfig {
  std::size_t epochs = 1000;
  std::size_t batch = 128;
  double lr_agent = 1e-4;   // eta_a
  double lr_critic = 5e-3;  // eta_b
  PenaltyMode penalty = PenaltyMode::Fixed;
  PenaltyCoefficients mu0{1.0, 1.0, 1.0, 1.0};
  double eta_dual = 1e-3;  // dual ascent step for the adaptive mode
  std::uint64_t seed = 1;
  std::size_t hidden = 32;
  std::size_t embed = 32;
  std::size_t critic_mlp_hidden = 32;
  double temperature = 1.0;  // training-time softmax temperature
  bool clip_gradients = false;
  double clip_norm = 1.0;
  std::size_t threads = 0;          // 0 = hardware concurrency; 1 = serial
  std::size_t checkpoint_every = 0; // 0 = final checkpoint only
  std::string checkpoint_path;      // used when checkpoint_every > 0
  std::ostream* csv = nullptr;      // streamed per-epoch log, optional

  void validate() const {
    if (batch < 1) throw Error("batch size must be >= 1");
    if (epochs < 1) throw Error("epoch count must be >= 1");
    if (!(lr_agent > 0) || !(lr_critic > 0))
      throw Error("learning rates must be > 0");
    if (!(temperature > 0)) throw Error("temperature must be > 0");
    if (eta_dual < 0) throw Error("dual step size must be >= 0");
    for (double m : mu0)
      if (m < 0) throw NegativeCoefficient("mu0 entries must be >= 0");
  }
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;         // mean (L - b) * log pi, the surrogate
  double mean_cost = 0.0;    // mean J
  double mean_penalty = 0.0; // mean xi
  double mean_lagrangian = 0.0;  // mean L
  PenaltyCoefficients mu{};
  double critic_loss = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
};

struct TrainResult {
  TrainingCheckpoint state;
  TrainLog log;
};

inline const char* kTrainCsvHeader =
    "epoch,loss,J,xi,L,mu_cu,mu_du,mu_link,mu_delay,critic_loss";

inline std::string train_csv_row(const EpochLog& row) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                row.epoch, row.loss, row.mean_cost, row.mean_penalty,
                row.mean_lagrangian, row.mu[0], row.mu[1], row.mu[2], row.mu[3],
                row.critic_loss);
  return buf;
}

namespace detail {

// Stream tags for derive_seed.
inline constexpr std::uint64_t kStreamPolicyInit = 0x70;
inline constexpr std::uint64_t kStreamCriticInit = 0x71;
inline constexpr std::uint64_t kStreamRollout = 0x72;
inline constexpr std::uint64_t kStreamEnsemble = 0x73;

struct SampleOutcome {
  std::vector<Tensor> policy_grads;
  std::vector<Tensor> critic_grads;
  double cost = 0.0;       // J
  double penalty = 0.0;    // xi
  double lagrangian = 0.0; // L
  double baseline = 0.0;   // b
  double log_prob = 0.0;
  double surrogate = 0.0;   // (L - b) * log pi
  double critic_loss = 0.0; // (b - L)^2
  std::array<double, ConstraintVector::kFamilies> dissatisfaction{};
};

inline double grad_norm(const std::vector<Tensor>& grads) {
  double sq = 0.0;
  for (const Tensor& g : grads)
    for (double x : g.v) sq += x * x;
  return std::sqrt(sq);
}

}  // namespace detail

/// One-time-step constrained Monte-Carlo policy gradient with a
/// self-competing critic baseline (Algorithm: per epoch draw B i.i.d inputs
/// with fresh BS presentation orders and feature scalings, sample the splits,
/// score them on the fixed scenario, update the agent with the
/// baseline-corrected log-likelihood gradient and the critic with the MSE
/// objective, both via Adam; in the adaptive mode the penalty coefficients
/// then take a projected dual-ascent step on the batch-mean dissatisfaction).
///
/// All randomness is derived from (seed, epoch, sample), so a run resumed
/// from a checkpoint replays exactly the epochs an uninterrupted run would
/// have produced, and results do not depend on the thread count.
inline TrainResult train(const TrainConfig& cfg, const Scenario& scenario,
                         const TrainingCheckpoint* resume = nullptr) {
  cfg.validate();
  scenario.validate();
  const std::size_t n = scenario.num_dus();
  if (n == 0) throw Error("cannot train on a scenario without DUs");

  TrainResult result;
  TrainingCheckpoint& state = result.state;
  std::size_t start_epoch = 0;
  if (resume) {
    state = *resume;
    start_epoch = std::size_t(state.epoch);
    if (state.seed != cfg.seed)
      throw Error("resume seed does not match the configured seed");
  } else {
    state.seed = cfg.seed;
    state.mu = cfg.mu0;
    Rng policy_rng(derive_seed(cfg.seed, detail::kStreamPolicyInit));
    state.policy = init_policy(kFeatureCount, cfg.embed, cfg.hidden, policy_rng);
    Rng critic_rng(derive_seed(cfg.seed, detail::kStreamCriticInit));
    state.critic = init_critic(kFeatureCount, cfg.embed, cfg.hidden,
                               cfg.critic_mlp_hidden, critic_rng);
    state.agent_opt = AdamState::like(tensor_list(state.policy));
    state.critic_opt = AdamState::like(tensor_list(state.critic));
  }

  const std::vector<Tensor*> policy_tensors = tensor_list(state.policy);
  const std::vector<Tensor*> critic_tensors = tensor_list(state.critic);
  const std::vector<FeatureVec> base_features = scenario_features(scenario);

  const AdamConfig agent_adam{cfg.lr_agent};
  const AdamConfig critic_adam{cfg.lr_critic};

  std::size_t threads = cfg.threads ? cfg.threads
                                    : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, cfg.batch);

  if (cfg.csv) *cfg.csv << kTrainCsvHeader << "\n";

  for (std::size_t epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    std::vector<detail::SampleOutcome> batch(cfg.batch);

    auto run_sample = [&](std::size_t i) {
      Rng rng(derive_seed(cfg.seed, detail::kStreamRollout, epoch, i));
      const std::vector<std::size_t> order = rng.permutation(n);
      const double lambda_scale = rng.uniform();
      const double zeta_scale = rng.uniform();

      std::vector<FeatureVec> feats(n);
      for (std::size_t t = 0; t < n; ++t) feats[t] = base_features[order[t]];
      augment_features(feats, lambda_scale, zeta_scale);

      PolicyRollout roll = policy_forward(state.policy, feats,
                                          DecodeMode::Sample, cfg.temperature,
                                          &rng);
      SplitAssignment natural;
      natural.splits.resize(n, SplitOption::S0);
      for (std::size_t t = 0; t < n; ++t)
        natural.splits[order[t]] = roll.assignment.splits[t];

      const EvalReport report = evaluate(scenario, natural);
      detail::SampleOutcome& out = batch[i];
      out.dissatisfaction = report.violations.family_max();
      out.cost = report.total_cost;
      out.penalty = penalization(report, state.mu);
      out.lagrangian = out.cost + out.penalty;
      out.log_prob = roll.log_prob;

      CriticEval critic_eval = critic_forward(state.critic, feats);
      out.baseline = critic_eval.value;

      const double advantage = out.lagrangian - out.baseline;
      out.surrogate = advantage * out.log_prob;
      const Graph::Var agent_root =
          roll.graph.scale(roll.log_prob_var, advantage);
      roll.graph.backward(agent_root);
      out.policy_grads.reserve(roll.param_leaves.size());
      for (Graph::Var leaf : roll.param_leaves)
        out.policy_grads.push_back(roll.graph.grad(leaf));

      const Graph::Var err =
          critic_eval.graph.sub_const(critic_eval.out, out.lagrangian);
      const Graph::Var critic_root = critic_eval.graph.square(err);
      out.critic_loss = critic_eval.graph.val(critic_root).v[0];
      critic_eval.graph.backward(critic_root);
      out.critic_grads.reserve(critic_eval.param_leaves.size());
      for (Graph::Var leaf : critic_eval.param_leaves)
        out.critic_grads.push_back(critic_eval.graph.grad(leaf));
    };

    if (threads <= 1) {
      for (std::size_t i = 0; i < cfg.batch; ++i) run_sample(i);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(threads);
      for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
          for (std::size_t i = t; i < cfg.batch; i += threads) run_sample(i);
        });
      for (std::thread& t : pool) t.join();
    }

    // Deterministic aggregation: sample-index order regardless of threading.
    std::vector<Tensor> policy_grad, critic_grad;
    for (const Tensor* t : policy_tensors)
      policy_grad.push_back(Tensor::zeros_like(*t));
    for (const Tensor* t : critic_tensors)
      critic_grad.push_back(Tensor::zeros_like(*t));
    EpochLog row;
    row.epoch = epoch;
    std::array<double, ConstraintVector::kFamilies> mean_c{};
    for (std::size_t i = 0; i < cfg.batch; ++i) {
      const detail::SampleOutcome& s = batch[i];
      if (!std::isfinite(s.lagrangian) || !std::isfinite(s.log_prob) ||
          !std::isfinite(s.baseline))
        throw NonFiniteLoss(
            "non-finite loss at epoch " + std::to_string(epoch) + " sample " +
            std::to_string(i) + ": J=" + std::to_string(s.cost) +
            " xi=" + std::to_string(s.penalty) + " b=" +
            std::to_string(s.baseline) + " logpi=" + std::to_string(s.log_prob));
      for (std::size_t p = 0; p < policy_grad.size(); ++p)
        for (std::size_t j = 0; j < policy_grad[p].numel(); ++j)
          policy_grad[p].v[j] += s.policy_grads[p].v[j];
      for (std::size_t p = 0; p < critic_grad.size(); ++p)
        for (std::size_t j = 0; j < critic_grad[p].numel(); ++j)
          critic_grad[p].v[j] += s.critic_grads[p].v[j];
      row.loss += s.surrogate;
      row.mean_cost += s.cost;
      row.mean_penalty += s.penalty;
      row.mean_lagrangian += s.lagrangian;
      row.critic_loss += s.critic_loss;
      for (std::size_t f = 0; f < mean_c.size(); ++f)
        mean_c[f] += s.dissatisfaction[f];
    }
    const double inv_b = 1.0 / double(cfg.batch);
    for (Tensor& g : policy_grad)
      for (double& x : g.v) x *= inv_b;
    for (Tensor& g : critic_grad)
      for (double& x : g.v) x *= inv_b;
    row.loss *= inv_b;
    row.mean_cost *= inv_b;
    row.mean_penalty *= inv_b;
    row.mean_lagrangian *= inv_b;
    row.critic_loss *= inv_b;
    for (double& c : mean_c) c *= inv_b;

    if (cfg.clip_gradients) {
      const double norm = detail::grad_norm(policy_grad);
      if (norm > cfg.clip_norm && norm > 0) {
        const double scale = cfg.clip_norm / norm;
        for (Tensor& g : policy_grad)
          for (double& x : g.v) x *= scale;
      }
    }

    adam_step(state.agent_opt, policy_tensors, policy_grad, agent_adam);
    adam_step(state.critic_opt, critic_tensors, critic_grad, critic_adam);

    if (cfg.penalty == PenaltyMode::Adaptive) {
      for (std::size_t f = 0; f < state.mu.size(); ++f)
        state.mu[f] = std::max(0.0, state.mu[f] + cfg.eta_dual * mean_c[f]);
    }
    row.mu = state.mu;
    state.epoch = epoch + 1;

    result.log.epochs.push_back(row);
    if (cfg.csv) *cfg.csv << train_csv_row(row) << "\n";
    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_path.empty() &&
        (epoch + 1) % cfg.checkpoint_every == 0)
      save_checkpoint(state, cfg.checkpoint_path);
  }

  return result;
}

/// M independent training runs; model 0 uses the configured seed (so M=1
/// reproduces a plain train() call) and further models derive their own.
/// Checkpoints are written to `out_dir` as model_<k>.ckpt when a directory is
/// given.
inline std::vector<TrainResult> pretrain_ensemble(const TrainConfig& cfg,
                                                  const Scenario& scenario,
                                                  std::size_t models,
                                                  const std::string& out_dir = "") {
  if (models < 1) throw Error("model count must be >= 1");
  std::vector<TrainResult> out;
  out.reserve(models);
  for (std::size_t k = 0; k < models; ++k) {
    TrainConfig sub = cfg;
    if (k > 0) sub.seed = derive_seed(cfg.seed, detail::kStreamEnsemble, k);
    sub.checkpoint_path.clear();
    sub.checkpoint_every = 0;
    out.push_back(train(sub, scenario));
    if (!out_dir.empty())
      save_checkpoint(out.back().state,
                      out_dir + "/model_" + std::to_string(k) + ".ckpt");
  }
  return out;
}

}  // namespace vrsplit

#endif  // VRSPLIT_TRAIN_HPP
