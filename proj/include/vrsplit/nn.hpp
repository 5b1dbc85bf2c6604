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

#ifndef VRSPLIT_NN_HPP
#define VRSPLIT_NN_HPP

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "vrsplit/model.hpp"
#include "vrsplit/rng.hpp"
#include "vrsplit/tensor.hpp"
#include "vrsplit/types.hpp"

namespace vrsplit {

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Single-layer LSTM cell over the concatenated [h_{t-1}; input].
struct LstmCellParams {
  Tensor w_forget, w_input, w_cell, w_output;  // each (H, H+E)
  Tensor b_forget, b_input, b_cell, b_output;  // each (H)

  std::size_t hidden() const { return w_forget.rows(); }
  std::size_t input() const { return w_forget.cols() - w_forget.rows(); }
};

/// Additive (Bahdanau-style) attention: score = v^T tanh(w_query h + w_keys g).
struct AttentionParams {
  Tensor v;        // (H)
  Tensor w_query;  // (H, H)
  Tensor w_keys;   // (H, H)
};

struct PolicyParams {
  Tensor input_embed;       // (E, F): linear feature embedding
  LstmCellParams encoder;   // input E
  // Decoder input is [previous-choice embedding; encoder state of the
  // position being decided], the h-bar argument of the decoder update
  // h_t = f(h_{t-1}, hbar, c_t).
  LstmCellParams decoder;   // input E + H
  AttentionParams attention;
  Tensor split_embed;       // (4, E): decoder input embedding per split
  Tensor start_embed;       // (E): decoder input at the first step
  Tensor out_proj_w;        // (4, 2H): projects [h_t; context] to logits
  Tensor out_proj_b;        // (4)
  double default_temperature = 1.0;

  std::size_t hidden() const { return encoder.hidden(); }
  std::size_t embed() const { return input_embed.rows(); }
  std::size_t feature_dim() const { return input_embed.cols(); }
};

/// Baseline critic: LSTM encoder plus a one-hidden-layer perceptron head
/// producing a single scalar per input sequence.
struct CriticParams {
  Tensor input_embed;      // (E, F)
  LstmCellParams encoder;  // input E
  Tensor head_w1;          // (M, H)
  Tensor head_b1;          // (M)
  Tensor head_w2;          // (1, M)
  Tensor head_b2;          // (1)

  std::size_t hidden() const { return encoder.hidden(); }
};

// Stable field enumeration; checkpointing, the optimizer and gradient
// accumulation all rely on this order.
template <class LstmT, class F>
void visit_lstm(LstmT& p, const std::string& prefix, F&& f) {
  f(prefix + ".w_forget", p.w_forget);
  f(prefix + ".w_input", p.w_input);
  f(prefix + ".w_cell", p.w_cell);
  f(prefix + ".w_output", p.w_output);
  f(prefix + ".b_forget", p.b_forget);
  f(prefix + ".b_input", p.b_input);
  f(prefix + ".b_cell", p.b_cell);
  f(prefix + ".b_output", p.b_output);
}

template <class PolicyT, class F>
void visit_tensors(PolicyT& p, F&& f)
  requires requires { p.split_embed; }
{
  f("policy.input_embed", p.input_embed);
  visit_lstm(p.encoder, "policy.encoder", f);
  visit_lstm(p.decoder, "policy.decoder", f);
  f("policy.attention.v", p.attention.v);
  f("policy.attention.w_query", p.attention.w_query);
  f("policy.attention.w_keys", p.attention.w_keys);
  f("policy.split_embed", p.split_embed);
  f("policy.start_embed", p.start_embed);
  f("policy.out_proj_w", p.out_proj_w);
  f("policy.out_proj_b", p.out_proj_b);
}

template <class CriticT, class F>
void visit_tensors(CriticT& p, F&& f)
  requires requires { p.head_w1; }
{
  f("critic.input_embed", p.input_embed);
  visit_lstm(p.encoder, "critic.encoder", f);
  f("critic.head_w1", p.head_w1);
  f("critic.head_b1", p.head_b1);
  f("critic.head_w2", p.head_w2);
  f("critic.head_b2", p.head_b2);
}

template <class P>
std::vector<Tensor*> tensor_list(P& p) {
  std::vector<Tensor*> out;
  visit_tensors(p, [&](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

template <class P>
std::vector<const Tensor*> tensor_list(const P& p) {
  std::vector<const Tensor*> out;
  visit_tensors(p, [&](const std::string&, const Tensor& t) { out.push_back(&t); });
  return out;
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

namespace detail {

inline void fill_uniform(Tensor& t, double bound, Rng& rng) {
  for (double& x : t.v) x = rng.uniform(-bound, bound);
}

inline LstmCellParams init_lstm(std::size_t hidden, std::size_t input,
                                Rng& rng) {
  LstmCellParams p;
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden + input));
  for (Tensor* w : {&p.w_forget, &p.w_input, &p.w_cell, &p.w_output}) {
    *w = Tensor::matrix(hidden, hidden + input);
    fill_uniform(*w, bound, rng);
  }
  for (Tensor* b : {&p.b_forget, &p.b_input, &p.b_cell, &p.b_output}) {
    *b = Tensor::vector(hidden);
    fill_uniform(*b, bound, rng);
  }
  // Positive forget bias keeps early memories alive.
  for (double& x : p.b_forget.v) x += 1.0;
  return p;
}

}  // namespace detail

inline PolicyParams init_policy(std::size_t feature_dim, std::size_t embed,
                                std::size_t hidden, Rng& rng) {
  PolicyParams p;
  p.input_embed = Tensor::matrix(embed, feature_dim);
  detail::fill_uniform(p.input_embed, 1.0 / std::sqrt(double(feature_dim)), rng);
  p.encoder = detail::init_lstm(hidden, embed, rng);
  p.decoder = detail::init_lstm(hidden, embed + hidden, rng);
  const double hb = 1.0 / std::sqrt(double(hidden));
  p.attention.v = Tensor::vector(hidden);
  detail::fill_uniform(p.attention.v, hb, rng);
  p.attention.w_query = Tensor::matrix(hidden, hidden);
  detail::fill_uniform(p.attention.w_query, hb, rng);
  p.attention.w_keys = Tensor::matrix(hidden, hidden);
  detail::fill_uniform(p.attention.w_keys, hb, rng);
  p.split_embed = Tensor::matrix(kNumSplits, embed);
  detail::fill_uniform(p.split_embed, 1.0 / std::sqrt(double(embed)), rng);
  p.start_embed = Tensor::vector(embed);
  detail::fill_uniform(p.start_embed, 1.0 / std::sqrt(double(embed)), rng);
  p.out_proj_w = Tensor::matrix(kNumSplits, 2 * hidden);
  detail::fill_uniform(p.out_proj_w, 1.0 / std::sqrt(double(2 * hidden)), rng);
  p.out_proj_b = Tensor::vector(kNumSplits);
  detail::fill_uniform(p.out_proj_b, 1.0 / std::sqrt(double(2 * hidden)), rng);
  return p;
}

inline CriticParams init_critic(std::size_t feature_dim, std::size_t embed,
                                std::size_t hidden, std::size_t mlp_hidden,
                                Rng& rng) {
  CriticParams p;
  p.input_embed = Tensor::matrix(embed, feature_dim);
  detail::fill_uniform(p.input_embed, 1.0 / std::sqrt(double(feature_dim)), rng);
  p.encoder = detail::init_lstm(hidden, embed, rng);
  const double hb = 1.0 / std::sqrt(double(hidden));
  p.head_w1 = Tensor::matrix(mlp_hidden, hidden);
  detail::fill_uniform(p.head_w1, hb, rng);
  p.head_b1 = Tensor::vector(mlp_hidden);
  detail::fill_uniform(p.head_b1, hb, rng);
  const double mb = 1.0 / std::sqrt(double(mlp_hidden));
  p.head_w2 = Tensor::matrix(1, mlp_hidden);
  detail::fill_uniform(p.head_w2, mb, rng);
  p.head_b2 = Tensor::vector(1);
  detail::fill_uniform(p.head_b2, mb, rng);
  return p;
}

// ---------------------------------------------------------------------------
// Graph bindings
// ---------------------------------------------------------------------------

struct LstmVars {
  Graph::Var w_forget, w_input, w_cell, w_output;
  Graph::Var b_forget, b_input, b_cell, b_output;
};

struct LstmState {
  Graph::Var h, c;
};

inline LstmVars bind_lstm(Graph& g, const LstmCellParams& p) {
  return LstmVars{g.param(p.w_forget), g.param(p.w_input), g.param(p.w_cell),
                  g.param(p.w_output), g.param(p.b_forget), g.param(p.b_input),
                  g.param(p.b_cell),   g.param(p.b_output)};
}

/// One LSTM cell update:
///   f = sigma(W_f [h; s] + b_f)      r = sigma(W_r [h; s] + b_r)
///   c~ = tanh(W_c [h; s] + b_c)      c' = f * c + r * c~
///   o = sigma(W_o [h; s] + b_o)      h' = o * tanh(c')
inline LstmState lstm_step(Graph& g, const LstmVars& p, LstmState prev,
                           Graph::Var input) {
  const Graph::Var z = g.concat(prev.h, input);
  const Graph::Var f = g.sigmoid(g.add(g.matvec(p.w_forget, z), p.b_forget));
  const Graph::Var r = g.sigmoid(g.add(g.matvec(p.w_input, z), p.b_input));
  const Graph::Var ctilde = g.tanh_fn(g.add(g.matvec(p.w_cell, z), p.b_cell));
  const Graph::Var c = g.add(g.mul(f, prev.c), g.mul(r, ctilde));
  const Graph::Var o = g.sigmoid(g.add(g.matvec(p.w_output, z), p.b_output));
  return LstmState{g.mul(o, g.tanh_fn(c)), c};
}

struct AttentionVars {
  Graph::Var v, w_query, w_keys;
};

inline AttentionVars bind_attention(Graph& g, const AttentionParams& p) {
  return AttentionVars{g.param(p.v), g.param(p.w_query), g.param(p.w_keys)};
}

struct PolicyVars {
  Graph::Var input_embed;
  LstmVars encoder, decoder;
  AttentionVars attention;
  Graph::Var split_embed, start_embed, out_proj_w, out_proj_b;
};

/// Binds every policy tensor exactly once and appends the leaf vars to
/// `leaves` in visit_tensors() order, so gradient extraction and the math
/// share the same graph nodes.
inline PolicyVars bind_policy(Graph& g, const PolicyParams& p,
                              std::vector<Graph::Var>& leaves) {
  PolicyVars v;
  v.input_embed = g.param(p.input_embed);
  v.encoder = bind_lstm(g, p.encoder);
  v.decoder = bind_lstm(g, p.decoder);
  v.attention = bind_attention(g, p.attention);
  v.split_embed = g.param(p.split_embed);
  v.start_embed = g.param(p.start_embed);
  v.out_proj_w = g.param(p.out_proj_w);
  v.out_proj_b = g.param(p.out_proj_b);
  for (Graph::Var x : {v.input_embed,
                       v.encoder.w_forget, v.encoder.w_input, v.encoder.w_cell,
                       v.encoder.w_output, v.encoder.b_forget, v.encoder.b_input,
                       v.encoder.b_cell, v.encoder.b_output,
                       v.decoder.w_forget, v.decoder.w_input, v.decoder.w_cell,
                       v.decoder.w_output, v.decoder.b_forget, v.decoder.b_input,
                       v.decoder.b_cell, v.decoder.b_output,
                       v.attention.v, v.attention.w_query, v.attention.w_keys,
                       v.split_embed, v.start_embed, v.out_proj_w, v.out_proj_b})
    leaves.push_back(x);
  return v;
}

struct CriticVars {
  Graph::Var input_embed;
  LstmVars encoder;
  Graph::Var head_w1, head_b1, head_w2, head_b2;
};

inline CriticVars bind_critic(Graph& g, const CriticParams& p,
                              std::vector<Graph::Var>& leaves) {
  CriticVars v;
  v.input_embed = g.param(p.input_embed);
  v.encoder = bind_lstm(g, p.encoder);
  v.head_w1 = g.param(p.head_w1);
  v.head_b1 = g.param(p.head_b1);
  v.head_w2 = g.param(p.head_w2);
  v.head_b2 = g.param(p.head_b2);
  for (Graph::Var x : {v.input_embed,
                       v.encoder.w_forget, v.encoder.w_input, v.encoder.w_cell,
                       v.encoder.w_output, v.encoder.b_forget, v.encoder.b_input,
                       v.encoder.b_cell, v.encoder.b_output,
                       v.head_w1, v.head_b1, v.head_w2, v.head_b2})
    leaves.push_back(x);
  return v;
}

struct AttentionOut {
  Graph::Var context;  // sum_k a_k h_k
  Graph::Var weights;  // alignment vector a
};

/// Additive attention over the encoder states at softmax temperature T:
///   score_k = v^T tanh(w_query h_t + w_keys h_k),  a = softmax(score / T),
///   context = sum_k a_k h_k.
/// `key_proj` may carry precomputed w_keys * h_k nodes (shared across steps).
inline AttentionOut attention(Graph& g, const AttentionVars& p, Graph::Var h_t,
                              const std::vector<Graph::Var>& enc_states,
                              double temperature,
                              const std::vector<Graph::Var>* key_proj = nullptr) {
  check_shape(!enc_states.empty(), "attention: no encoder states");
  check_shape(temperature > 0, "attention: temperature must be > 0");
  const Graph::Var query = g.matvec(p.w_query, h_t);
  std::vector<Graph::Var> scores;
  scores.reserve(enc_states.size());
  for (std::size_t k = 0; k < enc_states.size(); ++k) {
    const Graph::Var key =
        key_proj ? (*key_proj)[k] : g.matvec(p.w_keys, enc_states[k]);
    scores.push_back(g.dot(p.v, g.tanh_fn(g.add(query, key))));
  }
  const Graph::Var score_vec = g.gather_scalars(scores);
  const Graph::Var weights = g.softmax(score_vec, temperature);
  return AttentionOut{g.weighted_sum(weights, enc_states), weights};
}

// ---------------------------------------------------------------------------
// Scenario features
// ---------------------------------------------------------------------------

// Per-BS policy input: [lambda, path cost, path delay, min link capacity on
// the path, DU capacity], min-max scaled to [0,1] over the scenario.
inline constexpr std::size_t kFeatureCount = 5;
using FeatureVec = std::array<double, kFeatureCount>;

inline std::vector<FeatureVec> scenario_features(const Scenario& s) {
  const std::size_t n = s.num_dus();
  std::vector<FeatureVec> f(n);
  for (std::size_t k = 0; k < n; ++k) {
    const RoutePath& path = s.topology.paths[k];
    double min_cap = std::numeric_limits<double>::infinity();
    for (std::size_t e : path.edges)
      min_cap = std::min(min_cap, s.topology.links[e].capacity_mbps);
    f[k] = {s.traffic_mbps[k], path.cost_per_mbps, path.delay_ms, min_cap,
            s.params.cap_du};
  }
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const FeatureVec& x : f) {
      lo = std::min(lo, x[c]);
      hi = std::max(hi, x[c]);
    }
    for (FeatureVec& x : f)
      x[c] = hi > lo ? (x[c] - lo) / (hi - lo) : 0.5;
  }
  return f;
}

/// Training-time augmentation: rescales the traffic and routing-cost feature
/// columns, applied after min-max scaling.
inline void augment_features(std::vector<FeatureVec>& f, double lambda_scale,
                             double zeta_scale) {
  for (FeatureVec& x : f) {
    x[0] *= lambda_scale;
    x[1] *= zeta_scale;
  }
}

// ---------------------------------------------------------------------------
// Policy rollout
// ---------------------------------------------------------------------------

enum class DecodeMode { Greedy, Sample, Forced };

struct PolicyRollout {
  Graph graph;
  std::vector<Graph::Var> param_leaves;  // visit_tensors order
  Graph::Var log_prob_var{};
  SplitAssignment assignment;  // aligned with the feature sequence
  double log_prob = 0.0;
  std::vector<std::array<double, kNumSplits>> step_probs;
};

/// Runs the encoder over the embedded BS features, then decodes one split per
/// step: the decoder LSTM consumes the embedding of the previous choice (a
/// learned start token first), attends over all encoder states, and the
/// concatenated [hidden; context] is projected to four logits softmaxed at
/// `temperature`. Greedy takes the argmax (lowest index on ties); Sample
/// draws from the step distribution using `rng`; Forced follows `forced`
/// (teacher forcing), which scores the log-likelihood of a given assignment.
///
/// The temperature shapes the decode distribution only; attention inside the
/// rollout always runs at temperature 1, so the T -> 0 sampling limit
/// coincides with greedy decoding.
inline PolicyRollout policy_forward(const PolicyParams& p,
                                    const std::vector<FeatureVec>& features,
                                    DecodeMode mode, double temperature,
                                    Rng* rng = nullptr,
                                    const SplitAssignment* forced = nullptr) {
  check_shape(!features.empty(), "policy_forward: empty feature sequence");
  check_shape(temperature > 0, "policy_forward: temperature must be > 0");
  if (mode == DecodeMode::Sample && rng == nullptr)
    throw Error("policy_forward: Sample mode needs an rng");
  if (mode == DecodeMode::Forced &&
      (forced == nullptr || forced->size() != features.size()))
    throw Error("policy_forward: Forced mode needs a matching assignment");
  const std::size_t n = features.size();
  const std::size_t hidden = p.hidden();

  PolicyRollout out;
  Graph& g = out.graph;
  const PolicyVars vars = bind_policy(g, p, out.param_leaves);
  const Graph::Var embed_w = vars.input_embed;
  const LstmVars& enc = vars.encoder;
  const LstmVars& dec = vars.decoder;
  const AttentionVars& attn = vars.attention;
  const Graph::Var split_embed = vars.split_embed;
  const Graph::Var start_embed = vars.start_embed;
  const Graph::Var proj_w = vars.out_proj_w;
  const Graph::Var proj_b = vars.out_proj_b;

  // Encoder.
  std::vector<Graph::Var> enc_states;
  enc_states.reserve(n);
  LstmState state{g.constant(Tensor::vector(hidden)),
                  g.constant(Tensor::vector(hidden))};
  for (std::size_t t = 0; t < n; ++t) {
    Tensor feat = Tensor::vector(kFeatureCount);
    for (std::size_t i = 0; i < kFeatureCount; ++i) feat.v[i] = features[t][i];
    const Graph::Var s_t = g.matvec(embed_w, g.constant(std::move(feat)));
    state = lstm_step(g, enc, state, s_t);
    enc_states.push_back(state.h);
  }

  // Keys are shared across decoder steps.
  std::vector<Graph::Var> key_proj;
  key_proj.reserve(n);
  for (Graph::Var h : enc_states)
    key_proj.push_back(g.matvec(attn.w_keys, h));

  // Decoder, bridged from the final encoder state.
  LstmState dstate = state;
  Graph::Var prev_choice = start_embed;
  Graph::Var log_prob = g.constant(Tensor::scalar(0.0));
  out.assignment.splits.reserve(n);
  out.step_probs.reserve(n);

  for (std::size_t t = 0; t < n; ++t) {
    const Graph::Var step_input = g.concat(prev_choice, enc_states[t]);
    dstate = lstm_step(g, dec, dstate, step_input);
    const AttentionOut att =
        attention(g, attn, dstate.h, enc_states, 1.0, &key_proj);
    const Graph::Var logits =
        g.add(g.matvec(proj_w, g.concat(dstate.h, att.context)), proj_b);
    const Tensor probs = Graph::softmax_value(g.val(logits), temperature);

    std::size_t choice = 0;
    if (mode == DecodeMode::Greedy) {
      for (std::size_t i = 1; i < kNumSplits; ++i)
        if (probs.v[i] > probs.v[choice]) choice = i;
    } else if (mode == DecodeMode::Forced) {
      choice = index_of(forced->splits[t]);
    } else {
      const double u = rng->uniform();
      double cum = 0.0;
      choice = kNumSplits - 1;
      for (std::size_t i = 0; i < kNumSplits; ++i) {
        cum += probs.v[i];
        if (u < cum) {
          choice = i;
          break;
        }
      }
    }

    const Graph::Var step_logp = g.pick(g.log_softmax(logits, temperature),
                                        choice);
    log_prob = g.add(log_prob, step_logp);
    out.assignment.splits.push_back(split_from_index(choice));
    std::array<double, kNumSplits> dist{};
    for (std::size_t i = 0; i < kNumSplits; ++i) dist[i] = probs.v[i];
    out.step_probs.push_back(dist);
    prev_choice = g.row(split_embed, choice);
  }

  out.log_prob_var = log_prob;
  out.log_prob = g.val(log_prob).v[0];
  return out;
}

// ---------------------------------------------------------------------------
// Critic
// ---------------------------------------------------------------------------

struct CriticEval {
  Graph graph;
  std::vector<Graph::Var> param_leaves;
  Graph::Var out{};
  double value = 0.0;
};

/// LSTM encoder over the embedded features; the final hidden state feeds a
/// tanh hidden layer and a linear output. Pure.
inline CriticEval critic_forward(const CriticParams& p,
                                 const std::vector<FeatureVec>& features) {
  check_shape(!features.empty(), "critic_forward: empty feature sequence");
  CriticEval out;
  Graph& g = out.graph;
  const CriticVars vars = bind_critic(g, p, out.param_leaves);
  const Graph::Var embed_w = vars.input_embed;
  const LstmVars& enc = vars.encoder;
  const Graph::Var w1 = vars.head_w1;
  const Graph::Var b1 = vars.head_b1;
  const Graph::Var w2 = vars.head_w2;
  const Graph::Var b2 = vars.head_b2;

  LstmState state{g.constant(Tensor::vector(p.hidden())),
                  g.constant(Tensor::vector(p.hidden()))};
  for (const FeatureVec& f : features) {
    Tensor feat = Tensor::vector(kFeatureCount);
    for (std::size_t i = 0; i < kFeatureCount; ++i) feat.v[i] = f[i];
    state = lstm_step(g, enc, state, g.matvec(embed_w, g.constant(std::move(feat))));
  }
  const Graph::Var hid = g.tanh_fn(g.add(g.matvec(w1, state.h), b1));
  out.out = g.pick(g.add(g.matvec(w2, hid), b2), 0);
  out.value = g.val(out.out).v[0];
  return out;
}

}  // namespace vrsplit

#endif  // VRSPLIT_NN_HPP
