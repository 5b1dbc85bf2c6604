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

#ifndef VRSPLIT_CHECKPOINT_HPP
#define VRSPLIT_CHECKPOINT_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "vrsplit/adam.hpp"
#include "vrsplit/model.hpp"
#include "vrsplit/nn.hpp"
#include "vrsplit/types.hpp"

namespace vrsplit {

// ---------------------------------------------------------------------------
// Checkpoint container
// ---------------------------------------------------------------------------
// Binary layout (all integers and floats little-endian):
//   magic    8 bytes  "VRSPLITC"
//   version  u32      currently 1
//   seed     u64      master seed of the training run
//   epoch    u64      number of completed epochs
//   count    u32      number of named tensors
//   then per tensor:
//     name_len u32, name bytes (UTF-8, no terminator),
//     rank u32, dims u64 * rank, data f64 * prod(dims)
// Tensor names: "policy.*" and "critic.*" parameters in visit order,
// "train.mu" (length 4), "adam.agent.step"/"adam.critic.step" (scalars) and
// "adam.{agent,critic}.{m,v}.<parameter name>" moment estimates.

struct TrainingCheckpoint {
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  PenaltyCoefficients mu{1.0, 1.0, 1.0, 1.0};
  PolicyParams policy;
  CriticParams critic;
  AdamState agent_opt;
  AdamState critic_opt;
};

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'V', 'R', 'S', 'P',
                                             'L', 'I', 'T', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_u32(std::ostream& out, std::uint32_t x) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = char((x >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

inline void write_u64(std::ostream& out, std::uint64_t x) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = char((x >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

inline void write_f64(std::ostream& out, double x) {
  write_u64(out, std::bit_cast<std::uint64_t>(x));
}

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw ParseError("checkpoint truncated");
  std::uint32_t x = 0;
  for (int i = 0; i < 4; ++i) x |= std::uint32_t(b[i]) << (8 * i);
  return x;
}

inline std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw ParseError("checkpoint truncated");
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= std::uint64_t(b[i]) << (8 * i);
  return x;
}

inline double read_f64(std::istream& in) {
  return std::bit_cast<double>(read_u64(in));
}

inline void write_named_tensor(std::ostream& out, const std::string& name,
                               const Tensor& t) {
  write_u32(out, std::uint32_t(name.size()));
  out.write(name.data(), std::streamsize(name.size()));
  write_u32(out, std::uint32_t(t.shape.size()));
  for (std::size_t d : t.shape) write_u64(out, d);
  for (double x : t.v) write_f64(out, x);
}

}  // namespace detail

inline void save_checkpoint(const TrainingCheckpoint& ckpt,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);

  std::vector<std::pair<std::string, const Tensor*>> entries;
  visit_tensors(ckpt.policy, [&](const std::string& n, const Tensor& t) {
    entries.emplace_back(n, &t);
  });
  visit_tensors(ckpt.critic, [&](const std::string& n, const Tensor& t) {
    entries.emplace_back(n, &t);
  });

  Tensor mu = Tensor::vector(ckpt.mu.size());
  for (std::size_t i = 0; i < ckpt.mu.size(); ++i) mu.v[i] = ckpt.mu[i];
  const Tensor agent_step = Tensor::scalar(double(ckpt.agent_opt.step));
  const Tensor critic_step = Tensor::scalar(double(ckpt.critic_opt.step));

  std::vector<std::pair<std::string, const Tensor*>> adam_entries;
  {
    std::size_t i = 0;
    visit_tensors(ckpt.policy, [&](const std::string& n, const Tensor&) {
      adam_entries.emplace_back("adam.agent.m." + n, &ckpt.agent_opt.m[i]);
      adam_entries.emplace_back("adam.agent.v." + n, &ckpt.agent_opt.v[i]);
      ++i;
    });
    i = 0;
    visit_tensors(ckpt.critic, [&](const std::string& n, const Tensor&) {
      adam_entries.emplace_back("adam.critic.m." + n, &ckpt.critic_opt.m[i]);
      adam_entries.emplace_back("adam.critic.v." + n, &ckpt.critic_opt.v[i]);
      ++i;
    });
  }

  out.write(detail::kCheckpointMagic, 8);
  detail::write_u32(out, detail::kCheckpointVersion);
  detail::write_u64(out, ckpt.seed);
  detail::write_u64(out, ckpt.epoch);
  detail::write_u32(out, std::uint32_t(entries.size() + adam_entries.size() + 3));
  for (const auto& [name, t] : entries) detail::write_named_tensor(out, name, *t);
  detail::write_named_tensor(out, "train.mu", mu);
  detail::write_named_tensor(out, "adam.agent.step", agent_step);
  detail::write_named_tensor(out, "adam.critic.step", critic_step);
  for (const auto& [name, t] : adam_entries)
    detail::write_named_tensor(out, name, *t);
  if (!out) throw IoError("short write while saving checkpoint: " + path);
}

inline TrainingCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingCheckpoint("cannot open checkpoint: " + path);

  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kCheckpointMagic, 8) != 0)
    throw ParseError("not a checkpoint file: " + path);
  const std::uint32_t version = detail::read_u32(in);
  if (version != detail::kCheckpointVersion)
    throw ParseError("unsupported checkpoint version " +
                     std::to_string(version));

  TrainingCheckpoint ckpt;
  ckpt.seed = detail::read_u64(in);
  ckpt.epoch = detail::read_u64(in);

  const std::uint32_t count = detail::read_u32(in);
  std::map<std::string, Tensor> table;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = detail::read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t rank = detail::read_u32(in);
    Tensor t;
    std::size_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      t.shape.push_back(std::size_t(detail::read_u64(in)));
      numel *= t.shape.back();
    }
    t.v.resize(numel);
    for (double& x : t.v) x = detail::read_f64(in);
    if (!in) throw ParseError("checkpoint truncated in tensor " + name);
    table.emplace(std::move(name), std::move(t));
  }

  auto take = [&](const std::string& name) -> Tensor {
    auto it = table.find(name);
    if (it == table.end())
      throw ParseError("checkpoint missing tensor \"" + name + "\"");
    Tensor t = std::move(it->second);
    table.erase(it);
    return t;
  };

  visit_tensors(ckpt.policy,
                [&](const std::string& n, Tensor& t) { t = take(n); });
  visit_tensors(ckpt.critic,
                [&](const std::string& n, Tensor& t) { t = take(n); });
  const Tensor mu = take("train.mu");
  if (mu.numel() != ckpt.mu.size())
    throw ParseError("checkpoint train.mu must have 4 entries");
  for (std::size_t i = 0; i < ckpt.mu.size(); ++i) ckpt.mu[i] = mu.v[i];
  ckpt.agent_opt.step = std::int64_t(take("adam.agent.step").v[0]);
  ckpt.critic_opt.step = std::int64_t(take("adam.critic.step").v[0]);
  visit_tensors(ckpt.policy, [&](const std::string& n, Tensor&) {
    ckpt.agent_opt.m.push_back(take("adam.agent.m." + n));
    ckpt.agent_opt.v.push_back(take("adam.agent.v." + n));
  });
  visit_tensors(ckpt.critic, [&](const std::string& n, Tensor&) {
    ckpt.critic_opt.m.push_back(take("adam.critic.m." + n));
    ckpt.critic_opt.v.push_back(take("adam.critic.v." + n));
  });
  if (!table.empty())
    throw ParseError("checkpoint holds unexpected tensor \"" +
                     table.begin()->first + "\"");
  return ckpt;
}

}  // namespace vrsplit

#endif  // VRSPLIT_CHECKPOINT_HPP
