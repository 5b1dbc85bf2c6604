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

#ifndef VRSPLIT_TENSOR_HPP
#define VRSPLIT_TENSOR_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vrsplit/types.hpp"

namespace vrsplit {

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

/// Dense 64-bit float tensor, rank 1 (vector) or 2 (row-major matrix).
/// Scalars are represented as vectors of length 1.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> v;

  Tensor() = default;

  static Tensor vector(std::size_t n, double fill = 0.0) {
    Tensor t;
    t.shape = {n};
    t.v.assign(n, fill);
    return t;
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    Tensor t;
    t.shape = {rows, cols};
    t.v.assign(rows * cols, fill);
    return t;
  }

  static Tensor scalar(double x) {
    Tensor t;
    t.shape = {1};
    t.v = {x};
    return t;
  }

  static Tensor zeros_like(const Tensor& other) {
    Tensor t;
    t.shape = other.shape;
    t.v.assign(other.v.size(), 0.0);
    return t;
  }

  std::size_t numel() const { return v.size(); }
  bool is_vector() const { return shape.size() == 1; }
  bool is_matrix() const { return shape.size() == 2; }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 0 : shape[1]; }

  double& operator()(std::size_t i) { return v[i]; }
  double operator()(std::size_t i) const { return v[i]; }
  double& operator()(std::size_t r, std::size_t c) { return v[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return v[r * cols() + c];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline void check_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeMismatch(what);
}

// ---------------------------------------------------------------------------
// Reverse-mode graph
// ---------------------------------------------------------------------------

/// Tape-based reverse-mode differentiation. A forward pass records nodes in
/// topological order; backward(root) walks the tape once in reverse and
/// accumulates gradients. Parameter tensors are attached by reference so no
/// weight copies are made per rollout. A graph is single-shot: calling
/// backward twice without rebuilding throws GraphConsumed.
class Graph {
 public:
  struct Var {
    std::uint32_t id = 0;
  };

  Graph() = default;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// External leaf: the tensor must outlive the graph.
  Var param(const Tensor& t) {
    nodes_.emplace_back();
    nodes_.back().ext = &t;
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  /// Owned leaf (inputs, constants).
  Var constant(Tensor t) {
    nodes_.emplace_back();
    nodes_.back().val = std::move(t);
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  const Tensor& val(Var x) const {
    const NodeRec& n = nodes_[x.id];
    return n.ext ? *n.ext : n.val;
  }

  /// Gradient of a node after backward(); zeros if the node was not reached.
  Tensor grad(Var x) const {
    const NodeRec& n = nodes_[x.id];
    if (n.grad.v.empty()) return Tensor::zeros_like(val(x));
    return n.grad;
  }

  // -- elementwise ----------------------------------------------------------

  Var add(Var a, Var b) {
    check_shape(val(a).same_shape(val(b)), "add: shape mismatch");
    Tensor out = val(a);
    const Tensor& vb = val(b);
    for (std::size_t i = 0; i < out.numel(); ++i) out.v[i] += vb.v[i];
    return make(std::move(out), [a, b](Graph& g, Var self) {
      const Tensor& go = g.nodes_[self.id].grad;
      g.accumulate(a, go.v.data(), go.numel());
      g.accumulate(b, go.v.data(), go.numel());
    });
  }

  Var sub(Var a, Var b) {
    check_shape(val(a).same_shape(val(b)), "sub: shape mismatch");
    Tensor out = val(a);
    const Tensor& vb = val(b);
    for (std::size_t i = 0; i < out.numel(); ++i) out.v[i] -= vb.v[i];
    return make(std::move(out), [a, b](Graph& g, Var self) {
      const Tensor& go = g.nodes_[self.id].grad;
      g.accumulate(a, go.v.data(), go.numel());
      Tensor& gb = g.grad_slot(b);
      for (std::size_t i = 0; i < go.numel(); ++i) gb.v[i] -= go.v[i];
    });
  }

  Var mul(Var a, Var b) {
    check_shape(val(a).same_shape(val(b)), "mul: shape mismatch");
    Tensor out = val(a);
    const Tensor& vb = val(b);
    for (std::size_t i = 0; i < out.numel(); ++i) out.v[i] *= vb.v[i];
    return make(std::move(out), [a, b](Graph& g, Var self) {
      const Tensor& go = g.nodes_[self.id].grad;
      const Tensor& va = g.val(a);
      const Tensor& vb2 = g.val(b);
      Tensor& ga = g.grad_slot(a);
      Tensor& gb = g.grad_slot(b);
      for (std::size_t i = 0; i < go.numel(); ++i) {
        ga.v[i] += go.v[i] * vb2.v[i];
        gb.v[i] += go.v[i] * va.v[i];
      }
    });
  }

  Var scale(Var a, double c) {
    Tensor out = val(a);
    for (double& x : out.v) x *= c;
    return make(std::move(out), [a, c](Graph& g, Var self) {
      const Tensor& go = g.nodes_[self.id].grad;
      Tensor& ga = g.grad_slot(a);
      for (std::size_t i = 0; i < go.numel(); ++i) ga.v[i] += c * go.v[i];
    });
  }

  Var sub_const(Var a, double c) {
    Tensor out = val(a);
    for (double& x : out.v) x -= c;
    return make(std::move(out), [a](Graph& g, Var self) {
      const Tensor& go = g.nodes_[self.id].grad;
      g.accumulate(a, go.v.data(), go.numel());
    });
  }

  Var square(Var a) {
    Tensor out = val(a);
    for (double& x : out.v) x *= x;
    return make(std::move(out), [a](Graph& g, Var self) {
      const Tensor& go = g.nodes_[self.id].grad;
      const Tensor& va = g.val(a);
      Tensor& ga = g.grad_slot(a);
      for (std::size_t i = 0; i < go.numel(); ++i)
        ga.v[i] += 2.0 * va.v[i] * go.v[i];
    });
  }

  Var sigmoid(Var a) {
    Tensor out = val(a);
    for (double& x : out.v) {
      if (x >= 0) {
        x = 1.0 / (1.0 + std::exp(-x));
      } else {
        const double e = std::exp(x);
        x = e / (1.0 + e);
      }
    }
    return make(std::move(out), [a](Graph& g, Var self) {
      const Tensor& go = g.nodes_[self.id].grad;
      const Tensor& y = g.val(self);
      Tensor& ga = g.grad_slot(a);
      for (std::size_t i = 0; i < go.numel(); ++i)
        ga.v[i] += go.v[i] * y.v[i] * (1.0 - y.v[i]);
    });
  }

  Var tanh_fn(Var a) {
    Tensor out = val(a);
    for (double& x : out.v) x = std::tanh(x);
    return make(std::move(out), [a](Graph& g, Var self) {
      const Tensor& go = g.nodes_[self.id].grad;
      const Tensor& y = g.val(self);
      Tensor& ga = g.grad_slot(a);
      for (std::size_t i = 0; i < go.numel(); ++i)
        ga.v[i] += go.v[i] * (1.0 - y.v[i] * y.v[i]);
    });
  }

  // -- linear algebra --------------------------------------------------------

  Var matvec(Var w, Var x) {
    const Tensor& vw = val(w);
    const Tensor& vx = val(x);
    check_shape(vw.is_matrix() && vx.is_vector() && vw.cols() == vx.rows(),
                "matvec: need (m,k) x (k)");
    const std::size_t m = vw.rows(), k = vw.cols();
    Tensor out = Tensor::vector(m);
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      const double* row = vw.v.data() + i * k;
      for (std::size_t j = 0; j < k; ++j) acc += row[j] * vx.v[j];
      out.v[i] = acc;
    }
    return make(std::move(out), [w, x, m, k](Graph& g, Var self) {
      const Tensor& go = g.nodes_[self.id].grad;
      const Tensor& vw2 = g.val(w);
      const Tensor& vx2 = g.val(x);
      Tensor& gw = g.grad_slot(w);
      Tensor& gx = g.grad_slot(x);
      for (std::size_t i = 0; i < m; ++i) {
        const double gi = go.v[i];
        if (gi == 0.0) continue;
        double* gwrow = gw.v.data() + i * k;
        const double* wrow = vw2.v.data() + i * k;
        for (std::size_t j = 0; j < k; ++j) {
          gwrow[j] += gi * vx2.v[j];
          gx.v[j] += gi * wrow[j];
        }
      }
    });
  }

  Var dot(Var a, Var b) {
    const Tensor& va = val(a);
    const Tensor& vb = val(b);
    check_shape(va.is_vector() && vb.is_vector() && va.numel() == vb.numel(),
                "dot: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < va.numel(); ++i) acc += va.v[i] * vb.v[i];
    return make(Tensor::scalar(acc), [a, b](Graph& g, Var self) {
      const double go = g.nodes_[self.id].grad.v[0];
      const Tensor& va2 = g.val(a);
      const Tensor& vb2 = g.val(b);
      Tensor& ga = g.grad_slot(a);
      Tensor& gb = g.grad_slot(b);
      for (std::size_t i = 0; i < va2.numel(); ++i) {
        ga.v[i] += go * vb2.v[i];
        gb.v[i] += go * va2.v[i];
      }
    });
  }

  Var concat(Var a, Var b) {
    const Tensor& va = val(a);
    const Tensor& vb = val(b);
    check_shape(va.is_vector() && vb.is_vector(), "concat: vectors only");
    Tensor out = Tensor::vector(va.numel() + vb.numel());
    for (std::size_t i = 0; i < va.numel(); ++i) out.v[i] = va.v[i];
    for (std::size_t i = 0; i < vb.numel(); ++i) out.v[va.numel() + i] = vb.v[i];
    const std::size_t na = va.numel();
    return make(std::move(out), [a, b, na](Graph& g, Var self) {
      const Tensor& go = g.nodes_[self.id].grad;
      Tensor& ga = g.grad_slot(a);
      Tensor& gb = g.grad_slot(b);
      for (std::size_t i = 0; i < na; ++i) ga.v[i] += go.v[i];
      for (std::size_t i = na; i < go.numel(); ++i) gb.v[i - na] += go.v[i];
    });
  }

  /// Weighted sum of equally shaped vectors: out = sum_k coeffs[k] * items[k].
  Var weighted_sum(Var coeffs, const std::vector<Var>& items) {
    const Tensor& w = val(coeffs);
    check_shape(w.is_vector() && w.numel() == items.size(),
                "weighted_sum: one coefficient per item");
    check_shape(!items.empty(), "weighted_sum: empty item list");
    Tensor out = Tensor::zeros_like(val(items[0]));
    for (std::size_t k = 0; k < items.size(); ++k) {
      const Tensor& h = val(items[k]);
      check_shape(h.same_shape(out), "weighted_sum: item shape mismatch");
      for (std::size_t i = 0; i < out.numel(); ++i)
        out.v[i] += w.v[k] * h.v[i];
    }
    return make(std::move(out), [coeffs, items](Graph& g, Var self) {
      const Tensor& go = g.nodes_[self.id].grad;
      const Tensor& w2 = g.val(coeffs);
      Tensor& gw = g.grad_slot(coeffs);
      for (std::size_t k = 0; k < items.size(); ++k) {
        const Tensor& h = g.val(items[k]);
        Tensor& gh = g.grad_slot(items[k]);
        double acc = 0.0;
        for (std::size_t i = 0; i < go.numel(); ++i) {
          acc += go.v[i] * h.v[i];
          gh.v[i] += w2.v[k] * go.v[i];
        }
        gw.v[k] += acc;
      }
    });
  }

  /// Packs scalar nodes into one vector node.
  Var gather_scalars(const std::vector<Var>& scalars) {
    Tensor out = Tensor::vector(scalars.size());
    for (std::size_t i = 0; i < scalars.size(); ++i) {
      check_shape(val(scalars[i]).numel() == 1, "gather_scalars: non-scalar");
      out.v[i] = val(scalars[i]).v[0];
    }
    return make(std::move(out), [scalars](Graph& g, Var self) {
      const Tensor& go = g.nodes_[self.id].grad;
      for (std::size_t i = 0; i < scalars.size(); ++i)
        g.grad_slot(scalars[i]).v[0] += go.v[i];
    });
  }

  /// Row slice of a matrix as a vector.
  Var row(Var m, std::size_t r) {
    const Tensor& vm = val(m);
    check_shape(vm.is_matrix() && r < vm.rows(), "row: index range");
    const std::size_t k = vm.cols();
    Tensor out = Tensor::vector(k);
    for (std::size_t j = 0; j < k; ++j) out.v[j] = vm.v[r * k + j];
    return make(std::move(out), [m, r, k](Graph& g, Var self) {
      const Tensor& go = g.nodes_[self.id].grad;
      Tensor& gm = g.grad_slot(m);
      for (std::size_t j = 0; j < k; ++j) gm.v[r * k + j] += go.v[j];
    });
  }

  Var pick(Var a, std::size_t index) {
    const Tensor& va = val(a);
    check_shape(va.is_vector() && index < va.numel(), "pick: index range");
    return make(Tensor::scalar(va.v[index]), [a, index](Graph& g, Var self) {
      g.grad_slot(a).v[index] += g.nodes_[self.id].grad.v[0];
    });
  }

  // -- softmax family --------------------------------------------------------

  /// softmax(x / temperature), computed with max subtraction.
  Var softmax(Var a, double temperature) {
    check_shape(temperature > 0, "softmax: temperature must be > 0");
    const Tensor& va = val(a);
    check_shape(va.is_vector(), "softmax: vectors only");
    Tensor out = softmax_value(va, temperature);
    return make(std::move(out), [a, temperature](Graph& g, Var self) {
      const Tensor& go = g.nodes_[self.id].grad;
      const Tensor& y = g.val(self);
      Tensor& ga = g.grad_slot(a);
      double inner = 0.0;
      for (std::size_t i = 0; i < y.numel(); ++i) inner += go.v[i] * y.v[i];
      for (std::size_t i = 0; i < y.numel(); ++i)
        ga.v[i] += y.v[i] * (go.v[i] - inner) / temperature;
    });
  }

  /// log softmax(x / temperature); log-space path used for log-probabilities.
  Var log_softmax(Var a, double temperature) {
    check_shape(temperature > 0, "log_softmax: temperature must be > 0");
    const Tensor& va = val(a);
    check_shape(va.is_vector(), "log_softmax: vectors only");
    Tensor out = Tensor::vector(va.numel());
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : va.v) mx = std::max(mx, x / temperature);
    double lse = 0.0;
    for (double x : va.v) lse += std::exp(x / temperature - mx);
    lse = mx + std::log(lse);
    for (std::size_t i = 0; i < va.numel(); ++i)
      out.v[i] = va.v[i] / temperature - lse;
    return make(std::move(out), [a, temperature](Graph& g, Var self) {
      const Tensor& go = g.nodes_[self.id].grad;
      const Tensor& y = g.val(self);
      Tensor& ga = g.grad_slot(a);
      double gsum = 0.0;
      for (std::size_t i = 0; i < go.numel(); ++i) gsum += go.v[i];
      for (std::size_t i = 0; i < go.numel(); ++i)
        ga.v[i] += (go.v[i] - std::exp(y.v[i]) * gsum) / temperature;
    });
  }

  static Tensor softmax_value(const Tensor& logits, double temperature) {
    Tensor out = Tensor::vector(logits.numel());
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : logits.v) mx = std::max(mx, x / temperature);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.numel(); ++i) {
      out.v[i] = std::exp(logits.v[i] / temperature - mx);
      sum += out.v[i];
    }
    for (double& x : out.v) x /= sum;
    return out;
  }

  // -- backward --------------------------------------------------------------

  /// Seeds d(root)/d(root) = 1 and sweeps the tape in reverse. `root` must be
  /// a scalar node.
  void backward(Var root) {
    if (consumed_)
      throw GraphConsumed("backward() already ran on this graph");
    consumed_ = true;
    check_shape(val(root).numel() == 1, "backward: root must be scalar");
    grad_slot(root).v[0] = 1.0;
    for (std::size_t i = root.id + 1; i-- > 0;) {
      NodeRec& n = nodes_[i];
      if (n.back && !n.grad.v.empty()) n.back(*this, Var{static_cast<std::uint32_t>(i)});
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct NodeRec {
    Tensor val;
    const Tensor* ext = nullptr;
    Tensor grad;
    std::function<void(Graph&, Var)> back;
  };

  Var make(Tensor value, std::function<void(Graph&, Var)> back) {
    nodes_.emplace_back();
    nodes_.back().val = std::move(value);
    nodes_.back().back = std::move(back);
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  Tensor& grad_slot(Var x) {
    NodeRec& n = nodes_[x.id];
    if (n.grad.v.empty()) n.grad = Tensor::zeros_like(val(x));
    return n.grad;
  }

  void accumulate(Var x, const double* g, std::size_t n) {
    Tensor& gx = grad_slot(x);
    for (std::size_t i = 0; i < n; ++i) gx.v[i] += g[i];
  }

  std::vector<NodeRec> nodes_;
  bool consumed_ = false;
};

}  // namespace vrsplit

#endif  // VRSPLIT_TENSOR_HPP
