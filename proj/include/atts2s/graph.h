// atts2s/graph.h

// Copyright 2026  The atts2s Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ATTS2S_GRAPH_H_
#define ATTS2S_GRAPH_H_

#include <cmath>
#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "atts2s/parameter_set.h"
#include "atts2s/tensor.h"

namespace atts2s {

/// Handle to a node of a Graph. Only meaningful together with its graph.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape. Every forward operation appends a node holding its
/// value and a closure that maps the node's output gradient to gradients of
/// its parents. The tape is rebuilt for every forward pass and can be
/// differentiated exactly once.
///
/// A graph built with `track_gradients == false` records values only; that is
/// the inference mode.
template <typename T>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph &, const Tensor<T> &dout)>;

  explicit Graph(ParameterSet<T> *params = nullptr, bool track_gradients = true)
      : params_(params), track_(track_gradients) {}
  Graph(const Graph &) = delete;
  Graph &operator=(const Graph &) = delete;

  /// Data that never receives a gradient.
  Var Constant(Tensor<T> value) {
    Node n;
    n.value = std::move(value);
    return Push(std::move(n));
  }

  /// Differentiable input; its gradient is readable through grad() after
  /// Backward().
  Var Leaf(Tensor<T> value) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = track_;
    if (track_) n.grad = Tensor<T>(n.value.shape());
    return Push(std::move(n));
  }

  /// Reference to a named parameter of the bound ParameterSet. The value is
  /// not copied; the gradient is accumulated into the parameter on Backward().
  Var Param(const std::string &name) {
    if (params_ == nullptr) throw IndexError("graph has no parameter set bound");
    Parameter<T> &p = params_->Get(name);
    Node n;
    n.external = &p.value;
    n.param = &p;
    n.requires_grad = track_;
    return Push(std::move(n));
  }

  /// Appends an operation node. The backward closure is dropped when no parent
  /// requires a gradient.
  Var Record(Tensor<T> value, std::initializer_list<Var> parents, BackwardFn backward) {
    Node n;
    n.value = std::move(value);
    if (track_) {
      for (Var p : parents)
        if (p.valid() && nodes_[p.id].requires_grad) n.requires_grad = true;
    }
    if (n.requires_grad) n.backward = std::move(backward);
    return Push(std::move(n));
  }

  const Tensor<T> &value(Var v) const {
    const Node &n = nodes_.at(v.id);
    return n.external ? *n.external : n.value;
  }

  bool requires_grad(Var v) const { return v.valid() && nodes_.at(v.id).requires_grad; }

  /// Gradient accumulated for `v`; all-zero when `v` was not reached.
  const Tensor<T> &grad(Var v) {
    Node &n = nodes_.at(v.id);
    if (n.grad.empty()) n.grad = Tensor<T>(value(v).shape());
    return n.grad;
  }

  /// Gradient buffer that an operation's backward closure adds into, or
  /// nullptr when `v` does not take part in differentiation.
  Tensor<T> *GradTarget(Var v) {
    if (!requires_grad(v)) return nullptr;
    Node &n = nodes_[v.id];
    if (n.grad.empty()) n.grad = Tensor<T>(value(v).shape());
    return &n.grad;
  }

  /// Populates gradients of every differentiable node reachable from `loss`.
  /// Parameter gradients in the bound set are reset first, so repeated
  /// forward/backward cycles never accumulate across graphs.
  void Backward(Var loss) {
    if (done_) throw StaleGraphError("Backward() called twice on the same forward pass");
    if (!track_) throw StaleGraphError("graph was recorded without gradient tracking");
    if (value(loss).size() != 1)
      throw DimensionError("loss must be a scalar, got " + value(loss).ShapeString());
    done_ = true;
    if (params_) params_->ZeroGrad();
    if (!requires_grad(loss)) return;
    GradTarget(loss)->Fill(T(1));
    for (int id = loss.id; id >= 0; --id) {
      Node &n = nodes_[id];
      if (!n.requires_grad || n.grad.empty()) continue;
      if (n.backward) {
        n.backward(*this, n.grad);
      } else if (n.param) {
        auto &acc = n.param->grad.storage();
        const auto &g = n.grad.storage();
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += g[k];
      }
    }
  }

  bool tracking() const { return track_; }
  std::size_t num_nodes() const { return nodes_.size(); }
  ParameterSet<T> *params() const { return params_; }

 private:
  struct Node {
    Tensor<T> value;
    const Tensor<T> *external = nullptr;
    Parameter<T> *param = nullptr;
    Tensor<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var Push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  ParameterSet<T> *params_;
  bool track_;
  bool done_ = false;
  std::deque<Node> nodes_;
};

}  // namespace atts2s

#endif  // ATTS2S_GRAPH_H_
