#pragma once

#include "gagnet/tensor.hpp"

#include <functional>
#include <string>
#include <vector>

namespace gagnet {

class Tape;
class ParamStore;

/// Lightweight handle into a Tape node.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  bool valid() const { return tape != nullptr && id >= 0; }
};

/// Append-only reverse-mode tape. Creation order is a topological order, so the
/// backward sweep is a single reverse pass; every reached node is visited
/// exactly once per backward() call (visit_counts() exposes the instrumentation).
/// Gradients of parameter leaves accumulate into their ParamStore entries, so
/// repeated backward() calls add up.
class Tape {
 public:
  /// Plain input node. requires_grad makes its gradient readable after backward.
  Var leaf(Tensor value, bool requires_grad = false);

  /// Leaf bound to a named ParamStore entry; gradients flow into the store.
  Var param(ParamStore& store, const std::string& name);

  /// Op node. The backward callback receives this tape and the node id, reads
  /// grad(id) and pushes into the parents via accumulate().
  Var make(Tensor value, std::vector<int> parents, std::function<void(Tape&, int)> backward);

  const Tensor& val(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Tensor& val(Var v) const { return val(check(v)); }

  /// Gradient received by a node during the last backward() (empty if unreached).
  const Tensor& grad(int id) const { return nodes_[static_cast<size_t>(id)].grad; }
  const Tensor& grad(Var v) const { return grad(check(v)); }

  bool requires_grad(int id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }
  const std::vector<int>& parents(int id) const { return nodes_[static_cast<size_t>(id)].parents; }

  /// += delta into a node's gradient buffer; no-op when the node does not
  /// require gradients.
  void accumulate(int id, const Tensor& delta);

  /// Reverse sweep from a scalar loss. Node gradients are reset first; store
  /// gradients are accumulated (call ParamStore::zero_grads to reset those).
  void backward(Var loss);

  size_t size() const { return nodes_.size(); }
  const std::vector<int>& visit_counts() const { return visits_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<int> parents;
    std::function<void(Tape&, int)> backward;
    ParamStore* store = nullptr;
    Index store_index = -1;
  };

  int check(Var v) const;

  std::vector<Node> nodes_;
  std::vector<int> visits_;
};

}  // namespace gagnet
