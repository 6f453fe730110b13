#include "gagnet/tape.hpp"

#include "gagnet/errors.hpp"
#include "gagnet/params.hpp"

#include <stdexcept>

namespace gagnet {

int Tape::check(Var v) const {
  if (!v.valid() || v.tape != this || static_cast<size_t>(v.id) >= nodes_.size())
    throw std::logic_error("tape: stale or foreign Var handle");
  return v.id;
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  visits_.push_back(0);
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(ParamStore& store, const std::string& name) {
  const Index idx = store.index_of(name);
  if (idx < 0) throw std::logic_error("tape: unknown parameter '" + name + "'");
  Node n;
  n.value = store.entry(idx).value;
  n.requires_grad = true;
  n.store = &store;
  n.store_index = idx;
  nodes_.push_back(std::move(n));
  visits_.push_back(0);
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::make(Tensor value, std::vector<int> parents, std::function<void(Tape&, int)> backward) {
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  for (int p : n.parents)
    if (nodes_[static_cast<size_t>(p)].requires_grad) n.requires_grad = true;
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  visits_.push_back(0);
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(int id, const Tensor& delta) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.requires_grad) return;
  if (n.grad.numel() == 0) n.grad = Tensor(n.value.dims());
  if (n.grad.numel() != delta.numel())
    throw std::logic_error("tape: gradient shape mismatch at node " + std::to_string(id));
  n.grad.flat() += delta.flat();
}

void Tape::backward(Var loss) {
  const int root = check(loss);
  if (nodes_[static_cast<size_t>(root)].value.numel() != 1)
    throw UsageError("backward: loss must be a scalar, got shape " +
                     nodes_[static_cast<size_t>(root)].value.shape_str());

  for (Node& n : nodes_) n.grad = Tensor();
  visits_.assign(nodes_.size(), 0);

  nodes_[static_cast<size_t>(root)].grad = Tensor::scalar(1.0);
  for (int id = root; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.numel() == 0) continue;  // unreached by this loss
    ++visits_[static_cast<size_t>(id)];
    if (n.backward) n.backward(*this, id);
    if (n.store != nullptr) n.store->accumulate_grad(n.store_index, n.grad);
  }
}

}  // namespace gagnet
