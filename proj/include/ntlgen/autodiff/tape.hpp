#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "ntlgen/error.hpp"
#include "ntlgen/tensor.hpp"

namespace ntlgen::ad {

template <std::floating_point T>
class Tape;

// Handle to one tensor recorded on a Tape. Cheap to copy; valid while the
// tape lives.
template <std::floating_point T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor<T>& value() const { return tape_->value(id_); }
  // Empty tensor when no gradient reached this node.
  const Tensor<T>& grad() const { return tape_->grad(id_); }
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const { return tape_->requires_grad(id_); }
  std::size_t id() const noexcept { return id_; }
  Tape<T>& tape() const noexcept { return *tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Ordered record of executed operations. Nodes are appended as operations
// run, so creation order is a topological order. backward() clears every
// gradient and re-propagates from the given loss, so it may be called more
// than once on the same tape.
template <std::floating_point T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value) { return push(std::move(value), false, {}, nullptr); }
  Var<T> variable(Tensor<T> value) { return push(std::move(value), true, {}, nullptr); }

  // Records an operation result. It requires a gradient iff any input does;
  // `fn` is dropped otherwise.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn fn) {
    std::vector<std::size_t> ids;
    bool needs_grad = false;
    for (const auto& v : inputs) {
      if (&v.tape() != this) throw ShapeError("operation mixes variables from different tapes");
      ids.push_back(v.id());
      needs_grad = needs_grad || nodes_[v.id()].requires_grad;
    }
    return push(std::move(value), needs_grad, std::move(ids), needs_grad ? std::move(fn) : nullptr);
  }

  void backward(const Var<T>& loss) {
    if (&loss.tape() != this) throw ShapeError("loss is not recorded on this tape");
    if (loss.value().size() != 1) {
      throw ShapeError("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
    }
    for (auto& node : nodes_) node.grad = Tensor<T>();
    if (!nodes_[loss.id()].requires_grad) return;
    nodes_[loss.id()].grad = Tensor<T>(loss.shape(), T{1});
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
      Node& node = nodes_[id];
      if (node.backward && !node.grad.empty()) node.backward(*this, id);
    }
  }

  const Tensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }
  const Tensor<T>& grad(std::size_t id) const { return nodes_.at(id).grad; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_.at(id).inputs; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Zero-initialized gradient buffer of `id`, or nullptr if it needs none.
  T* grad_buffer(std::size_t id) {
    Node& node = nodes_.at(id);
    if (!node.requires_grad) return nullptr;
    if (node.grad.empty()) node.grad = Tensor<T>(node.value.shape(), T{0});
    return node.grad.ptr();
  }

  void accumulate(std::size_t id, std::span<const T> g) {
    if (T* dst = grad_buffer(id)) {
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    }
  }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  Var<T> push(Tensor<T> value, bool requires_grad, std::vector<std::size_t> inputs,
              BackwardFn fn) {
    nodes_.push_back(Node{std::move(value), Tensor<T>(), requires_grad, std::move(inputs),
                          std::move(fn)});
    return Var<T>(this, nodes_.size() - 1);
  }

  std::deque<Node> nodes_;
};

}  // namespace ntlgen::ad
