#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ember/kernels.hpp"
#include "ember/tensor.hpp"

namespace ember {

using NodeId = std::int32_t;

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  NodeId id() const noexcept { return id_; }
  Tape& tape() const { return *tape_; }
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = -1;
};

/// Gradients produced by one backward sweep, indexed by node.
class Gradients {
 public:
  explicit Gradients(std::vector<std::optional<Tensor>> grads) : grads_(std::move(grads)) {}

  // Null when the node received no gradient (not on a path to the root).
  const Tensor* find(Var v) const;
  // Gradient of `v`, zeros when none flowed into it.
  Tensor of(Var v) const;

 private:
  std::vector<std::optional<Tensor>> grads_;
};

/// Append-only record of traced operations. Inputs always precede their
/// consumers, so a reverse sweep over node ids is a valid topological order.
///
/// With gradients disabled the tape still records values but drops the
/// backward closures, which makes it a cheap evaluation arena.
class Tape {
 public:
  // Maps the output gradient to one gradient per input (same order as inputs).
  using BackwardFn = std::function<std::vector<Tensor>(const Tensor& grad_out)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const noexcept { return grad_enabled_; }

  Var leaf(Tensor value, bool requires_grad);
  Var constant(Tensor value) { return leaf(std::move(value), false); }
  Var variable(Tensor value) { return leaf(std::move(value), grad_enabled_); }

  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool requires_grad(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Reverse sweep from a scalar root seeded with 1.
  Gradients backward(Var root) const;

 private:
  struct Node {
    Tensor value;
    std::vector<NodeId> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  bool grad_enabled_;
  std::deque<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }
inline bool Var::requires_grad() const { return tape_->requires_grad(id_); }

// Traced operations. Each mirrors the untraced kernel of the same name.
Var apply_unary(UnaryKind kind, Var x);
Var relu(Var x);
Var sigmoid(Var x);
Var neg(Var x);
Var exp(Var x);
Var log(Var x);
Var clamp_min(Var x, float lo);

Var apply_binary(BinaryKind kind, Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

Var matmul(Var a, Var b);
Var transpose(Var x);
Var conv2d(Var x, Var w, std::optional<Var> bias, Conv2dOptions opts = {});
Var pool_or_resize(ResizeKind kind, Var x);
Var maxpool2(Var x);
Var upsample_nearest2(Var x);
Var reduce(ReduceKind kind, Var x, const Axes& axes = std::nullopt);
Var sum(Var x, const Axes& axes = std::nullopt);
Var mean(Var x, const Axes& axes = std::nullopt);
Var max(Var x, const Axes& axes = std::nullopt);
Var softmax(Var x, std::int64_t axis);
Var reshape(Var x, const Shape& shape);
Var concat(std::span<const Var> inputs, std::int64_t axis);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }
Var operator+(Var a, float b);
Var operator-(float a, Var b);
Var operator*(float a, Var b);

}  // namespace ember
