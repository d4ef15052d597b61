#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "igbeat/tensor.hpp"

namespace igbeat::ad {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// tape is alive.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }

  const Shape& shape() const;
  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t size() const;
  std::span<const double> values() const;
  // Value of a single-element Var.
  double item() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

// Linear record of primitive operations. Nodes are appended in evaluation
// order, so reverse order is a valid topological order for backward().
// A tape supports exactly one backward pass.
class Tape {
 public:
  // Called during backward() with the node's own handle; reads
  // grad_if_any(out) and adds into grad(input) for each input.
  using BackwardFn = std::function<void(Tape&, Var out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var constant(Shape shape, std::vector<double> values);
  // Leaf that reads `param`'s values in place. Gradients are added into
  // param.grad() by backward() when param.requires_grad() is set. The tensor
  // must outlive the tape and must not be modified while it is in use.
  // With track_grad = false the leaf behaves as a constant.
  Var parameter(Tensor& param, bool track_grad = true);

  // Appends a node. `fn` is dropped when no input needs a gradient.
  Var record(Shape shape, std::vector<double> values, std::initializer_list<Var> inputs,
             BackwardFn fn);
  Var record(Shape shape, std::vector<double> values, std::span<const Var> inputs,
             BackwardFn fn);

  const Shape& shape(Var v) const;
  std::span<const double> value(Var v) const;
  bool needs_grad(Var v) const;

  // Gradient buffer of a node, allocated zero-filled on first access.
  std::span<double> grad(Var v);
  // Gradient buffer if allocated, else empty.
  std::span<const double> grad_if_any(Var v) const;

  // Populates gradients of every parameter leaf with d(loss)/d(param).
  void backward(Var loss);
  bool consumed() const { return consumed_; }
  std::size_t size() const { return nodes_.size(); }

  void check_owned(Var v) const;

 private:
  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    Tensor* param = nullptr;
    BackwardFn backward;
    bool tracked = false;
    bool needs_grad = false;
  };

  Node& node(Var v);
  const Node& node(Var v) const;

  std::deque<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace igbeat::ad
