#include "igbeat/tape.hpp"

#include <string>

#include "igbeat/errors.hpp"

namespace igbeat::ad {

const Shape& Var::shape() const { return tape_->shape(*this); }

std::size_t Var::rows() const {
  const auto& s = shape();
  return s.size() == 2 ? s[0] : 1;
}

std::size_t Var::cols() const {
  const auto& s = shape();
  return s.empty() ? 1 : s.back();
}

std::size_t Var::size() const { return values().size(); }

std::span<const double> Var::values() const { return tape_->value(*this); }

double Var::item() const {
  auto v = values();
  if (v.size() != 1) {
    throw ShapeError("item() on a tensor of shape " + shape_str(shape()));
  }
  return v[0];
}

Var Tape::constant(Tensor value) {
  Node n;
  n.shape = value.shape();
  n.value.assign(value.values().begin(), value.values().end());
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Shape shape, std::vector<double> values) {
  return constant(Tensor(std::move(shape), std::move(values)));
}

Var Tape::parameter(Tensor& param, bool track_grad) {
  if (consumed_) throw TapeError("tape already consumed by backward()");
  Node n;
  n.shape = param.shape();
  n.param = &param;
  n.tracked = track_grad && param.requires_grad();
  n.needs_grad = n.tracked;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::record(Shape shape, std::vector<double> values, std::initializer_list<Var> inputs,
                 BackwardFn fn) {
  return record(std::move(shape), std::move(values),
                std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

Var Tape::record(Shape shape, std::vector<double> values, std::span<const Var> inputs,
                 BackwardFn fn) {
  if (consumed_) throw TapeError("tape already consumed by backward()");
  if (values.size() != shape_size(shape)) {
    throw ShapeError("recorded value count does not match shape " + shape_str(shape));
  }
  Node n;
  n.shape = std::move(shape);
  n.value = std::move(values);
  for (const Var& in : inputs) {
    check_owned(in);
    n.needs_grad = n.needs_grad || node(in).needs_grad;
  }
  if (n.needs_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

void Tape::check_owned(Var v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw TapeError("value handle does not belong to this tape");
  }
}

Tape::Node& Tape::node(Var v) {
  check_owned(v);
  return nodes_[v.id()];
}

const Tape::Node& Tape::node(Var v) const {
  check_owned(v);
  return nodes_[v.id()];
}

const Shape& Tape::shape(Var v) const { return node(v).shape; }

std::span<const double> Tape::value(Var v) const {
  const Node& n = node(v);
  if (n.param) return n.param->values();
  return n.value;
}

bool Tape::needs_grad(Var v) const { return node(v).needs_grad; }

std::span<double> Tape::grad(Var v) {
  Node& n = node(v);
  if (n.grad.empty()) n.grad.assign(shape_size(n.shape), 0.0);
  return n.grad;
}

std::span<const double> Tape::grad_if_any(Var v) const { return node(v).grad; }

void Tape::backward(Var loss) {
  if (!loss.valid() || loss.tape() != this) {
    throw TapeError("loss is not connected to this tape");
  }
  if (consumed_) throw TapeError("backward() called twice on the same tape");
  Node& root = node(loss);
  if (shape_size(root.shape) != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " + shape_str(root.shape));
  }
  consumed_ = true;

  for (Node& n : nodes_) {
    if (n.tracked) n.param->ensure_grad();
  }
  if (!root.needs_grad) return;

  grad(loss)[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.backward) {
      n.backward(*this, Var(this, static_cast<std::uint32_t>(i)));
    } else if (n.param) {
      auto dst = n.param->ensure_grad();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += n.grad[k];
    }
  }
}

}  // namespace igbeat::ad
