#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "igbeat/tensor.hpp"

namespace igbeat::ad {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are bound to the position of each
// tensor in the list passed to step(), so the list must be stable across calls.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  // Updates every tensor with requires_grad set, then releases its gradient.
  // Throws TapeError if such a tensor has no gradient.
  void step(std::span<Tensor* const> params);

  const AdamOptions& options() const { return options_; }
  void set_lr(double lr) { options_.lr = lr; }
  std::size_t steps_taken() const { return t_; }

 private:
  AdamOptions options_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace igbeat::ad
