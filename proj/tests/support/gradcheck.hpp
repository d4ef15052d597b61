#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "igbeat/tape.hpp"
#include "igbeat/tensor.hpp"

namespace igbeat::testing {

using LossBuilder = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

inline double rel_error(double a, double b, double floor = 1e-4) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

inline ad::Tensor random_tensor(ad::Shape shape, std::mt19937_64& rng, double lo = -1.0,
                                double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(ad::shape_size(shape));
  for (double& x : v) x = u(rng);
  return ad::Tensor(std::move(shape), std::move(v), true);
}

// Worst relative error between the tape gradient and central differences
// over every element of every input.
inline double max_gradient_error(std::vector<ad::Tensor>& inputs, const LossBuilder& build,
                                 double h = 1e-5) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.clear_grad();
  }
  {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (auto& t : inputs) vars.push_back(tape.parameter(t));
    tape.backward(build(tape, vars));
  }
  auto eval = [&] {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (auto& t : inputs) vars.push_back(tape.parameter(t, false));
    return build(tape, vars).item();
  };
  double worst = 0.0;
  for (auto& t : inputs) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double orig = t[i];
      t[i] = orig + h;
      const double up = eval();
      t[i] = orig - h;
      const double down = eval();
      t[i] = orig;
      worst = std::max(worst, rel_error(t.grad()[i], (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

}  // namespace igbeat::testing
