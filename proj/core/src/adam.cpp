#include "igbeat/adam.hpp"

#include <cmath>
#include <string>

#include "igbeat/errors.hpp"

namespace igbeat::ad {

void Adam::step(std::span<Tensor* const> params) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
  } else if (m_.size() != params.size()) {
    throw TapeError("Adam::step called with a different parameter list");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& p = *params[i];
    if (p.requires_grad() && p.grad().size() != p.size()) {
      throw TapeError("parameter " + std::to_string(i) + " has no gradient");
    }
  }

  ++t_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    if (!p.requires_grad()) continue;
    auto& m = m_[i];
    auto& v = v_[i];
    if (m.size() != p.size()) {
      m.assign(p.size(), 0.0);
      v.assign(p.size(), 0.0);
    }
    auto w = p.values();
    auto g = p.grad();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      w[k] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
    p.clear_grad();
  }
}

}  // namespace igbeat::ad
