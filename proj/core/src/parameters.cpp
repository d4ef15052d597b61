#include <algorithm>
#include <cmath>
#include <string>

#include "igbeat/backbone.hpp"
#include "igbeat/errors.hpp"

namespace igbeat::model {
namespace {

using ad::Tensor;

Tensor uniform(ad::Shape shape, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape), 0.0, true);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

Tensor fan_in(std::size_t in, std::size_t out, Rng& rng) {
  return uniform({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), rng);
}

Tensor filled(std::size_t n, double value) { return Tensor({n}, value, true); }

double log_uniform(double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> dist(std::log(lo), std::log(hi));
  return std::exp(dist(rng));
}

double inverse_softplus(double y) { return std::log(std::expm1(y)); }

}  // namespace

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kGru: return "gru";
    case Variant::kLstm: return "lstm";
    case Variant::kDiagSsm: return "ssm-diag";
    case Variant::kSelectiveSsm: return "ssm-selective";
  }
  return "unknown";
}

std::string_view variant_label(Variant v) {
  switch (v) {
    case Variant::kGru: return "GRU";
    case Variant::kLstm: return "LSTM";
    case Variant::kDiagSsm: return "S4";
    case Variant::kSelectiveSsm: return "Mamba";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : kAllVariants) {
    if (name == variant_name(v)) return v;
  }
  throw std::invalid_argument("unknown variant '" + std::string(name) +
                              "' (expected gru, lstm, ssm-diag or ssm-selective)");
}

void BackboneConfig::validate() const {
  if (model_dim == 0) throw std::invalid_argument("model_dim must be > 0");
  const bool ssm = variant == Variant::kDiagSsm || variant == Variant::kSelectiveSsm;
  if (ssm && state_dim == 0) throw std::invalid_argument("state_dim must be > 0 for SSM variants");
  if (!(mu_floor > 0.0)) throw std::invalid_argument("mu_floor must be > 0");
  if (!(logvar_lo < logvar_hi)) throw std::invalid_argument("log-variance clip needs lo < hi");
}

ModelParameters ModelParameters::initialize(const BackboneConfig& config, Rng& rng) {
  config.validate();
  const std::size_t d = config.model_dim;
  const std::size_t n = config.state_dim;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  ModelParameters p;

  p.add("embed.weight", uniform({1, d}, 1.0, rng));
  p.add("embed.bias", uniform({d}, 1.0, rng));
  p.add("norm.gain", filled(d, 1.0));
  p.add("norm.bias", filled(d, 0.0));

  switch (config.variant) {
    case Variant::kGru:
      // input projections for (r, z, n); recurrent (r, z) and n separately
      p.add("block.w_x", fan_in(d, 3 * d, rng));
      p.add("block.u_rz", fan_in(d, 2 * d, rng));
      p.add("block.u_n", fan_in(d, d, rng));
      p.add("block.b", filled(3 * d, 0.0));
      break;
    case Variant::kLstm: {
      // gate order (i, f, o, g)
      p.add("block.w_x", fan_in(d, 4 * d, rng));
      p.add("block.u_h", fan_in(d, 4 * d, rng));
      Tensor b = filled(4 * d, 0.0);
      for (std::size_t j = d; j < 2 * d; ++j) b[j] = 1.0;
      p.add("block.b", std::move(b));
      break;
    }
    case Variant::kDiagSsm: {
      // |A| log-spaced from 0.5 to 0.5 * n across the state index
      Tensor log_neg_a({d, n}, 0.0, true);
      const double lo = std::log(0.5);
      const double hi = std::log(0.5 * static_cast<double>(std::max<std::size_t>(n, 2)));
      for (std::size_t c = 0; c < d; ++c)
        for (std::size_t k = 0; k < n; ++k)
          log_neg_a.at(c, k) = n > 1 ? lo + (hi - lo) * static_cast<double>(k) / (n - 1) : lo;
      p.add("block.log_neg_a", std::move(log_neg_a));
      Tensor log_dt({d}, 0.0, true);
      for (double& v : log_dt.values()) v = std::log(log_uniform(1e-3, 1e-1, rng));
      p.add("block.log_dt", std::move(log_dt));
      p.add("block.b", Tensor({d, n}, 1.0, true));
      p.add("block.c", uniform({d, n}, 1.0 / std::sqrt(static_cast<double>(n)), rng));
      p.add("block.skip", uniform({d}, 1.0, rng));
      break;
    }
    case Variant::kSelectiveSsm: {
      p.add("block.w_in", fan_in(d, 2 * d, rng));
      p.add("block.b_in", filled(2 * d, 0.0));
      p.add("block.w_dt", uniform({d, d}, inv_sqrt_d, rng));
      Tensor b_dt({d}, 0.0, true);
      for (double& v : b_dt.values()) v = inverse_softplus(log_uniform(1e-3, 1e-1, rng));
      p.add("block.b_dt", std::move(b_dt));
      p.add("block.w_b", fan_in(d, n, rng));
      p.add("block.w_c", fan_in(d, n, rng));
      Tensor log_neg_a({d, n}, 0.0, true);
      for (std::size_t c = 0; c < d; ++c)
        for (std::size_t k = 0; k < n; ++k) log_neg_a.at(c, k) = std::log(k + 1.0);
      p.add("block.log_neg_a", std::move(log_neg_a));
      p.add("block.skip", filled(d, 1.0));
      break;
    }
  }
  p.add("block.w_out", fan_in(d, d, rng));
  p.add("block.b_out", filled(d, 0.0));

  p.add("mean.weight", fan_in(d, 1, rng));
  p.add("mean.bias", filled(1, inverse_softplus(0.9 - config.mu_floor)));
  p.add("var.w1", fan_in(d, d, rng));
  p.add("var.b1", filled(d, 0.0));
  p.add("var.w2", fan_in(d, 1, rng));
  p.add("var.b2", filled(1, -5.0));
  return p;
}

void ModelParameters::add(std::string name, ad::Tensor tensor) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(tensor));
}

bool ModelParameters::contains(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

ad::Tensor& ModelParameters::at(std::string_view name) {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::out_of_range("no parameter named '" + std::string(name) + "'");
  return tensors_[static_cast<std::size_t>(it - names_.begin())];
}

const ad::Tensor& ModelParameters::at(std::string_view name) const {
  return const_cast<ModelParameters*>(this)->at(name);
}

std::vector<ad::Tensor*> ModelParameters::pointers() {
  std::vector<ad::Tensor*> out;
  out.reserve(tensors_.size());
  for (auto& t : tensors_) out.push_back(&t);
  return out;
}

std::size_t ModelParameters::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

bool ModelParameters::all_finite() const {
  return std::all_of(tensors_.begin(), tensors_.end(),
                     [](const ad::Tensor& t) { return t.all_finite(); });
}

void ModelParameters::clear_grads() {
  for (auto& t : tensors_) t.clear_grad();
}

BoundParameters::BoundParameters(ad::Tape& tape, ModelParameters& params, bool track_grad)
    : tape_(&tape), params_(&params) {
  vars_.reserve(params.count());
  for (std::size_t i = 0; i < params.count(); ++i) {
    vars_.push_back(tape.parameter(params.tensor(i), track_grad));
  }
}

ad::Var BoundParameters::operator[](std::string_view name) const {
  for (std::size_t i = 0; i < params_->count(); ++i) {
    if (params_->name(i) == name) return vars_[i];
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

}  // namespace igbeat::model
