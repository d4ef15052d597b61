#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "igbeat/igdist.hpp"
#include "igbeat/ops.hpp"
#include "igbeat/tape.hpp"
#include "igbeat/tensor.hpp"

namespace igbeat::model {

enum class Variant { kGru, kLstm, kDiagSsm, kSelectiveSsm };

inline constexpr Variant kAllVariants[] = {Variant::kGru, Variant::kLstm, Variant::kDiagSsm,
                                           Variant::kSelectiveSsm};

// CLI spelling: gru | lstm | ssm-diag | ssm-selective.
std::string_view variant_name(Variant v);
// Column heading used in summary tables: GRU | LSTM | S4 | Mamba.
std::string_view variant_label(Variant v);
Variant parse_variant(std::string_view name);

struct BackboneConfig {
  Variant variant = Variant::kGru;
  std::size_t model_dim = 64;
  std::size_t state_dim = 32;  // SSM variants only
  double mu_floor = 0.3;       // seconds
  double logvar_lo = -9.0;
  double logvar_hi = 1.5;
  bool clip_logvar_in_training = true;
  bool clip_logvar_at_inference = true;

  void validate() const;
};

// Named learnable tensors of one model, in a fixed order.
class ModelParameters {
 public:
  ModelParameters() = default;

  // Fresh parameters for `config`; see backbone.cpp for the initialization
  // scheme of each block.
  static ModelParameters initialize(const BackboneConfig& config, Rng& rng);

  void add(std::string name, ad::Tensor tensor);
  bool contains(std::string_view name) const;
  ad::Tensor& at(std::string_view name);
  const ad::Tensor& at(std::string_view name) const;

  std::size_t count() const { return tensors_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  ad::Tensor& tensor(std::size_t i) { return tensors_[i]; }
  const ad::Tensor& tensor(std::size_t i) const { return tensors_[i]; }

  // Pointers stay valid until the next add().
  std::vector<ad::Tensor*> pointers();
  std::size_t scalar_count() const;
  bool all_finite() const;
  void clear_grads();

 private:
  std::vector<std::string> names_;
  std::vector<ad::Tensor> tensors_;
};

// Parameters registered as leaves on one tape.
class BoundParameters {
 public:
  BoundParameters(ad::Tape& tape, ModelParameters& params, bool track_grad);
  ad::Var operator[](std::string_view name) const;
  ad::Tape& tape() const { return *tape_; }

 private:
  ad::Tape* tape_;
  const ModelParameters* params_;
  std::vector<ad::Var> vars_;
};

// h_t = LayerNorm(W_e x_t + b_e) * gain + bias, one row per position. [T x d]
ad::Var embed(const BoundParameters& p, std::span<const double> x);

// h1_t = h_t + B(h_{1:t}). [T x d] -> [T x d]
ad::Var block_forward(const BoundParameters& p, ad::Var h, const BackboneConfig& config);

// mu_t = softplus(W_mu h1_t + b_mu) + mu_floor. [T x 1]
ad::Var mean_head(const BoundParameters& p, ad::Var h1, const BackboneConfig& config);

// Raw two-layer MLP output before clipping. [T x 1]
ad::Var var_head_raw(const BoundParameters& p, ad::Var h1);
// log sigma^2_t, clipped to [logvar_lo, logvar_hi] when `clip` is set. [T x 1]
ad::Var var_head(const BoundParameters& p, ad::Var h1, const BackboneConfig& config, bool clip);

struct HeadOutputs {
  ad::Var mu;
  ad::Var logvar;
};

// Runs embedding, block and both heads over every position of x.
HeadOutputs run_model(const BoundParameters& p, std::span<const double> x,
                      const BackboneConfig& config, bool training);

// Summed IG negative log-likelihood of `targets` under (mu, logvar), as a
// scalar on the same tape.
ad::Var ig_nll(ad::Var mu, ad::Var logvar, std::span<const double> targets);

// One-step-ahead predictions: position i (using x_{1..i}) is paired with
// x_{i+1}, giving T-1 pairs. Requires T >= 2.
ig::IGTrajectory forward(std::span<const double> x, ModelParameters& params,
                         const BackboneConfig& config);

// Summed one-step-ahead NLL of a sequence; adds d(loss)/d(params) into the
// parameter gradients. Returns the loss.
double loss_and_gradient(std::span<const double> x, ModelParameters& params,
                         const BackboneConfig& config);
// Same loss without a backward pass.
double loss(std::span<const double> x, ModelParameters& params, const BackboneConfig& config,
            bool training = true);

}  // namespace igbeat::model
