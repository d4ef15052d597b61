#include "igbeat/backbone.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "igbeat/errors.hpp"

namespace igbeat::model {
namespace {

using ad::Var;

Var linear(const BoundParameters& p, Var x, std::string_view w, std::string_view b) {
  return ad::add_row(ad::matmul(x, p[w]), p[b]);
}

Var silu(Var x) { return ad::mul(x, ad::sigmoid(x)); }

Var zeros_row(ad::Tape& tape, std::size_t d) {
  return tape.constant(ad::Tensor({1, d}, 0.0));
}

Var gru_block(const BoundParameters& p, Var h) {
  Var xw = linear(p, h, "block.w_x", "block.b");
  return ad::gru_scan(xw, p["block.u_rz"], p["block.u_n"]);
}

Var lstm_block(const BoundParameters& p, Var h, std::size_t d) {
  const std::size_t T = h.rows();
  Var xw = linear(p, h, "block.w_x", "block.b");
  Var u_h = p["block.u_h"];
  Var prev_h = zeros_row(p.tape(), d);
  Var prev_c = zeros_row(p.tape(), d);
  std::vector<Var> outs;
  outs.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    Var pre = ad::add(ad::slice_rows(xw, t, t + 1), ad::matmul(prev_h, u_h));
    Var ifo = ad::sigmoid(ad::slice_cols(pre, 0, 3 * d));
    Var g = ad::tanh(ad::slice_cols(pre, 3 * d, 4 * d));
    Var i = ad::slice_cols(ifo, 0, d);
    Var f = ad::slice_cols(ifo, d, 2 * d);
    Var o = ad::slice_cols(ifo, 2 * d, 3 * d);
    prev_c = ad::add(ad::mul(f, prev_c), ad::mul(i, g));
    prev_h = ad::mul(o, ad::tanh(prev_c));
    outs.push_back(prev_h);
  }
  return ad::concat_rows(outs);
}

Var diag_ssm_block(const BoundParameters& p, Var h) {
  // Zero-order hold of x' = A x + B u with step dt per channel:
  //   A_bar = exp(dt A),  B_bar = dt * exprel(dt A) * B
  Var a = ad::scale(ad::exp(p["block.log_neg_a"]), -1.0);
  Var dt = ad::exp(p["block.log_dt"]);
  Var dt_a = ad::mul_col(a, dt);
  Var a_bar = ad::exp(dt_a);
  Var b_bar = ad::mul(ad::mul_col(ad::exprel(dt_a), dt), p["block.b"]);
  return ad::diag_ssm_scan(h, a_bar, b_bar, p["block.c"], p["block.skip"]);
}

Var selective_ssm_block(const BoundParameters& p, Var h, std::size_t d) {
  Var xz = linear(p, h, "block.w_in", "block.b_in");
  Var u = silu(ad::slice_cols(xz, 0, d));
  Var gate = silu(ad::slice_cols(xz, d, 2 * d));
  Var delta = ad::softplus(linear(p, u, "block.w_dt", "block.b_dt"));
  Var b = ad::matmul(u, p["block.w_b"]);
  Var c = ad::matmul(u, p["block.w_c"]);
  Var a = ad::scale(ad::exp(p["block.log_neg_a"]), -1.0);
  Var y = ad::selective_scan(u, delta, a, b, c, p["block.skip"]);
  return ad::mul(y, gate);
}

void check_sequence(std::span<const double> x) {
  if (x.empty()) throw DomainError("empty R-R sequence");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !std::isfinite(x[i])) {
      throw DomainError("R-R interval " + std::to_string(i) + " is not positive: " +
                        std::to_string(x[i]));
    }
  }
}

}  // namespace

Var embed(const BoundParameters& p, std::span<const double> x) {
  check_sequence(x);
  ad::Tape& tape = p.tape();
  Var xs = tape.constant(ad::Tensor({x.size(), 1}, std::vector<double>(x.begin(), x.end())));
  Var lin = linear(p, xs, "embed.weight", "embed.bias");
  return ad::add_row(ad::mul_row(ad::layer_norm(lin), p["norm.gain"]), p["norm.bias"]);
}

Var block_forward(const BoundParameters& p, Var h, const BackboneConfig& config) {
  const std::size_t d = config.model_dim;
  if (h.cols() != d) {
    throw ShapeError("block input has shape " + ad::shape_str(h.shape()) +
                     ", expected model_dim " + std::to_string(d));
  }
  Var core;
  switch (config.variant) {
    case Variant::kGru: core = gru_block(p, h); break;
    case Variant::kLstm: core = lstm_block(p, h, d); break;
    case Variant::kDiagSsm: core = diag_ssm_block(p, h); break;
    case Variant::kSelectiveSsm: core = selective_ssm_block(p, h, d); break;
  }
  return ad::add(h, linear(p, core, "block.w_out", "block.b_out"));
}

Var mean_head(const BoundParameters& p, Var h1, const BackboneConfig& config) {
  // softplus underflows below ulp(0.3) near z = -37; keep mu strictly above the floor
  constexpr double kMargin = 1e-15;
  Var sp = ad::softplus(linear(p, h1, "mean.weight", "mean.bias"));
  return ad::add_scalar(
      ad::clip_with_straight_through(sp, kMargin, std::numeric_limits<double>::max()),
      config.mu_floor);
}

Var var_head_raw(const BoundParameters& p, Var h1) {
  return linear(p, ad::tanh(linear(p, h1, "var.w1", "var.b1")), "var.w2", "var.b2");
}

Var var_head(const BoundParameters& p, Var h1, const BackboneConfig& config, bool clip) {
  Var raw = var_head_raw(p, h1);
  if (!clip) return raw;
  return ad::clip_with_straight_through(raw, config.logvar_lo, config.logvar_hi);
}

HeadOutputs run_model(const BoundParameters& p, std::span<const double> x,
                      const BackboneConfig& config, bool training) {
  Var h = embed(p, x);
  Var h1 = block_forward(p, h, config);
  const bool clip = training ? config.clip_logvar_in_training : config.clip_logvar_at_inference;
  return {mean_head(p, h1, config), var_head(p, h1, config, clip)};
}

Var ig_nll(Var mu, Var logvar, std::span<const double> targets) {
  const std::size_t n = targets.size();
  if (mu.size() != n || logvar.size() != n) {
    throw ShapeError("ig_nll: " + std::to_string(n) + " targets for mu " +
                     ad::shape_str(mu.shape()) + " and logvar " + ad::shape_str(logvar.shape()));
  }
  constexpr double kLog2Pi = 1.8378770664093454835606594728112;
  std::vector<double> x(targets.begin(), targets.end());
  std::vector<double> offset(n), inv_2x(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0)) throw DomainError("non-positive target interval");
    offset[i] = 0.5 * (kLog2Pi + 3.0 * std::log(x[i]));
    inv_2x[i] = 0.5 / x[i];
  }
  ad::Tape& tape = *mu.tape();
  const ad::Shape shape = mu.shape();
  Var xc = tape.constant(shape, std::move(x));
  // 0.5 log(2 pi x^3 sigma^2 / mu^3) + mu (x - mu)^2 / (2 sigma^2 x)
  Var diff = ad::sub(xc, mu);
  Var quad = ad::mul(ad::mul(mu, ad::mul(diff, diff)),
                     ad::mul(ad::exp(ad::scale(logvar, -1.0)), tape.constant(shape, inv_2x)));
  Var logs = ad::scale(ad::sub(logvar, ad::scale(ad::log(mu), 3.0)), 0.5);
  return ad::reduce_sum(ad::add(ad::add(logs, quad), tape.constant(shape, offset)));
}

ig::IGTrajectory forward(std::span<const double> x, ModelParameters& params,
                         const BackboneConfig& config) {
  if (x.size() < 2) throw DomainError("forward needs at least 2 intervals");
  ad::Tape tape;
  BoundParameters bound(tape, params, false);
  const auto inputs = x.first(x.size() - 1);
  HeadOutputs out = run_model(bound, inputs, config, false);
  auto mu = out.mu.values();
  auto lv = out.logvar.values();
  ig::IGTrajectory traj;
  traj.params.reserve(inputs.size());
  traj.targets.assign(x.begin() + 1, x.end());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    traj.params.push_back({mu[i], std::exp(0.5 * lv[i])});
  }
  return traj;
}

double loss_and_gradient(std::span<const double> x, ModelParameters& params,
                         const BackboneConfig& config) {
  if (x.size() < 2) throw DomainError("loss needs at least 2 intervals");
  ad::Tape tape;
  BoundParameters bound(tape, params, true);
  HeadOutputs out = run_model(bound, x.first(x.size() - 1), config, true);
  Var nll = ig_nll(out.mu, out.logvar, x.subspan(1));
  tape.backward(nll);
  return nll.item();
}

double loss(std::span<const double> x, ModelParameters& params, const BackboneConfig& config,
            bool training) {
  if (x.size() < 2) throw DomainError("loss needs at least 2 intervals");
  ad::Tape tape;
  BoundParameters bound(tape, params, false);
  HeadOutputs out = run_model(bound, x.first(x.size() - 1), config, training);
  return ig_nll(out.mu, out.logvar, x.subspan(1)).item();
}

}  // namespace igbeat::model
