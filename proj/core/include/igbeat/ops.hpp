#pragma once

#include <cstddef>
#include <span>

#include "igbeat/tape.hpp"

namespace igbeat::ad {

// Elementwise, identical shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

// x [rows x cols] combined with a length-cols vector broadcast over rows.
Var add_row(Var x, Var row);
Var mul_row(Var x, Var row);
// x [rows x cols] scaled per row by a length-rows vector.
Var mul_col(Var x, Var col);

Var scale(Var a, double s);
Var add_scalar(Var a, double s);

// [m x k] * [k x n] -> [m x n]. Rank-1 operands are treated as a single row.
Var matmul(Var a, Var b);

Var exp(Var a);
Var log(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
// (e^x - 1) / x with the removable singularity filled in (value 1 at 0).
Var exprel(Var a);

Var slice_rows(Var x, std::size_t begin, std::size_t end);
Var slice_cols(Var x, std::size_t begin, std::size_t end);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);

// Sum of all elements, as a scalar.
Var reduce_sum(Var a);

// Per-row normalization to zero mean and unit (population) variance; no
// affine part.
Var layer_norm(Var x, double eps = 1e-12);

// Forward clamps to [lo, hi]. Backward passes the gradient where the input
// lies inside [lo, hi] and blocks it outside.
Var clip_with_straight_through(Var x, double lo, double hi);

// Time-invariant diagonal state-space scan over T steps, d channels and n
// states per channel:
//   s_t[c,k] = a_bar[c,k] s_{t-1}[c,k] + b_bar[c,k] u_t[c]
//   y_t[c]   = sum_k c_proj[c,k] s_t[c,k] + skip[c] u_t[c]
// u: [T x d], a_bar/b_bar/c_proj: [d x n], skip: [d]. Returns y: [T x d].
Var diag_ssm_scan(Var u, Var a_bar, Var b_bar, Var c_proj, Var skip);

// Input-dependent diagonal scan (zero-order hold on the decay, Euler on the
// input):
//   s_t[c,k] = exp(delta_t[c] a[c,k]) s_{t-1}[c,k] + delta_t[c] b_t[k] u_t[c]
//   y_t[c]   = sum_k c_t[k] s_t[c,k] + skip[c] u_t[c]
// u, delta: [T x d], a: [d x n], b, c: [T x n], skip: [d].
Var selective_scan(Var u, Var delta, Var a, Var b, Var c, Var skip);

// Gated recurrent unit over T steps from h_0 = 0, given the input projections
// xw = [x W_r + b_r | x W_z + b_z | x W_n + b_n] of shape [T x 3d]:
//   [r z] = sigmoid(xw[:, :2d] + h_{t-1} u_rz)
//   n     = tanh(xw[:, 2d:] + (r * h_{t-1}) u_n)
//   h_t   = (1 - z) n + z h_{t-1}
// u_rz: [d x 2d], u_n: [d x d]. Returns h: [T x d].
Var gru_scan(Var xw, Var u_rz, Var u_n);

}  // namespace igbeat::ad
