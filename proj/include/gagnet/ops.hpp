#pragma once

#include "gagnet/tape.hpp"

#include <vector>

namespace gagnet {

// Differentiable graph primitives. Tensors are row-major; convention for
// feature maps is (C, T, F) in 2-d land and (D, T) in 1-d land, channels
// outermost, frames before frequency.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var vdiv(Var a, Var b);
Var scale(Var a, Real c);
Var sigmoid(Var x);
Var clamp_min(Var x, Real floor);

/// Per-channel leaky rectifier; alpha has one slope per channel (dim 0 of x).
Var prelu(Var x, Var alpha);

/// Elementwise sqrt(re^2 + im^2) with subgradient 0 at the origin.
Var magnitude(Var re, Var im);

/// Stack 2-d (rows_i, T) inputs along the row axis.
Var concat_rows(const std::vector<Var>& xs);

/// (C, T, F) -> (C*F, T); row index is c*F + f.
Var feature_rows(Var x);

Var sum_all(Var x);  // -> shape {1}

/// Per-frame affine map: x (Din, T), w (Dout, Din), b (Dout) -> (Dout, T).
Var linear(Var x, Var w, Var b);

/// Causal dilated 1-d convolution: x (Cin, T), w (Cout, Cin, k), left-padded
/// with (k-1)*dilation zeros so frame t sees frames <= t only.
Var conv1d(Var x, Var w, Var b, Index dilation);

/// 2-d convolution, causal in time (kernel_t-1 zeros prepended), valid and
/// strided along frequency. x (Cin, T, F), w (Cout, Cin, kt, kf) -> (Cout, T, F').
Var conv2d(Var x, Var w, Var b, Index stride_f);

/// Frequency-axis transposed convolution with time kernel 1.
/// x (Cin, T, F), w (Cin, Cout, kf) -> (Cout, T, out_f); out_f may exceed the
/// kernel's reach by one column, which then holds only the bias.
Var conv_transpose2d(Var x, Var w, Var b, Index stride_f, Index out_f);

/// Affine instance norm over all non-channel axes; channel = dim 0.
Var instance_norm(Var x, Var gamma, Var beta, Real eps = 1e-8);

/// Causal variant: frame t is normalized with statistics over frames <= t
/// (and all frequency bins), per channel.
Var cumulative_norm(Var x, Var gamma, Var beta, Real eps = 1e-8);

// Gated linear units: value branch times sigmoid of gate branch.
Var glu1d(Var x, Var wm, Var bm, Var wg, Var bg);
Var glu2d(Var x, Var wm, Var bm, Var wg, Var bg, Index stride_f);

/// Valid-mode output size: floor((in - kernel) / stride) + 1.
Index conv_out_size(Index in, Index kernel, Index stride);

}  // namespace gagnet
