#pragma once

#include <array>
#include <vector>

#include "cbct/ad/var.hpp"

/// Differentiable operations. Shape mismatches throw ShapeError naming both
/// shapes. Layout conventions (batch size 1 throughout):
///   volumes   [C, D, H, W]
///   images    [C, H, W]
///   sequences [tokens, features]
namespace cbct::inline CBCT_REAL_NS::ad {

// Elementwise, same shape.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var mul_scalar(const Var& a, real s);
/// Gradient at exactly 0 is 0.
Var relu(const Var& x);
/// Exact (erf) form.
Var gelu(const Var& x);

// Reductions to a rank-0 tensor. Accumulation is done in double.
Var sum(const Var& x);
Var mean(const Var& x);
/// mean((a - b)^2)
Var mse(const Var& a, const Var& b);

Var reshape(const Var& x, Shape shape);
Var permute(const Var& x, const std::vector<int>& axes);
Var concat(const std::vector<Var>& xs, int axis);
/// x[begin:end] along axis 0.
Var slice0(const Var& x, std::int64_t begin, std::int64_t end);

/// [m, k] x [k, n]
Var matmul(const Var& a, const Var& b);
/// x [..., in], w [out, in], optional b [out] (pass an undefined Var for none).
Var linear(const Var& x, const Var& w, const Var& b);

Var softmax(const Var& x, int axis);
/// Normalises over the last axis; gamma/beta have that axis' length.
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, real eps = real(1e-5));
/// x [C, ...]: per-channel statistics over all remaining axes (the batch-1
/// reading of batch normalisation), learnable gamma/beta [C].
Var batch_norm(const Var& x, const Var& gamma, const Var& beta, real eps = real(1e-5));

/// Multi-head attention core. q, k, v: [n, E] with E divisible by heads.
/// Returns concat_h softmax(q_h k_h^T / sqrt(E/heads)) v_h, shape [n, E].
Var scaled_dot_product_attention(const Var& q, const Var& k, const Var& v, int heads);
/// Attention weights [heads, n, n] used by the op above.
Tensor attention_probabilities(const Tensor& q, const Tensor& k, int heads);

/// Stride-1 convolution. x [Cin, D, H, W], w [Cout, Cin, kd, kh, kw], optional b [Cout].
Var conv3d(const Var& x, const Var& w, const Var& b, std::array<int, 3> pad);
/// Kernel 2, stride 2. x [Cin, D, H, W], w [Cin, Cout, 2, 2, 2], optional b -> [Cout, 2D, 2H, 2W].
Var conv_transpose3d(const Var& x, const Var& w, const Var& b);
/// Stride-1 convolution. x [Cin, H, W], w [Cout, Cin, kh, kw], optional b [Cout].
Var conv2d(const Var& x, const Var& w, const Var& b, std::array<int, 2> pad);

/// 2x2 (2x2x2) max pooling with stride 2; odd trailing rows are dropped.
Var max_pool2d(const Var& x);
Var max_pool3d(const Var& x);

/// x [C, D, H, W] -> [(D/p)(H/p)(W/p), C p^3]. Tokens are ordered over the
/// patch grid with the W index fastest; features as (c, dz, dy, dx).
Var patchify_3d(const Var& x, int patch);
/// Inverse of patchify_3d.
Var unpatchify_3d(const Var& tokens, int channels, std::array<std::int64_t, 3> dims, int patch);

/// x [C, ...] -> [2, C]: row 0 the per-channel means, row 1 the population
/// standard deviations sqrt(var + eps).
Var channel_stats(const Var& x, real eps = real(1e-6));
/// (x[c, ...] - stats[0, c]) / stats[1, c].
Var channel_normalize(const Var& x, const Var& stats);

}  // namespace cbct::inline CBCT_REAL_NS::ad
