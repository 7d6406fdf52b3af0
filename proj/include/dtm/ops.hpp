#pragma once

#include <span>
#include <vector>

#include "dtm/tape.hpp"

namespace dtm {

enum class Pad { Same, Valid };

// Elementwise; operands must share dims exactly.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var relu(Var a);

// Numerically stable elementwise logistic; output clamped strictly inside
// (0,1) for every finite input.
Var sigmoid(Var a);

// Row-wise softmax of [n x c] logits (c >= 2) with per-row max subtraction.
Var softmax(Var logits);

// -sum over selected rows of log(probs[i, labels[i]]), probabilities clamped
// below at 1e-12 before the log. selector entries are 0/1.
Var cross_entropy(Var probs, const std::vector<int>& labels,
                  const std::vector<uint8_t>& selector);

Var matmul(Var a, Var b);          // [m x n] * [n x p]
Var transpose(Var a);              // [m x n] -> [n x m]
Var matvec(Var m, Var v);          // [o x i] * [i] -> [o]
Var vec_concat(Var a, Var b);      // [n] ++ [m] -> [n+m]
Var inner(Var a, Var b);           // flattened dot product -> scalar

Var reshape(Var a, std::vector<int> dims);
Var slice_rows(Var a, int from, int to);        // [n x d] -> [(to-from) x d]
Var concat_rows(std::span<const Var> parts);    // along dim 0 of [n_i x d]

// Channel concatenation of [h x w x c_i] maps, order preserved.
Var concat_channels(std::span<const Var> parts);

// Cross-correlation convolution of an [h x w x cin] map with an
// [kh x kw x cin x cout] kernel. Pad::Same keeps spatial dims at stride 1
// (odd kernels only); Pad::Valid uses no padding.
Var conv2d(Var input, Var kernel, int stride, Pad pad);

// Nearest-neighbor 2x spatial upsampling of [h x w x c].
Var upsample2x(Var input);

// Pooled feature of an [h x w x d] map under a {0,1} mask of dims [h x w].
// Denominator is the full area h*w, or the mask area when area_normalized.
Var masked_gap(Var x, const Tensor& mask, bool area_normalized);

// Per-location inner product over channels: [h x w x d] . [d] -> [h x w x 1].
Var channel_dot(Var x, Var v);

// Plain tensor helpers (no tape involvement).
Tensor slice_channels(const Tensor& t, int from, int to);  // [h x w x c]

}  // namespace dtm
