// atts2s/ops.h

// Copyright 2026  The atts2s Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Differentiable operations on Graph nodes. All operations treat tensors as
// matrices (see Tensor::rows / Tensor::cols).
//
// Batched sequences are stored time-major: row t * batch + b holds frame t of
// sequence b. Attention matrices are stored one block per sequence: row
// b * I + i, column j.
//
// The matrix kernels accumulate each output row independently and in a fixed
// order, so a row's result never depends on how many other rows are in the
// batch.

#ifndef ATTS2S_OPS_H_
#define ATTS2S_OPS_H_

#include <vector>

#include "atts2s/graph.h"

namespace atts2s {

/// x[N x Din] * w[Din x Dout] + b[Dout]. `b` may be an invalid Var.
template <typename T>
Var Linear(Graph<T> &g, Var x, Var w, Var b = Var{});

template <typename T>
Var Add(Graph<T> &g, Var a, Var b);
template <typename T>
Var Sub(Graph<T> &g, Var a, Var b);
/// Elementwise product.
template <typename T>
Var Mul(Graph<T> &g, Var a, Var b);
template <typename T>
Var Scale(Graph<T> &g, Var a, double factor);
/// Sum of all elements, as a {1} tensor.
template <typename T>
Var Sum(Graph<T> &g, Var a);
template <typename T>
Var Sigmoid(Graph<T> &g, Var a);
template <typename T>
Var Tanh(Graph<T> &g, Var a);

/// Gated linear unit: x[:, :H] * sigmoid(x[:, H:]).
template <typename T>
Var Glu(Graph<T> &g, Var x);

template <typename T>
Var ConcatCols(Graph<T> &g, Var a, Var b);

/// out.flat[k] = x.flat[index[k]]; gradients scatter-add back.
template <typename T>
Var Gather(Graph<T> &g, Var x, std::vector<int> index, std::vector<int> shape);

/// One gated recurrent update for B rows.
///   x_proj: B x 3h input projection (reset | update | candidate blocks)
///   w_h: h x 3h, b_h: 3h recurrent weights
///   r = sig(x_r + h W_r + b_r), z = sig(x_z + h W_z + b_z)
///   c = tanh(x_c + r * (h W_c + b_c)), h' = (1 - z) * h + z * c
template <typename T>
Var GruCell(Graph<T> &g, Var x_proj, Var h_prev, Var w_h, Var b_h);

/// GruCell unrolled over a time-major sequence (T*batch rows) from a zero
/// state. Rows whose mask is 0 carry the previous state through unchanged.
/// With `reverse`, time runs from the last frame to the first.
template <typename T>
Var GruSequence(Graph<T> &g, Var x_proj, Var w_h, Var b_h, const Mask &mask,
                int batch, bool reverse);

/// Additive attention energies
///   e[b*I + i, j] = score . tanh(keys_proj[i*batch + b] + query_proj[j*batch + b])
template <typename T>
Var AdditiveEnergies(Graph<T> &g, Var keys_proj, Var query_proj, Var score, int batch);

/// Column softmax within consecutive blocks of `group_rows` rows. Masked
/// entries are exactly 0 and every column of every block sums to 1. Throws
/// InvalidMaskError when a block column has no unmasked entry.
template <typename T>
Var SoftmaxMasked(Graph<T> &g, Var e, const Mask &mask, int group_rows);

/// context[j*batch + b] = sum_i attn[b*I + i, j] * keys[i*batch + b]
template <typename T>
Var AttentionContext(Graph<T> &g, Var attn, Var keys, int batch);

/// Mean |pred - target| over the valid rows and all columns.
template <typename T>
Var L1Masked(Graph<T> &g, Var pred, Var target, const Mask &row_mask);

/// sum(mask * weights * x) / count(mask), elementwise mask.
template <typename T>
Var WeightedMean(Graph<T> &g, Var x, const Tensor<T> &weights, const Mask &mask);

/// Mean over valid entries of binary cross-entropy on logits, with the
/// positive class weighted by `pos_weight`.
template <typename T>
Var BceWithLogits(Graph<T> &g, Var logits, const Tensor<T> &targets,
                  double pos_weight, const Mask &mask);

}  // namespace atts2s

#endif  // ATTS2S_OPS_H_
