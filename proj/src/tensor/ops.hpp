/*
 * Copyright 2026 The munmt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MUNMT_TENSOR_OPS_HPP
#define MUNMT_TENSOR_OPS_HPP

#include <span>
#include <vector>

#include "tensor/graph.hpp"

// Differentiable primitives. All 2-D operations treat a tensor as
// (rows, cols) with cols = last dimension.
namespace munmt::tensor {

template <typename S> Var add(Graph<S>& g, Var a, Var b);
template <typename S> Var sub(Graph<S>& g, Var a, Var b);
template <typename S> Var mul(Graph<S>& g, Var a, Var b);
template <typename S> Var scale(Graph<S>& g, Var a, S factor);

// x[N,C] + bias[C] broadcast over rows.
template <typename S> Var add_bias(Graph<S>& g, Var x, Var bias);

// a[M,K] @ b[K,N]
template <typename S> Var matmul(Graph<S>& g, Var a, Var b);
// a[M,K] @ b[N,K]^T
template <typename S> Var matmul_nt(Graph<S>& g, Var a, Var b);

template <typename S> Var relu(Graph<S>& g, Var x);

// Row-wise layer normalisation with gain[C] and bias[C].
template <typename S>
Var layer_norm(Graph<S>& g, Var x, Var gain, Var bias, S eps = S(1e-5));

// Row-wise softmax.
template <typename S> Var softmax(Graph<S>& g, Var x);

template <typename S> Var sum(Graph<S>& g, Var x);

// Rows of table[V,C] selected by ids; result [ids.size(), C].
template <typename S>
Var embedding(Graph<S>& g, Var table, std::span<const int> ids);

// Multi-head scaled dot-product attention over a padded batch.
// q is [batch*q_len, d]; k and v are [batch*k_len, d]. Keys at positions
// >= key_lengths[b] are masked, and with causal=true query i sees keys <= i.
struct AttentionShape {
  std::size_t batch = 0;
  std::size_t q_len = 0;
  std::size_t k_len = 0;
  std::size_t heads = 1;
  bool causal = false;
  std::vector<std::size_t> key_lengths;
};

template <typename S>
Var attention(Graph<S>& g, Var q, Var k, Var v, const AttentionShape& shape);

// Mean negative log-likelihood of targets under row-wise softmax(logits).
// Rows whose target is negative are ignored.
template <typename S>
Var cross_entropy(Graph<S>& g, Var logits, std::span<const int> targets);

}  // namespace munmt::tensor

#endif  // MUNMT_TENSOR_OPS_HPP
