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

#include "tensor/graph.hpp"

#include <string>

namespace munmt::tensor {

template <typename Scalar>
auto Graph<Scalar>::node(Var v) const -> const Node& {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    fail(ErrorKind::Internal, "invalid graph variable " + std::to_string(v.id));
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

template <typename Scalar>
auto Graph<Scalar>::node(Var v) -> Node& {
  return const_cast<Node&>(std::as_const(*this).node(v));
}

template <typename Scalar>
Var Graph<Scalar>::constant(T value) {
  if (!value.all_finite()) fail(ErrorKind::Numeric, "non-finite constant");
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <typename Scalar>
Var Graph<Scalar>::parameter(ParamId id, T value) {
  if (!value.all_finite()) fail(ErrorKind::Numeric, "non-finite parameter");
  Node n;
  n.value = std::move(value);
  n.param = static_cast<long>(id);
  n.requires_grad = record_;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <typename Scalar>
Var Graph<Scalar>::emit(T value, std::initializer_list<Var> inputs,
                        Backward backward) {
  const int self = static_cast<int>(nodes_.size());
  Node n;
  for (Var in : inputs) {
    // Inputs must precede the node; anything else would create a cycle.
    if (in.id < 0 || in.id >= self) {
      fail(ErrorKind::Internal, "graph construction references node " +
                                    std::to_string(in.id) + " from node " +
                                    std::to_string(self));
    }
    if (record_ && nodes_[static_cast<std::size_t>(in.id)].requires_grad) {
      n.requires_grad = true;
    }
  }
  if (!value.all_finite()) {
    fail(ErrorKind::Numeric, "non-finite value produced at graph node " +
                                 std::to_string(self));
  }
  n.value = std::move(value);
  if (n.requires_grad) {
    n.inputs.reserve(inputs.size());
    for (Var in : inputs) n.inputs.push_back(in.id);
    n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var{self};
}

template <typename Scalar>
Tensor<Scalar>* Graph<Scalar>::grad_buffer(Var v) {
  Node& n = node(v);
  if (!n.requires_grad) return nullptr;
  if (n.grad.size() != n.value.size()) n.grad = T(n.value.shape());
  return &n.grad;
}

template <typename Scalar>
void Graph<Scalar>::accumulate(Var v, const T& delta) {
  T* g = grad_buffer(v);
  if (!g) return;
  if (delta.size() != g->size()) {
    fail(ErrorKind::Internal, "gradient shape mismatch " +
                                  shape_str(delta.shape()) + " vs " +
                                  shape_str(g->shape()));
  }
  Scalar* dst = g->data();
  const Scalar* src = delta.data();
  for (std::size_t i = 0, n = g->size(); i < n; ++i) dst[i] += src[i];
}

template <typename Scalar>
Gradients<Scalar> Graph<Scalar>::backward(Var loss,
                                          const ParamStore<Scalar>& shapes) {
  if (!record_) fail(ErrorKind::Internal, "backward on a non-recording graph");
  Node& root = node(loss);
  if (root.value.size() != 1) {
    fail(ErrorKind::Internal, "backward needs a scalar loss, got shape " +
                                  shape_str(root.value.shape()));
  }
  Gradients<Scalar> grads(shapes.size());
  if (root.requires_grad) {
    root.grad = T(root.value.shape(), Scalar(1));
    for (std::size_t i = static_cast<std::size_t>(loss.id) + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || n.grad.empty()) continue;
      if (n.param >= 0) {
        auto& dst = grads.at(static_cast<std::size_t>(n.param));
        if (dst.empty()) {
          dst = n.grad;
        } else {
          for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += n.grad[k];
        }
      } else if (n.backward) {
        // Copy out: the closure may grow other nodes' buffers but never ours.
        const T grad_out = std::move(n.grad);
        n.backward(*this, grad_out);
      }
    }
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].empty()) grads[i] = T(shapes.value(i).shape());
  }
  return grads;
}

template <typename Scalar>
std::vector<ParamId> Graph<Scalar>::parameter_leaves() const {
  std::vector<ParamId> out;
  for (const auto& n : nodes_) {
    if (n.param >= 0) out.push_back(static_cast<ParamId>(n.param));
  }
  return out;
}

template class Graph<float>;
template class Graph<double>;

}  // namespace munmt::tensor
