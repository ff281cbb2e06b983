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

#ifndef MUNMT_TENSOR_GRAPH_HPP
#define MUNMT_TENSOR_GRAPH_HPP

#include <functional>
#include <initializer_list>
#include <vector>

#include "tensor/params.hpp"
#include "tensor/tensor.hpp"

namespace munmt::tensor {

// Handle to a node of a Graph.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Nodes are appended in evaluation order and may only
// reference earlier nodes, so insertion order is a topological order.
//
// A graph built with record=false evaluates values only: no backward
// closures are kept and nothing requires a gradient.
template <typename Scalar>
class Graph {
 public:
  using T = Tensor<Scalar>;
  // Receives the gradient of the node's output and pushes contributions into
  // its inputs with accumulate().
  using Backward = std::function<void(Graph&, const T& grad_out)>;

  explicit Graph(bool record = true) : record_(record) {}

  bool recording() const { return record_; }

  Var constant(T value);
  Var parameter(ParamId id, T value);
  Var emit(T value, std::initializer_list<Var> inputs, Backward backward);

  const T& value(Var v) const { return node(v).value; }
  bool requires_grad(Var v) const { return node(v).requires_grad; }

  // Adds delta into v's gradient buffer. Ignored if v needs no gradient.
  void accumulate(Var v, const T& delta);
  // Mutable gradient buffer of v (zero-initialised on first use), or nullptr
  // if v needs no gradient.
  T* grad_buffer(Var v);

  // Exact reverse-mode gradients of a scalar loss with respect to every
  // parameter leaf. The result has num_params entries; parameters that are not
  // in the graph, or not on a path to loss, get zero tensors of their shape
  // taken from shapes.
  Gradients<Scalar> backward(Var loss, const ParamStore<Scalar>& shapes);

  std::size_t size() const { return nodes_.size(); }
  // Parameter ids that appear as leaves, in first-use order.
  std::vector<ParamId> parameter_leaves() const;

 private:
  struct Node {
    T value;
    T grad;
    Backward backward;
    std::vector<int> inputs;
    long param = -1;
    bool requires_grad = false;
  };

  const Node& node(Var v) const;
  Node& node(Var v);

  bool record_;
  std::vector<Node> nodes_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace munmt::tensor

#endif  // MUNMT_TENSOR_GRAPH_HPP
