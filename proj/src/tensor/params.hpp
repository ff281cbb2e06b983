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

#ifndef MUNMT_TENSOR_PARAMS_HPP
#define MUNMT_TENSOR_PARAMS_HPP

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tensor/tensor.hpp"

namespace munmt::tensor {

using ParamId = std::size_t;

// Named trainable tensors in insertion order. The id of a parameter is its
// insertion index.
template <typename Scalar>
class ParamStore {
 public:
  ParamId add(std::string name, Tensor<Scalar> value) {
    if (index_.contains(name)) {
      fail(ErrorKind::Internal, "duplicate parameter " + name);
    }
    const ParamId id = values_.size();
    index_.emplace(name, id);
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
    return id;
  }

  std::size_t size() const { return values_.size(); }
  const std::string& name(ParamId id) const { return names_.at(id); }
  const std::vector<std::string>& names() const { return names_; }
  Tensor<Scalar>& value(ParamId id) { return values_.at(id); }
  const Tensor<Scalar>& value(ParamId id) const { return values_.at(id); }

  std::optional<ParamId> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  ParamId id(std::string_view name) const {
    auto found = find(name);
    if (!found) fail(ErrorKind::Internal, "unknown parameter " + std::string(name));
    return *found;
  }

  Tensor<Scalar>& operator[](std::string_view name) { return values_[id(name)]; }
  const Tensor<Scalar>& operator[](std::string_view name) const {
    return values_[id(name)];
  }

  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += v.size();
    return n;
  }

  template <typename Other>
  ParamStore<Other> cast() const {
    ParamStore<Other> out;
    for (std::size_t i = 0; i < size(); ++i) {
      out.add(names_[i], values_[i].template cast<Other>());
    }
    return out;
  }

  bool operator==(const ParamStore& other) const {
    return names_ == other.names_ && values_ == other.values_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor<Scalar>> values_;
  std::unordered_map<std::string, ParamId> index_;
};

// Aligned with a ParamStore: entry i is the gradient of parameter i.
template <typename Scalar>
using Gradients = std::vector<Tensor<Scalar>>;

}  // namespace munmt::tensor

#endif  // MUNMT_TENSOR_PARAMS_HPP
