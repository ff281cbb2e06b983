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

#ifndef MUNMT_TENSOR_OPTIM_HPP
#define MUNMT_TENSOR_OPTIM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tensor/params.hpp"

namespace munmt::tensor {

enum class OptimizerKind { Adam, Adamax };

OptimizerKind parse_optimizer_kind(const std::string& name);
const char* optimizer_kind_name(OptimizerKind kind);

struct AdamConstants {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment accumulators, one per parameter. For Adamax the second
// slot holds the infinity-norm accumulator.
template <typename Scalar>
struct OptimState {
  OptimizerKind kind = OptimizerKind::Adam;
  std::uint64_t step = 0;
  std::vector<Tensor<Scalar>> first;
  std::vector<Tensor<Scalar>> second;

  bool operator==(const OptimState&) const = default;
};

template <typename Scalar>
OptimState<Scalar> make_optim_state(OptimizerKind kind,
                                    const ParamStore<Scalar>& params);

// One update with decoupled weight decay:
//   p <- p - lr * weight_decay * p - lr * adaptive_step
// grads must be aligned with params; an empty tensor counts as zero.
template <typename Scalar>
void optimizer_step(ParamStore<Scalar>& params, const Gradients<Scalar>& grads,
                    OptimState<Scalar>& state, double lr, double weight_decay,
                    const AdamConstants& constants = {});

extern template OptimState<float> make_optim_state(OptimizerKind,
                                                   const ParamStore<float>&);
extern template OptimState<double> make_optim_state(OptimizerKind,
                                                    const ParamStore<double>&);
extern template void optimizer_step(ParamStore<float>&, const Gradients<float>&,
                                    OptimState<float>&, double, double,
                                    const AdamConstants&);
extern template void optimizer_step(ParamStore<double>&, const Gradients<double>&,
                                    OptimState<double>&, double, double,
                                    const AdamConstants&);

// Linear warmup from 0 to peak, then linear decay to 0 at total_steps.
struct LrSchedule {
  double peak = 0.0002;
  std::uint64_t warmup_steps = 4000;
  std::uint64_t total_steps = 1200000;

  void validate() const;
};

double lr_at(const LrSchedule& schedule, std::uint64_t step);

}  // namespace munmt::tensor

#endif  // MUNMT_TENSOR_OPTIM_HPP
