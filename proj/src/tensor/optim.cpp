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

#include "tensor/optim.hpp"

#include <cmath>

namespace munmt::tensor {

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "adamax") return OptimizerKind::Adamax;
  fail(ErrorKind::Config, "unknown optimizer '" + name + "' (expected adam|adamax)");
}

const char* optimizer_kind_name(OptimizerKind kind) {
  return kind == OptimizerKind::Adam ? "adam" : "adamax";
}

template <typename Scalar>
OptimState<Scalar> make_optim_state(OptimizerKind kind,
                                    const ParamStore<Scalar>& params) {
  OptimState<Scalar> state;
  state.kind = kind;
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.first.emplace_back(params.value(i).shape());
    state.second.emplace_back(params.value(i).shape());
  }
  return state;
}

template <typename Scalar>
void optimizer_step(ParamStore<Scalar>& params, const Gradients<Scalar>& grads,
                    OptimState<Scalar>& state, double lr, double weight_decay,
                    const AdamConstants& c) {
  if (lr < 0.0) fail(ErrorKind::Internal, "negative learning rate");
  if (grads.size() > params.size()) {
    fail(ErrorKind::Internal, "gradient map has more entries than parameters");
  }
  if (state.first.size() != params.size() || state.second.size() != params.size()) {
    fail(ErrorKind::Internal, "optimizer state does not match parameters");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].empty() && grads[i].shape() != params.value(i).shape()) {
      fail(ErrorKind::Internal, "gradient shape mismatch for " + params.name(i) +
                                    ": " + shape_str(grads[i].shape()) + " vs " +
                                    shape_str(params.value(i).shape()));
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  const auto b1 = static_cast<Scalar>(c.beta1);
  const auto b2 = static_cast<Scalar>(c.beta2);
  const auto eps = static_cast<Scalar>(c.eps);
  const auto decay = static_cast<Scalar>(lr * weight_decay);
  const auto step_size = static_cast<Scalar>(lr / bc1);
  const auto inv_sqrt_bc2 = static_cast<Scalar>(1.0 / std::sqrt(bc2));

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<Scalar>& p = params.value(i);
    Tensor<Scalar>& m = state.first[i];
    Tensor<Scalar>& v = state.second[i];
    const bool has_grad = i < grads.size() && !grads[i].empty();
    for (std::size_t k = 0; k < p.size(); ++k) {
      const Scalar g = has_grad ? grads[i][k] : Scalar(0);
      m[k] = b1 * m[k] + (Scalar(1) - b1) * g;
      Scalar denom;
      if (state.kind == OptimizerKind::Adam) {
        v[k] = b2 * v[k] + (Scalar(1) - b2) * g * g;
        denom = std::sqrt(v[k]) * inv_sqrt_bc2 + eps;
      } else {
        v[k] = std::max(b2 * v[k], std::abs(g));
        denom = v[k] + eps;
      }
      p[k] = p[k] - decay * p[k] - step_size * m[k] / denom;
    }
  }
}

template OptimState<float> make_optim_state(OptimizerKind, const ParamStore<float>&);
template OptimState<double> make_optim_state(OptimizerKind, const ParamStore<double>&);
template void optimizer_step(ParamStore<float>&, const Gradients<float>&,
                             OptimState<float>&, double, double, const AdamConstants&);
template void optimizer_step(ParamStore<double>&, const Gradients<double>&,
                             OptimState<double>&, double, double, const AdamConstants&);

void LrSchedule::validate() const {
  if (!(peak >= 0.0)) fail(ErrorKind::Config, "lr peak must be >= 0");
  if (warmup_steps == 0 || warmup_steps >= total_steps) {
    fail(ErrorKind::Config, "lr schedule needs 0 < warmup_steps < total_steps");
  }
}

double lr_at(const LrSchedule& s, std::uint64_t step) {
  if (step <= s.warmup_steps) {
    return s.peak * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
  }
  if (step >= s.total_steps) return 0.0;
  return s.peak * static_cast<double>(s.total_steps - step) /
         static_cast<double>(s.total_steps - s.warmup_steps);
}

}  // namespace munmt::tensor
