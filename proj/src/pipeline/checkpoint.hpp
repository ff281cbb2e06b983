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

#ifndef MUNMT_PIPELINE_CHECKPOINT_HPP
#define MUNMT_PIPELINE_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <string>

#include "tensor/optim.hpp"
#include "tensor/params.hpp"

namespace munmt::pipeline {

enum class StageTag : std::uint8_t { Init = 0, Stage1 = 1, Stage2a = 2, Stage2b = 3, Stage3 = 4 };

const char* stage_tag_name(StageTag tag);

struct Checkpoint {
  tensor::ParamStore<float> params;
  tensor::OptimState<float> optim;
  StageTag stage = StageTag::Init;
  std::uint64_t global_step = 0;
  std::uint64_t stage_step = 0;
  std::string vocab_digest;
  std::string config_digest;  // of the model architecture

  bool operator==(const Checkpoint& o) const {
    return params == o.params && optim == o.optim && stage == o.stage &&
           global_step == o.global_step && stage_step == o.stage_step &&
           vocab_digest == o.vocab_digest && config_digest == o.config_digest;
  }
};

// Layout: "MUNM", u16 version, u8 stage, u8 optimizer kind, u64 global
// step, u64 stage step, u64 optimizer step, two length-prefixed digests,
// u32 tensor count, then per tensor: u32 name length, name, u32 rank, u64
// dims, f32 payload. Optimizer moments are stored as "opt.m.<name>" and
// "opt.v.<name>". All integers and floats little-endian.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws Data when the checkpoint was written for another vocabulary or
// architecture.
void check_compatible(const Checkpoint& ckpt, const std::string& vocab_digest,
                      const std::string& config_digest);

}  // namespace munmt::pipeline

#endif  // MUNMT_PIPELINE_CHECKPOINT_HPP
