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

#ifndef MUNMT_PIPELINE_TRAINER_HPP
#define MUNMT_PIPELINE_TRAINER_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "corpus/corpus.hpp"
#include "model/model.hpp"
#include "pipeline/checkpoint.hpp"
#include "pipeline/config.hpp"

namespace munmt::pipeline {

struct AuditEntry {
  std::uint64_t step = 0;
  std::string dataset;
  std::string objective;  // mass | ce_bidir | bt | ct | ce
  std::string src_lang;   // languages of the trained direction
  std::string tgt_lang;
  double loss = 0;        // NaN when every item was skipped
  bool skipped = false;

  std::string line() const;
};

// One line per update: step dataset objective src_lang tgt_lang loss.
class AuditLog {
 public:
  AuditLog() = default;
  // Appends to path (created if missing).
  explicit AuditLog(const std::filesystem::path& path);

  void record(AuditEntry e);
  const std::vector<AuditEntry>& entries() const { return entries_; }

 private:
  std::ofstream out_;
  std::vector<AuditEntry> entries_;
};

std::vector<AuditEntry> read_audit(const std::filesystem::path& path);

struct PretrainOptions {
  std::uint64_t steps = 0;  // updates to run in this stage
  std::size_t batch_size = 32;
  tensor::LrSchedule lr;
  double weight_decay = 0;
  corpus::SamplingPolicy sampling;
  std::uint64_t stage_seed = 0;
  std::uint64_t checkpoint_interval = 0;
  // Called with the state after every checkpoint_interval updates.
  std::function<void(const Checkpoint&)> on_checkpoint;
  // Mean loss over the last progress_every updates.
  std::uint64_t progress_every = 0;
  std::function<void(const Checkpoint&, double)> on_progress;
};

// Runs sampled pre-training from ckpt.stage_step up to opts.steps. Per-step randomness
// is derived from (stage_seed, global step), so a resumed run replays the
// same stream.
void run_pretraining(Checkpoint& ckpt, const model::ModelConfig& mcfg,
                     const corpus::LanguageRegistry& registry,
                     const std::vector<const corpus::Dataset*>& pool, const PretrainOptions& opts,
                     AuditLog& audit);

struct Stage3Options {
  std::uint64_t sweeps = 0;
  std::size_t max_tokens = 2000;
  std::size_t bucket_width = 8;
  double lr_peak = 0;
  std::uint64_t warmup_steps = 1;
  double weight_decay = 0;
  std::uint64_t stage_seed = 0;
  std::map<std::string, std::vector<std::string>> pivots;
  std::uint64_t patience = 0;
  std::uint64_t eval_every = 1;
  bool keep_best = true;
  // Dev score of the current parameters; empty disables evaluation.
  std::function<double(const tensor::ParamStore<float>&)> dev_score;
};

struct Stage3Result {
  std::uint64_t sweeps_run = 0;
  std::uint64_t skipped_items = 0;
  std::vector<double> dev_scores;  // index 0 is the starting point
  std::size_t best_index = 0;
};

// Updates per sweep for the pool.
std::uint64_t stage3_updates_per_sweep(const corpus::LanguageRegistry& registry,
                                       const std::vector<const corpus::Dataset*>& pool,
                                       const std::map<std::string, std::vector<std::string>>& pivots);

// Stage-3 fine-tuning with a fixed sweep budget. The optimizer state in ckpt must
// already be the stage-3 optimizer.
Stage3Result run_stage3_sweeps(Checkpoint& ckpt, const model::ModelConfig& mcfg,
                               const corpus::LanguageRegistry& registry,
                               const std::vector<const corpus::Dataset*>& pool,
                               const Stage3Options& opts, AuditLog& audit);

}  // namespace munmt::pipeline

#endif  // MUNMT_PIPELINE_TRAINER_HPP
