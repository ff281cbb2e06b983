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

#ifndef MUNMT_PIPELINE_EXPERIMENT_HPP
#define MUNMT_PIPELINE_EXPERIMENT_HPP

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "eval/evaluate.hpp"
#include "pipeline/checkpoint.hpp"
#include "pipeline/config.hpp"
#include "pipeline/data.hpp"
#include "pipeline/synthetic.hpp"
#include "pipeline/trainer.hpp"

namespace munmt::pipeline {

// Output layout under the run directory:
//   config.resolved.json  digests.json  run.json (timestamps only)
//   data/                 toy benchmark (when no manifest is configured)
//   vocab.txt
//   stage1/ stage2a/ stage2b/ stage3/   checkpoint.bin audit.tsv report.{tsv,json}
//   synth/round1/ synth/round2/         synthetic corpora + provenance
//   report.{tsv,json}     final report
//   ablate/<arm>/         ablation runs, same layout
class Experiment {
 public:
  using Logger = std::function<void(const std::string&)>;

  Experiment(ExperimentConfig cfg, std::filesystem::path out, Logger log = {});

  const ExperimentConfig& config() const { return cfg_; }
  const std::filesystem::path& out() const { return out_; }

  void synth_data();
  void train_vocab();
  Checkpoint stage1();
  corpus::Manifest synth_bt(int round);
  Checkpoint stage2(int round);
  Checkpoint stage3();
  // Evaluates a checkpoint on the configured split and writes the report
  // next to it. Without a path, the most advanced stage checkpoint is used.
  eval::Report evaluate(const std::optional<std::filesystem::path>& checkpoint = std::nullopt);
  // synth-data -> vocab -> 1 -> synth 1 -> 2a -> synth 2 -> 2b -> 3 -> report.
  eval::Report run_pipeline();

  // Arms: no-synthetic, single-aux, bt-only. Runs under ablate/<arm>, reusing
  // this run's data, vocabulary and (where the arm allows) stage-1 model.
  eval::Report ablate(const std::string& arm);

  // Loaded lazily and cached.
  const corpus::Manifest& manifest();
  const tok::Vocab& vocab();
  const corpus::LanguageRegistry& registry();
  const Corpora& real_corpora();
  model::ModelConfig model_config();

  std::filesystem::path stage_dir(StageTag tag) const;

 private:
  void write_snapshot();
  Checkpoint fresh_checkpoint();
  Checkpoint load_stage(StageTag tag);
  void save_stage(const Checkpoint& ckpt, StageTag tag);
  eval::Report report_stage(const Checkpoint& ckpt, const std::filesystem::path& dir);
  Corpora synthetic_corpora(int round);
  Checkpoint run_alg1_stage(Checkpoint start, StageTag tag, const std::vector<const corpus::Dataset*>& pool,
                            std::uint64_t steps, double lr_peak, std::uint64_t warmup,
                            const std::string& seed_name);
  void log(const std::string& msg) const;

  ExperimentConfig cfg_;
  std::filesystem::path out_;
  Logger log_;
  std::optional<corpus::Manifest> manifest_;
  std::optional<tok::Vocab> vocab_;
  std::optional<corpus::LanguageRegistry> registry_;
  std::unique_ptr<Corpora> real_;
};

}  // namespace munmt::pipeline

#endif  // MUNMT_PIPELINE_EXPERIMENT_HPP
