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

#ifndef MUNMT_PIPELINE_CONFIG_HPP
#define MUNMT_PIPELINE_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "corpus/corpus.hpp"
#include "eval/bleu.hpp"
#include "model/model.hpp"
#include "synthlang/synthlang.hpp"
#include "tensor/optim.hpp"

namespace munmt::pipeline {

struct LanguageEntry {
  std::string name;
  bool english = false;
  bool target = false;
};

struct VocabSettings {
  std::size_t size = 1200;
  std::size_t max_lines_per_corpus = 0;
  std::size_t max_pieces = 88;
};

struct ModelSettings {
  std::size_t layers = 2;
  std::size_t hidden = 64;
  std::size_t ffn = 256;
  std::size_t heads = 4;
  std::size_t max_positions = 128;
};

struct Stage1Settings {
  std::uint64_t steps = 5000;
  std::size_t batch_size = 32;
  tensor::OptimizerKind optimizer = tensor::OptimizerKind::Adam;
  double lr_peak = 0.003;
  std::uint64_t warmup_steps = 200;
  double weight_decay = 0.2;
  std::uint64_t checkpoint_interval = 0;  // 0: only at the end
};

// Batch size, optimizer and weight decay carry over from stage 1.
struct Stage2Settings {
  std::uint64_t steps = 5000;
  std::uint64_t round2_steps = 1000;
  double lr_peak = 0.003;
  std::uint64_t warmup_steps = 200;
  bool use_synthetic = true;
  bool round2_keeps_round1 = false;
};

struct Stage3Settings {
  std::uint64_t sweeps = 20;
  std::size_t max_tokens = 2000;
  std::size_t bucket_width = 8;
  tensor::OptimizerKind optimizer = tensor::OptimizerKind::Adamax;
  double lr_divisor = 4.0;  // peak = stage-2 peak / lr_divisor
  std::uint64_t warmup_steps = 10;
  double weight_decay = 0.2;
  bool use_synthetic = true;
  bool keep_best = true;
  // Dev BLEU is measured every eval_every sweeps; stop after `patience`
  // evaluations without improvement (0 disables). With keep_best the
  // highest-scoring state, including the starting one, is returned.
  std::uint64_t patience = 0;
  std::uint64_t eval_every = 1;
};

struct SynthSettings {
  double round1_mono_fraction = 0.10;
  std::size_t round2_multiplier = 2;
  std::size_t english_lines_per_target = 1000;
  std::size_t decode_batch = 64;
};

struct EvalSettings {
  std::vector<std::string> directions;  // empty: every target <-> English
  eval::BleuMode mode = eval::BleuMode::Pretokenized;
  std::string split = "test";
  std::string dev_split = "dev";
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::vector<LanguageEntry> languages{{"En", true, false}, {"A1"}, {"A2"}, {"X1", false, true}};
  std::map<std::string, std::vector<std::string>> pivots{{"X1", {"A1"}}};
  // Empty: <out>/data/manifest.json as written by synth-data. Relative paths
  // resolve against the config file's directory.
  std::string manifest;
  std::vector<std::string> exclude_datasets;
  synth::BenchmarkConfig benchmark;
  VocabSettings vocab;
  ModelSettings model;
  corpus::SamplingPolicy sampling;
  Stage1Settings stage1;
  Stage2Settings stage2;
  Stage3Settings stage3;
  SynthSettings synth;
  EvalSettings eval;

  std::filesystem::path base_dir;  // not serialized

  // Parses JSON, applies dotted K=V overrides, validates. Every problem is
  // reported in one Config error.
  static ExperimentConfig parse(const std::string& text,
                                const std::vector<std::string>& overrides = {},
                                const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path,
                               const std::vector<std::string>& overrides = {});

  std::string to_json() const;
  std::string digest() const;
  void validate() const;
  std::vector<std::string> problems() const;

  corpus::LanguageRegistry registry() const;
  model::ModelConfig model_config(std::size_t vocab_size) const;
  std::vector<std::string> eval_directions() const;
  std::filesystem::path manifest_path(const std::filesystem::path& out) const;
};

}  // namespace munmt::pipeline

#endif  // MUNMT_PIPELINE_CONFIG_HPP
