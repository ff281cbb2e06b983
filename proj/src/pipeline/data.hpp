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

#ifndef MUNMT_PIPELINE_DATA_HPP
#define MUNMT_PIPELINE_DATA_HPP

#include <memory>
#include <string>
#include <vector>

#include "corpus/corpus.hpp"
#include "eval/evaluate.hpp"
#include "pipeline/config.hpp"
#include "tokenizer/vocab.hpp"

namespace munmt::pipeline {

// A tokenized dataset plus the normalized text of every kept item.
struct LoadedDataset {
  corpus::Dataset data;
  std::vector<std::string> text;                            // mono
  std::vector<std::pair<std::string, std::string>> pair_text;  // parallel
};

struct Corpora {
  // Stable addresses: pools hold pointers into these.
  std::vector<std::unique_ptr<LoadedDataset>> sets;

  const LoadedDataset* find(const std::string& id) const;
  const LoadedDataset& get(const std::string& id) const;
  std::vector<const corpus::Dataset*> pool(bool include_synthetic = true) const;
  void append(Corpora other);
};

// Trains the shared vocabulary on every real corpus side in the manifest.
tok::Vocab train_vocab(const ExperimentConfig& cfg, const corpus::Manifest& manifest);

// Loads, tokenizes and length-filters the manifest's datasets. Ids listed in
// cfg.exclude_datasets are skipped; unknown languages are Data errors.
Corpora load_corpora(const ExperimentConfig& cfg, const corpus::Manifest& manifest,
                     const corpus::LanguageRegistry& registry, const tok::Vocab& vocab);

// Every pivot needs real parallel data with English; targets must have none.
// Reports all violations at once.
void check_topology(const ExperimentConfig& cfg, const corpus::LanguageRegistry& registry,
                    const Corpora& corpora);

std::vector<eval::Testset> load_testsets(const corpus::Manifest& manifest,
                                         const corpus::LanguageRegistry& registry,
                                         const std::string& split,
                                         const std::vector<std::string>& directions);

}  // namespace munmt::pipeline

#endif  // MUNMT_PIPELINE_DATA_HPP
