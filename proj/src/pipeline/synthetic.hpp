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

#ifndef MUNMT_PIPELINE_SYNTHETIC_HPP
#define MUNMT_PIPELINE_SYNTHETIC_HPP

#include <filesystem>

#include "corpus/corpus.hpp"
#include "model/model.hpp"
#include "pipeline/config.hpp"
#include "pipeline/data.hpp"
#include "tensor/params.hpp"
#include "tokenizer/vocab.hpp"

namespace munmt::pipeline {

struct SyntheticStats {
  std::size_t pairs = 0;
  std::size_t skipped = 0;  // empty decodes
};

// Offline back-translation. Round 1 decodes a fraction of every target's
// monolingual data into English, giving (y~_En, x) pairs for En->X. Round 2
// takes a disjoint subset of round2_multiplier times that size, and also
// decodes disjoint slices of English monolingual data into each target,
// giving (x~_X, y_En) pairs for X->En. Corpora, provenance sidecars and a
// manifest are written into dir; the manifest is returned.
corpus::Manifest generate_synthetic(const tensor::ParamStore<float>& params,
                                    const model::ModelConfig& mcfg, const tok::Vocab& vocab,
                                    const corpus::LanguageRegistry& registry,
                                    const Corpora& real, const ExperimentConfig& cfg, int round,
                                    const std::filesystem::path& dir,
                                    SyntheticStats* stats = nullptr);

// Item indices of a monolingual dataset used by the given round.
std::vector<std::size_t> synthetic_selection(const corpus::Dataset& mono, const ExperimentConfig& cfg,
                                             int round);

}  // namespace munmt::pipeline

#endif  // MUNMT_PIPELINE_SYNTHETIC_HPP
