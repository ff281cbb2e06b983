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

#ifndef MUNMT_EVAL_EVALUATE_HPP
#define MUNMT_EVAL_EVALUATE_HPP

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "eval/bleu.hpp"
#include "model/model.hpp"
#include "tensor/params.hpp"
#include "tokenizer/vocab.hpp"

namespace munmt::eval {

struct Testset {
  std::string direction;  // "src-tgt"
  int src_lang = -1;
  int tgt_lang = -1;
  std::vector<std::string> sources;
  std::vector<std::string> references;
};

struct DirectionResult {
  std::string direction;
  std::size_t sentences = 0;
  BleuScore bleu;
};

struct Report {
  std::vector<DirectionResult> rows;

  // Header plus one line per direction: direction score p1 p2 p3 p4 bp.
  std::string to_tsv() const;
  std::string to_json() const;
  // Writes <stem>.tsv and <stem>.json.
  void save(const std::filesystem::path& stem) const;
  const DirectionResult* find(const std::string& direction) const;
};

using Translator = std::function<std::vector<std::string>(const Testset&)>;

Report evaluate(const std::vector<Testset>& sets, const Translator& translate, BleuMode mode);

// Greedy translation of raw lines. Sources longer than the model's position
// budget are truncated.
std::vector<std::string> translate_lines(const tensor::ParamStore<float>& params,
                                         const model::ModelConfig& cfg, const tok::Vocab& vocab,
                                         const std::vector<std::string>& lines, int src_lang,
                                         int tgt_lang, std::size_t batch_size = 64);

Report evaluate_model(const tensor::ParamStore<float>& params, const model::ModelConfig& cfg,
                      const tok::Vocab& vocab, const std::vector<Testset>& sets, BleuMode mode);

}  // namespace munmt::eval

#endif  // MUNMT_EVAL_EVALUATE_HPP
