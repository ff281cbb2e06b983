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

#ifndef MUNMT_EVAL_BLEU_HPP
#define MUNMT_EVAL_BLEU_HPP

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace munmt::eval {

// mteval-v13a tokenization as used by sacreBLEU's default "13a" setting.
std::vector<std::string> tokenize_13a(std::string_view text);

// Whitespace split only.
std::vector<std::string> tokenize_whitespace(std::string_view text);

enum class BleuMode { Detok13a, Pretokenized };

// Corpus-level BLEU-4, one reference, case-sensitive.
//
// Smoothing ("exp", the mteval scheme): walking n = 1..4, every order with
// zero matches gets precision 1 / (2^k * total_n), where k counts the zero
// orders seen so far. An order with no candidate n-grams at all contributes
// log 0, so the score is 0. No matches at any order also scores 0, as in
// sacreBLEU 2.x.
struct BleuScore {
  double score = 0;                        // [0, 100]
  std::array<double, 4> precisions{};      // percent, after smoothing
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  double bp = 0;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
};

BleuScore bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
               BleuMode mode = BleuMode::Detok13a);

// Same statistics from already-tokenized sentences.
BleuScore bleu_tokens(const std::vector<std::vector<std::string>>& hyps,
                      const std::vector<std::vector<std::string>>& refs);

}  // namespace munmt::eval

#endif  // MUNMT_EVAL_BLEU_HPP
