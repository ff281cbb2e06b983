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

#ifndef MUNMT_TOKENIZER_BPE_HPP
#define MUNMT_TOKENIZER_BPE_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "common/error.hpp"
#include "tokenizer/vocab.hpp"

namespace munmt::tok {

// NFC, control characters dropped, whitespace runs collapsed to one space,
// leading/trailing whitespace trimmed.
std::string normalize(std::string_view text);

// Splits UTF-8 text into code points. Invalid bytes become U+FFFD.
std::vector<std::string> utf8_chars(std::string_view text);

struct BpeOptions {
  std::size_t vocab_size = 8000;
  // 0 keeps every line; otherwise each corpus is subsampled to this many
  // lines with the seed before counting.
  std::size_t max_lines_per_corpus = 0;
  std::uint64_t seed = 0;
};

// Greedy BPE over the concatenation of corpora. Each round merges the most
// frequent adjacent symbol pair; ties go to the lexicographically smallest
// (left, right). Throws Data if vocab_size cannot be reached.
Vocab train_bpe(const std::vector<std::vector<std::string>>& corpora,
                const BpeOptions& options);

// Encodes normalized text. Characters outside the alphabet become <unk>.
// Empty (after normalization) input is an error.
TokenSeq encode(const Vocab& vocab, std::string_view text, int lang = -1);

// Inverse of encode for ids produced by it. PAD/BOS/EOS are skipped.
std::string decode(const Vocab& vocab, const TokenSeq& seq);

// Keeps items whose every side has at most max_pieces pieces; order kept.
std::vector<TokenSeq> filter_by_length(std::vector<TokenSeq> seqs,
                                       std::size_t max_pieces = 88);
std::vector<std::pair<TokenSeq, TokenSeq>> filter_by_length(
    std::vector<std::pair<TokenSeq, TokenSeq>> pairs, std::size_t max_pieces = 88);

}  // namespace munmt::tok

#endif  // MUNMT_TOKENIZER_BPE_HPP
