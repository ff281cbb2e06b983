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

#ifndef MUNMT_TOKENIZER_VOCAB_HPP
#define MUNMT_TOKENIZER_VOCAB_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace munmt::tok {

inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
inline constexpr int kMask = 4;
inline constexpr int kNumSpecials = 5;

// Word-boundary marker (U+2581) prefixed to every word before encoding.
inline constexpr std::string_view kMarker = "\xE2\x96\x81";

// A sentence as piece ids. Holds the body only: BOS/EOS are added by the
// model. lang indexes the language registry (-1 when unknown).
struct TokenSeq {
  std::vector<int> ids;
  int lang = -1;

  std::size_t size() const { return ids.size(); }
  bool operator==(const TokenSeq&) const = default;
};

struct Merge {
  std::string left;
  std::string right;
  bool operator==(const Merge&) const = default;
};

// Subword inventory: specials at ids [0, 5), then the base alphabet, then one
// piece per learned merge. Immutable once built.
class Vocab {
 public:
  Vocab(std::vector<std::string> pieces, std::vector<Merge> merges);

  std::size_t size() const { return pieces_.size(); }
  const std::string& piece(int id) const;
  std::optional<int> find(std::string_view piece) const;
  const std::vector<std::string>& pieces() const { return pieces_; }
  const std::vector<Merge>& merges() const { return merges_; }

  // Rank of the merge (left, right), or -1 when not a learned merge.
  int merge_rank(std::string_view left, std::string_view right) const;

  std::string serialize() const;
  static Vocab parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  // SHA-256 of serialize().
  std::string digest() const;

  bool operator==(const Vocab& other) const {
    return pieces_ == other.pieces_ && merges_ == other.merges_;
  }

 private:
  std::vector<std::string> pieces_;
  std::vector<Merge> merges_;
  std::unordered_map<std::string, int> index_;
  std::unordered_map<std::string, int> merge_index_;
};

const std::vector<std::string>& special_pieces();

}  // namespace munmt::tok

#endif  // MUNMT_TOKENIZER_VOCAB_HPP
