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

#include "tokenizer/vocab.hpp"

#include <charconv>
#include <sstream>

#include "common/digest.hpp"
#include "common/error.hpp"

namespace munmt::tok {

namespace {

constexpr std::string_view kHeaderPrefix = "#munmt-vocab v1 size=";
constexpr std::string_view kMergesHeader = "#merges";

std::string merge_key(std::string_view left, std::string_view right) {
  std::string key;
  key.reserve(left.size() + right.size() + 1);
  key.append(left);
  key.push_back('\x1f');
  key.append(right);
  return key;
}

bool valid_piece_text(std::string_view p) {
  if (p.empty()) return false;
  for (char c : p) {
    if (c == '\t' || c == '\n' || c == '\r' || c == ' ') return false;
  }
  return true;
}

}  // namespace

const std::vector<std::string>& special_pieces() {
  static const std::vector<std::string> kSpecials{"<pad>", "<s>", "</s>", "<unk>",
                                                  "<mask>"};
  return kSpecials;
}

Vocab::Vocab(std::vector<std::string> pieces, std::vector<Merge> merges)
    : pieces_(std::move(pieces)), merges_(std::move(merges)) {
  const auto& specials = special_pieces();
  if (pieces_.size() < specials.size() ||
      !std::equal(specials.begin(), specials.end(), pieces_.begin())) {
    fail(ErrorKind::Data, "vocabulary must start with the reserved special pieces");
  }
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (!valid_piece_text(pieces_[i])) {
      fail(ErrorKind::Data, "invalid vocabulary piece at id " + std::to_string(i));
    }
    if (!index_.emplace(pieces_[i], static_cast<int>(i)).second) {
      fail(ErrorKind::Data, "duplicate vocabulary piece '" + pieces_[i] + "'");
    }
  }
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    const auto& m = merges_[r];
    if (!index_.contains(m.left + m.right)) {
      fail(ErrorKind::Data, "merge '" + m.left + " " + m.right + "' has no piece");
    }
    merge_index_.emplace(merge_key(m.left, m.right), static_cast<int>(r));
  }
}

const std::string& Vocab::piece(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size()) {
    fail(ErrorKind::Data, "piece id " + std::to_string(id) + " out of range");
  }
  return pieces_[static_cast<std::size_t>(id)];
}

std::optional<int> Vocab::find(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocab::merge_rank(std::string_view left, std::string_view right) const {
  auto it = merge_index_.find(merge_key(left, right));
  return it == merge_index_.end() ? -1 : it->second;
}

std::string Vocab::serialize() const {
  std::string out;
  out += kHeaderPrefix;
  out += std::to_string(pieces_.size());
  out += '\n';
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    out += pieces_[i];
    out += '\t';
    out += std::to_string(i);
    out += '\n';
  }
  out += kMergesHeader;
  out += '\n';
  for (const auto& m : merges_) {
    out += m.left;
    out += ' ';
    out += m.right;
    out += '\n';
  }
  return out;
}

Vocab Vocab::parse(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  if (lines.empty() || !lines[0].starts_with(kHeaderPrefix)) {
    fail(ErrorKind::Data, "vocab: missing '#munmt-vocab v1' header");
  }
  std::size_t size = 0;
  auto num = lines[0].substr(kHeaderPrefix.size());
  auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), size);
  if (ec != std::errc() || ptr != num.data() + num.size()) {
    fail(ErrorKind::Data, "vocab: malformed size in header");
  }
  if (lines.size() < size + 2) fail(ErrorKind::Data, "vocab: truncated piece list");
  std::vector<std::string> pieces;
  pieces.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    const auto line = lines[i + 1];
    const auto tab = line.rfind('\t');
    if (tab == std::string_view::npos) {
      fail(ErrorKind::Data, "vocab: piece line " + std::to_string(i) + " lacks an id");
    }
    const auto id_text = line.substr(tab + 1);
    std::size_t id = 0;
    auto [p2, ec2] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (ec2 != std::errc() || p2 != id_text.data() + id_text.size() || id != i) {
      fail(ErrorKind::Data, "vocab: ids must be dense and ordered (line " +
                                std::to_string(i + 2) + ")");
    }
    pieces.emplace_back(line.substr(0, tab));
  }
  if (lines[size + 1] != kMergesHeader) {
    fail(ErrorKind::Data, "vocab: missing '#merges' section");
  }
  std::vector<Merge> merges;
  for (std::size_t i = size + 2; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string_view::npos || line.find(' ', sp + 1) != std::string_view::npos) {
      fail(ErrorKind::Data, "vocab: malformed merge line " + std::to_string(i + 1));
    }
    merges.push_back({std::string(line.substr(0, sp)), std::string(line.substr(sp + 1))});
  }
  return Vocab(std::move(pieces), std::move(merges));
}

void Vocab::save(const std::filesystem::path& path) const {
  write_file_atomic(path, serialize());
}

Vocab Vocab::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::string Vocab::digest() const { return sha256_hex(serialize()); }

}  // namespace munmt::tok
