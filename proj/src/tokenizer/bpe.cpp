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

#include "tokenizer/bpe.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <unordered_map>

#include "common/rng.hpp"

namespace munmt::tok {

std::string normalize(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) fail(ErrorKind::Internal, "ICU NFC normalizer unavailable");
  const icu::UnicodeString src = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString norm = nfc->normalize(src, status);
  if (U_FAILURE(status)) fail(ErrorKind::Data, "NFC normalization failed");

  icu::UnicodeString cleaned;
  bool pending_space = false;
  for (int32_t i = 0; i < norm.length();) {
    const UChar32 c = norm.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c)) {
      pending_space = true;
      continue;
    }
    if (u_iscntrl(c)) continue;
    if (pending_space && !cleaned.isEmpty()) cleaned.append(UChar32{' '});
    pending_space = false;
    cleaned.append(c);
  }
  std::string out;
  cleaned.toUTF8String(out);
  return out;
}

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (c >= 0xF0) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    bool ok = i + len <= text.size() && (len == 1 ? c < 0x80 : true);
    for (std::size_t k = 1; ok && k < len; ++k) {
      ok = (static_cast<unsigned char>(text[i + k]) & 0xC0) == 0x80;
    }
    if (!ok) {
      out.emplace_back("\xEF\xBF\xBD");
      i += 1;
      continue;
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

namespace {

std::vector<std::string_view> split_words(std::string_view normalized) {
  std::vector<std::string_view> words;
  std::size_t pos = 0;
  while (pos < normalized.size()) {
    std::size_t end = normalized.find(' ', pos);
    if (end == std::string_view::npos) end = normalized.size();
    if (end > pos) words.push_back(normalized.substr(pos, end - pos));
    pos = end + 1;
  }
  return words;
}

std::vector<std::string> word_symbols(std::string_view word) {
  std::vector<std::string> syms{std::string(kMarker)};
  for (auto& ch : utf8_chars(word)) syms.push_back(std::move(ch));
  return syms;
}

}  // namespace

Vocab train_bpe(const std::vector<std::vector<std::string>>& corpora,
                const BpeOptions& options) {
  if (corpora.empty()) fail(ErrorKind::Data, "train_bpe: no corpora");

  // Word type -> frequency over all (possibly subsampled) corpora.
  std::map<std::string, std::int64_t> word_freq;
  Rng rng(derive_seed(options.seed, "bpe-lines"));
  for (const auto& corpus : corpora) {
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (options.max_lines_per_corpus > 0 && corpus.size() > options.max_lines_per_corpus) {
      rng.shuffle(order.begin(), order.end());
      order.resize(options.max_lines_per_corpus);
      std::sort(order.begin(), order.end());
    }
    for (std::size_t i : order) {
      const std::string norm = normalize(corpus[i]);
      for (auto w : split_words(norm)) word_freq[std::string(w)] += 1;
    }
  }
  if (word_freq.empty()) fail(ErrorKind::Data, "train_bpe: corpora contain no words");

  // Intern symbols.
  std::vector<std::string> symbols;
  std::unordered_map<std::string, int> symbol_id;
  auto intern = [&](const std::string& s) {
    auto [it, inserted] = symbol_id.emplace(s, static_cast<int>(symbols.size()));
    if (inserted) symbols.push_back(s);
    return it->second;
  };
  std::vector<std::vector<int>> words;
  std::vector<std::int64_t> freqs;
  std::set<std::string> alphabet;
  for (const auto& [w, f] : word_freq) {
    std::vector<int> ids;
    for (const auto& s : word_symbols(w)) {
      alphabet.insert(s);
      ids.push_back(intern(s));
    }
    words.push_back(std::move(ids));
    freqs.push_back(f);
  }

  std::vector<std::string> pieces = special_pieces();
  std::set<std::string> piece_set(pieces.begin(), pieces.end());
  for (const auto& a : alphabet) {
    if (piece_set.insert(a).second) pieces.push_back(a);
  }
  if (options.vocab_size < pieces.size()) {
    fail(ErrorKind::Data, "train_bpe: vocab_size " + std::to_string(options.vocab_size) +
                              " is smaller than specials + alphabet (" +
                              std::to_string(pieces.size()) + ")");
  }

  // Pair counts are maintained incrementally; the heap holds (count, pair)
  // snapshots and stale entries are skipped on pop.
  auto pair_key = [](int l, int r) {
    return (static_cast<std::uint64_t>(l) << 32) | static_cast<std::uint32_t>(r);
  };
  std::unordered_map<std::uint64_t, std::int64_t> counts;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> where;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto& ids = words[w];
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
      const auto key = pair_key(ids[i], ids[i + 1]);
      counts[key] += freqs[w];
      auto& list = where[key];
      if (list.empty() || list.back() != w) list.push_back(w);
    }
  }
  using Entry = std::pair<std::int64_t, std::uint64_t>;
  auto worse = [&symbols](const Entry& a, const Entry& b) {
    if (a.first != b.first) return a.first < b.first;
    const auto& al = symbols[a.second >> 32];
    const auto& ar = symbols[a.second & 0xFFFFFFFFu];
    const auto& bl = symbols[b.second >> 32];
    const auto& br = symbols[b.second & 0xFFFFFFFFu];
    return std::tie(bl, br) < std::tie(al, ar);
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);
  for (const auto& [key, count] : counts) heap.emplace(count, key);

  const std::set<std::string> reserved(special_pieces().begin(), special_pieces().end());
  std::vector<Merge> merges;
  while (pieces.size() < options.vocab_size) {
    std::uint64_t best = 0;
    bool found = false;
    while (!heap.empty()) {
      const auto [count, key] = heap.top();
      heap.pop();
      const auto it = counts.find(key);
      if (it == counts.end() || it->second != count || count <= 0) continue;
      if (reserved.contains(symbols[key >> 32] + symbols[key & 0xFFFFFFFFu])) continue;
      best = key;
      found = true;
      break;
    }
    if (!found) {
      fail(ErrorKind::Data, "train_bpe: vocab_size " + std::to_string(options.vocab_size) +
                                " unattainable; corpus supports only " +
                                std::to_string(pieces.size()) + " pieces");
    }
    const int left = static_cast<int>(best >> 32);
    const int right = static_cast<int>(best & 0xFFFFFFFFu);
    const std::string joined = symbols[left] + symbols[right];
    merges.push_back({symbols[left], symbols[right]});
    const int merged = intern(joined);
    if (piece_set.insert(joined).second) pieces.push_back(joined);

    std::unordered_map<std::uint64_t, std::int64_t> delta;
    const auto affected = std::move(where[best]);
    where.erase(best);
    for (std::size_t w : affected) {
      auto& ids = words[w];
      for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
        delta[pair_key(ids[i], ids[i + 1])] -= freqs[w];
      }
      std::vector<int> next;
      next.reserve(ids.size());
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i + 1 < ids.size() && ids[i] == left && ids[i + 1] == right) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(ids[i]);
        }
      }
      ids.swap(next);
      for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
        const auto key = pair_key(ids[i], ids[i + 1]);
        delta[key] += freqs[w];
        if (ids[i] == merged || ids[i + 1] == merged) {
          auto& list = where[key];
          if (list.empty() || list.back() != w) list.push_back(w);
        }
      }
    }
    for (const auto& [key, d] : delta) {
      if (d == 0) continue;
      auto& c = counts[key];
      c += d;
      if (c > 0) heap.emplace(c, key);
      else counts.erase(key);
    }
  }
  return Vocab(std::move(pieces), std::move(merges));
}

TokenSeq encode(const Vocab& vocab, std::string_view text, int lang) {
  const std::string norm = normalize(text);
  if (norm.empty()) fail(ErrorKind::Data, "encode: empty text");
  TokenSeq seq;
  seq.lang = lang;
  for (auto word : split_words(norm)) {
    auto syms = word_symbols(word);
    while (syms.size() > 1) {
      int best_rank = -1;
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        const int r = vocab.merge_rank(syms[i], syms[i + 1]);
        if (r >= 0 && (best_rank < 0 || r < best_rank)) best_rank = r;
      }
      if (best_rank < 0) break;
      const auto& m = vocab.merges()[static_cast<std::size_t>(best_rank)];
      std::vector<std::string> next;
      next.reserve(syms.size());
      for (std::size_t i = 0; i < syms.size(); ++i) {
        if (i + 1 < syms.size() && syms[i] == m.left && syms[i + 1] == m.right) {
          next.push_back(m.left + m.right);
          ++i;
        } else {
          next.push_back(std::move(syms[i]));
        }
      }
      syms.swap(next);
    }
    for (const auto& s : syms) {
      const auto id = vocab.find(s);
      seq.ids.push_back(id && *id >= kNumSpecials ? *id : kUnk);
    }
  }
  return seq;
}

std::string decode(const Vocab& vocab, const TokenSeq& seq) {
  std::string out;
  for (int id : seq.ids) {
    const std::string& p = vocab.piece(id);
    if (id == kPad || id == kBos || id == kEos) continue;
    out += p;
  }
  std::string text;
  text.reserve(out.size());
  std::size_t pos = 0;
  while (pos < out.size()) {
    if (out.compare(pos, kMarker.size(), kMarker) == 0) {
      text.push_back(' ');
      pos += kMarker.size();
    } else {
      text.push_back(out[pos++]);
    }
  }
  const auto first = text.find_first_not_of(' ');
  if (first == std::string::npos) return {};
  return text.substr(first);
}

std::vector<TokenSeq> filter_by_length(std::vector<TokenSeq> seqs,
                                       std::size_t max_pieces) {
  if (max_pieces < 1) fail(ErrorKind::Config, "filter_by_length: max_pieces must be >= 1");
  std::erase_if(seqs, [max_pieces](const TokenSeq& s) { return s.size() > max_pieces; });
  return seqs;
}

std::vector<std::pair<TokenSeq, TokenSeq>> filter_by_length(
    std::vector<std::pair<TokenSeq, TokenSeq>> pairs, std::size_t max_pieces) {
  if (max_pieces < 1) fail(ErrorKind::Config, "filter_by_length: max_pieces must be >= 1");
  std::erase_if(pairs, [max_pieces](const auto& p) {
    return p.first.size() > max_pieces || p.second.size() > max_pieces;
  });
  return pairs;
}

}  // namespace munmt::tok
