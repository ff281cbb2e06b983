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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <map>

#include "common/rng.hpp"
#include "tokenizer/bpe.hpp"

using namespace munmt;
using namespace munmt::tok;

namespace {

const std::string kM(kMarker);

// Brute-force pair count over whole-corpus symbol sequences; used as the
// reference for the first merge.
std::pair<std::string, std::string> first_merge_oracle(const std::vector<std::string>& lines) {
  std::map<std::pair<std::string, std::string>, int> counts;
  for (const auto& line : lines) {
    std::vector<std::string> syms;
    std::string word;
    auto flush = [&] {
      if (word.empty()) return;
      std::vector<std::string> s{kM};
      for (auto& c : utf8_chars(word)) s.push_back(c);
      for (std::size_t i = 0; i + 1 < s.size(); ++i) counts[{s[i], s[i + 1]}]++;
      word.clear();
    };
    for (char c : line) {
      if (c == ' ') flush();
      else word.push_back(c);
    }
    flush();
  }
  std::pair<std::string, std::string> best;
  int best_count = -1;
  for (const auto& [k, v] : counts) {  // map order gives lexicographic ties
    if (v > best_count) {
      best = k;
      best_count = v;
    }
  }
  return best;
}

std::vector<std::string> random_lines(Rng& rng, std::size_t n) {
  const std::vector<std::string> alphabet{"a", "b", "c", "d", "e", "k", "z", "é", "ñ",
                                          "ж", "д", "ب", "ا", ".", ",", "7"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string line;
    const auto words = 1 + rng.below(8);
    for (std::size_t w = 0; w < words; ++w) {
      if (w) line += rng.bernoulli(0.1) ? "  " : " ";
      const auto len = 1 + rng.below(6);
      for (std::size_t c = 0; c < len; ++c) line += alphabet[rng.below(alphabet.size())];
    }
    out.push_back(line);
  }
  return out;
}

TokenSeq seq_of_length(std::size_t n) {
  TokenSeq s;
  s.ids.assign(n, kNumSpecials);
  return s;
}

}  // namespace

TEST_CASE("normalize collapses whitespace, drops control characters, applies NFC") {
  CHECK(normalize("  a \t b\n") == "a b");
  CHECK(normalize("a\x01" "b") == "ab");
  CHECK(normalize("e\xCC\x81") == "\xC3\xA9");  // e + combining acute -> é
  CHECK(normalize("   ").empty());
}

TEST_CASE("first merge of {aaab, aaab} is (a, a)") {
  const std::vector<std::string> corpus{"aaab", "aaab"};
  BpeOptions opt;
  opt.vocab_size = kNumSpecials + 3 + 1;  // specials + {marker, a, b} + one merge
  Vocab v = train_bpe({corpus}, opt);
  REQUIRE(v.merges().size() == 1);
  CHECK(v.merges()[0] == Merge{"a", "a"});
  CHECK(v.size() == opt.vocab_size);
  const auto oracle = first_merge_oracle(corpus);
  CHECK(oracle.first == "a");
  CHECK(oracle.second == "a");
}

TEST_CASE("first merge agrees with brute-force counting on random corpora") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto lines = random_lines(rng, 30);
    Vocab base = train_bpe({lines}, {.vocab_size = 5 + 64, .max_lines_per_corpus = 0, .seed = 0});
    std::vector<std::string> normalized;
    for (auto& l : lines) normalized.push_back(normalize(l));
    const auto oracle = first_merge_oracle(normalized);
    CHECK(base.merges().at(0) == Merge{oracle.first, oracle.second});
  }
}

TEST_CASE("single-character corpus yields specials, marker and the character") {
  Vocab v = train_bpe({{"a"}}, {.vocab_size = kNumSpecials + 2});
  CHECK(v.size() == kNumSpecials + 2);
  CHECK(v.merges().empty());
  CHECK(v.find("a").has_value());
  CHECK(v.find(kM).has_value());
  CHECK(v.piece(kMask) == "<mask>");
}

TEST_CASE("vocab_size too small or unattainable is an error") {
  CHECK_THROWS_AS(train_bpe({{"abc"}}, {.vocab_size = 6}), Error);
  CHECK_THROWS_AS(train_bpe({{"ab"}}, {.vocab_size = 500}), Error);
  CHECK_THROWS_AS(train_bpe({}, {.vocab_size = 50}), Error);
}

TEST_CASE("duplicated corpora produce identical merges") {
  Rng rng(3);
  auto lines = random_lines(rng, 200);
  BpeOptions opt{.vocab_size = 120};
  Vocab one = train_bpe({lines}, opt);
  Vocab two = train_bpe({lines, lines}, opt);
  CHECK(one.merges() == two.merges());
  CHECK(one == two);
}

TEST_CASE("training is deterministic") {
  Rng rng(4);
  auto a = random_lines(rng, 300);
  auto b = random_lines(rng, 300);
  BpeOptions opt{.vocab_size = 150, .max_lines_per_corpus = 100, .seed = 9};
  CHECK(train_bpe({a, b}, opt).digest() == train_bpe({a, b}, opt).digest());
}

TEST_CASE("merges never produce reserved pieces") {
  std::vector<std::string> lines(20, "<s> </s> <pad> <mask> <unk>");
  Vocab v = train_bpe({lines}, {.vocab_size = 30});
  auto seq = encode(v, "<s> x<mask>");
  for (int id : seq.ids) {
    if (id != kUnk) CHECK(id >= kNumSpecials);
  }
  CHECK(decode(v, encode(v, lines[0])) == lines[0]);
}

TEST_CASE("roundtrip of 10k random lines") {
  Rng rng(5);
  auto train = random_lines(rng, 2000);
  Vocab v = train_bpe({train}, {.vocab_size = 300});
  auto lines = random_lines(rng, 10000);
  std::size_t checked = 0;
  for (const auto& line : lines) {
    auto seq = encode(v, line, 2);
    CHECK(seq.lang == 2);
    REQUIRE(seq.size() >= 1);
    if (decode(v, seq) != normalize(line)) {
      FAIL_CHECK("roundtrip mismatch for '" << line << "'");
    }
    ++checked;
  }
  CHECK(checked == 10000);
}

TEST_CASE("encode edge cases") {
  Vocab v = train_bpe({{"ab ba aab"}}, {.vocab_size = 10});
  CHECK_THROWS_AS(encode(v, ""), Error);
  CHECK_THROWS_AS(encode(v, " \t "), Error);
  auto seq = encode(v, "aqb");
  CHECK(std::count(seq.ids.begin(), seq.ids.end(), kUnk) == 1);
  TokenSeq bad;
  bad.ids = {static_cast<int>(v.size())};
  CHECK_THROWS_AS(decode(v, bad), Error);
  TokenSeq framed = encode(v, "ab");
  framed.ids.insert(framed.ids.begin(), kBos);
  framed.ids.push_back(kEos);
  CHECK(decode(v, framed) == "ab");
}

TEST_CASE("filter_by_length") {
  std::vector<TokenSeq> seqs{seq_of_length(10), seq_of_length(88), seq_of_length(89)};
  auto kept = filter_by_length(seqs, 88);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].size() == 10);
  CHECK(kept[1].size() == 88);
  CHECK(filter_by_length(kept, 88) == kept);
  CHECK(filter_by_length(std::vector<TokenSeq>{}, 88).empty());

  std::vector<std::pair<TokenSeq, TokenSeq>> pairs{
      {seq_of_length(50), seq_of_length(100)},
      {seq_of_length(3), seq_of_length(4)},
      {seq_of_length(89), seq_of_length(1)}};
  auto kept_pairs = filter_by_length(pairs, 88);
  REQUIRE(kept_pairs.size() == 1);
  CHECK(kept_pairs[0].first.size() == 3);
  CHECK_THROWS_AS(filter_by_length(seqs, 0), Error);
}

TEST_CASE("filter keeps exactly the short items in order") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TokenSeq> seqs;
    for (int i = 0; i < 40; ++i) seqs.push_back(seq_of_length(1 + rng.below(120)));
    const std::size_t max = 1 + rng.below(120);
    auto kept = filter_by_length(seqs, max);
    std::vector<TokenSeq> expect;
    for (auto& s : seqs) {
      if (s.size() <= max) expect.push_back(s);
    }
    CHECK(kept == expect);
    CHECK(filter_by_length(kept, max) == kept);
  }
}

TEST_CASE("vocab file roundtrip and malformed input") {
  Rng rng(8);
  Vocab v = train_bpe({random_lines(rng, 100)}, {.vocab_size = 80});
  CHECK(Vocab::parse(v.serialize()) == v);
  const auto path = std::filesystem::temp_directory_path() / "munmt_vocab_test.txt";
  v.save(path);
  CHECK(Vocab::load(path).digest() == v.digest());
  std::filesystem::remove(path);

  CHECK_THROWS_AS(Vocab::parse("garbage"), Error);
  CHECK_THROWS_AS(Vocab::parse("#munmt-vocab v1 size=2\n<pad>\t0\n<s>\t1\n#merges\n"), Error);
  std::string text = v.serialize();
  auto pos = text.find("<s>\t1");
  text.replace(pos, 5, "<s>\t7");
  CHECK_THROWS_AS(Vocab::parse(text), Error);
  CHECK_THROWS_AS(Vocab({"<pad>", "<s>", "</s>", "<unk>", "<mask>", "a", "a"}, {}), Error);
  CHECK_THROWS_AS(Vocab({"<pad>", "<s>", "</s>", "<unk>", "<mask>", "a"}, {{"a", "a"}}), Error);
}
