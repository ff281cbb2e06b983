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

#ifndef MUNMT_SYNTHLANG_SYNTHLANG_HPP
#define MUNMT_SYNTHLANG_SYNTHLANG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "corpus/corpus.hpp"

namespace munmt::synth {

// A base sentence is a list of word-type ids; type 0 is the most frequent.
using BaseSentence = std::vector<int>;

struct CorpusSpec {
  std::size_t vocab_types = 600;
  std::size_t min_len = 4;
  std::size_t max_len = 14;
  std::size_t lines = 1000;
  double zipf_exponent = 1.1;
  // Order-2 chain: with probability follow, the next word is one of
  // `successors` context-specific candidates; otherwise a fresh Zipf draw.
  // Candidates are themselves Zipf draws, so the marginal stays Zipfian.
  double follow = 0.7;
  std::size_t successors = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

// Zipf(s) over ranks 1..n, used for both generation and tests.
class Zipf {
 public:
  Zipf(std::size_t n, double exponent);
  int sample(double u) const;  // u uniform in [0, 1)
  const std::vector<double>& cdf() const { return cdf_; }

 private:
  std::vector<double> cdf_;
};

std::vector<BaseSentence> gen_base_corpus(const CorpusSpec& spec);

// Surface realisation of the base language for one family of toy languages.
struct LanguageSpec {
  std::string name;
  bool base = false;
  // lexicon[t] is the stem used for word type t; no stem is used twice.
  std::vector<int> lexicon;
  // 0 or 1 disables reordering; otherwise consecutive windows of this many
  // words are reversed.
  std::size_t window = 0;

  void validate(std::size_t stem_count) const;
};

class ToyLanguage {
 public:
  ToyLanguage(LanguageSpec spec, const std::vector<std::string>& stems);

  const LanguageSpec& spec() const { return spec_; }
  const std::string& word(int type) const { return words_.at(static_cast<std::size_t>(type)); }

  std::string derive(const BaseSentence& s) const;
  // Inverse of derive. Data error on a word outside the lexicon.
  BaseSentence parse(const std::string& sentence) const;

 private:
  LanguageSpec spec_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

std::vector<std::string> window_reverse(std::vector<std::string> words, std::size_t window);

std::string oracle_translate(const std::string& sentence, const ToyLanguage& from,
                             const ToyLanguage& to);

// Distinct lowercase pseudo-words, one per word type.
std::vector<std::string> make_stems(std::size_t count, std::uint64_t seed);

struct BenchmarkConfig {
  std::string base = "En";
  std::vector<std::string> targets{"X1"};
  std::vector<std::string> auxiliaries{"A1", "A2"};
  std::size_t vocab_types = 600;
  std::size_t min_len = 4;
  std::size_t max_len = 14;
  std::size_t mono_lines = 20000;
  std::size_t parallel_lines = 5000;
  std::size_t dev_lines = 200;
  std::size_t test_lines = 500;
  std::size_t target_window = 3;
  // Reordering window per auxiliary; empty means none reorder.
  std::vector<std::size_t> auxiliary_windows{3, 0};
  // Share of each target's word types whose surface form is taken from the
  // first auxiliary; the rest is split evenly over the remaining auxiliaries.
  double cognate_share = 0.6;
  double follow = 0.7;
  std::size_t successors = 4;
  double zipf_exponent = 1.1;
  // Probability of deleting each word of a monolingual line.
  double word_dropout = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
  std::string to_json() const;
  static BenchmarkConfig from_json(const std::string& text);
};

struct Benchmark {
  BenchmarkConfig config;
  std::vector<ToyLanguage> languages;  // base first, then auxiliaries, then targets

  const ToyLanguage& language(const std::string& name) const;
};

// Deterministic language family for the config. English and every
// auxiliary draw their words from disjoint stem pools. A target has no words
// of its own: each of its types reuses the word of one auxiliary.
Benchmark make_family(const BenchmarkConfig& cfg);

// Writes corpora, dev/test sets (one file per language, line-aligned), the
// resolved config and manifest.json into dir. Returns the manifest.
corpus::Manifest build_benchmark(const BenchmarkConfig& cfg, const std::filesystem::path& dir);

}  // namespace munmt::synth

#endif  // MUNMT_SYNTHLANG_SYNTHLANG_HPP
