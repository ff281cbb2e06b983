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

#ifndef MUNMT_CORPUS_CORPUS_HPP
#define MUNMT_CORPUS_CORPUS_HPP

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "common/rng.hpp"
#include "tokenizer/vocab.hpp"

namespace munmt::corpus {

using tok::TokenSeq;

struct Language {
  std::string name;
  bool is_english = false;
  bool is_target = false;
};

// Languages in registration order; the index is the LanguageId used by
// TokenSeq::lang and the model's language banks.
class LanguageRegistry {
 public:
  LanguageRegistry() = default;
  explicit LanguageRegistry(std::vector<Language> langs);

  std::size_t size() const { return langs_.size(); }
  const Language& at(int id) const;
  std::optional<int> find(const std::string& name) const;
  int id(const std::string& name) const;  // Data error if unknown
  int english() const;
  std::vector<int> targets() const;
  const std::vector<Language>& languages() const { return langs_; }

 private:
  std::vector<Language> langs_;
};

enum class DatasetKind { Mono, Parallel };

struct Dataset {
  std::string id;
  DatasetKind kind = DatasetKind::Mono;
  int lang = -1;      // mono
  int src_lang = -1;  // parallel
  int tgt_lang = -1;  // parallel
  bool synthetic = false;
  std::vector<TokenSeq> mono;
  std::vector<std::pair<TokenSeq, TokenSeq>> pairs;

  std::size_t size() const { return kind == DatasetKind::Mono ? mono.size() : pairs.size(); }
  bool is_parallel() const { return kind == DatasetKind::Parallel; }
  // Length used for batching: longest side, in pieces.
  std::size_t item_length(std::size_t i) const;
  // Throws Data when tags or items disagree with the declared kind.
  void validate() const;
};

struct SamplingPolicy {
  double p_parallel = 0.5;
  double temperature = 5.0;

  void validate() const;
};

// w_i proportional to (n_i / sum n)^(1/T).
std::vector<double> temperature_weights(std::span<const std::size_t> sizes, double temperature);

// Bernoulli(p_parallel) for the type, then uniform over mono datasets or
// temperature-weighted over parallel ones. Returns an index into pool.
std::size_t choose_dataset(const std::vector<const Dataset*>& pool, const SamplingPolicy& policy,
                           Rng& rng);

// Items drawn uniformly with replacement. For mono datasets second is empty.
struct ExampleBatch {
  std::vector<std::size_t> items;
  std::vector<const TokenSeq*> first;
  std::vector<const TokenSeq*> second;

  // Padded width of the longest side.
  std::size_t width() const;
};
ExampleBatch draw_batch(const Dataset& dataset, std::size_t batch_size, Rng& rng);
ExampleBatch make_batch(const Dataset& dataset, const std::vector<std::size_t>& items);

// Groups items into length buckets of the given width and fills batches
// greedily so that items * padded length <= max_tokens. Every item appears
// in exactly one batch.
std::vector<std::vector<std::size_t>> bucket_batches(const Dataset& dataset,
                                                     std::size_t max_tokens = 2000,
                                                     std::size_t bucket_width = 8);

// Manifest entries point at one-sentence-per-line files, relative to the
// manifest's directory.
struct ManifestDataset {
  std::string id;
  DatasetKind kind = DatasetKind::Mono;
  std::string lang;
  std::string src_lang;
  std::string tgt_lang;
  std::string path;      // mono
  std::string src_path;  // parallel
  std::string tgt_path;  // parallel
  bool synthetic = false;
};

struct ManifestTestset {
  std::string split;  // "dev" or "test"
  std::string src_lang;
  std::string tgt_lang;
  std::string src_path;
  std::string ref_path;

  std::string direction() const { return src_lang + "-" + tgt_lang; }
};

struct Manifest {
  std::filesystem::path root;
  std::vector<ManifestDataset> datasets;
  std::vector<ManifestTestset> testsets;

  std::string to_json() const;
  static Manifest parse(const std::string& text, const std::filesystem::path& root);
  static Manifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  std::filesystem::path resolve(const std::string& rel) const;
};

// Reads a corpus file; lines that are empty after whitespace trimming are
// dropped.
std::vector<std::string> read_lines(const std::filesystem::path& path);
// Aligned pair of files. Pairs with an empty side are dropped; a line count
// mismatch is a Data error.
std::vector<std::pair<std::string, std::string>> read_parallel(
    const std::filesystem::path& src, const std::filesystem::path& tgt);
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

}  // namespace munmt::corpus

#endif  // MUNMT_CORPUS_CORPUS_HPP
