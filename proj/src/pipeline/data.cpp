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

#include "pipeline/data.hpp"

#include <algorithm>
#include <set>

#include "common/error.hpp"
#include "tokenizer/bpe.hpp"

namespace munmt::pipeline {

const LoadedDataset* Corpora::find(const std::string& id) const {
  for (const auto& s : sets) {
    if (s->data.id == id) return s.get();
  }
  return nullptr;
}

const LoadedDataset& Corpora::get(const std::string& id) const {
  const auto* s = find(id);
  if (!s) fail(ErrorKind::Data, "no dataset '" + id + "'");
  return *s;
}

std::vector<const corpus::Dataset*> Corpora::pool(bool include_synthetic) const {
  std::vector<const corpus::Dataset*> out;
  for (const auto& s : sets) {
    if (s->data.synthetic && !include_synthetic) continue;
    if (s->data.size() == 0) continue;
    out.push_back(&s->data);
  }
  return out;
}

void Corpora::append(Corpora other) {
  for (auto& s : other.sets) {
    if (find(s->data.id)) fail(ErrorKind::Data, "duplicate dataset id " + s->data.id);
    sets.push_back(std::move(s));
  }
}

tok::Vocab train_vocab(const ExperimentConfig& cfg, const corpus::Manifest& manifest) {
  std::vector<std::vector<std::string>> corpora;
  for (const auto& d : manifest.datasets) {
    if (d.synthetic) continue;
    if (d.kind == corpus::DatasetKind::Mono) {
      corpora.push_back(corpus::read_lines(manifest.resolve(d.path)));
    } else {
      const auto pairs = corpus::read_parallel(manifest.resolve(d.src_path), manifest.resolve(d.tgt_path));
      std::vector<std::string> a, b;
      for (const auto& [x, y] : pairs) {
        a.push_back(x);
        b.push_back(y);
      }
      corpora.push_back(std::move(a));
      corpora.push_back(std::move(b));
    }
  }
  if (corpora.empty()) fail(ErrorKind::Data, "manifest has no real corpora to learn a vocabulary from");
  tok::BpeOptions opt;
  opt.vocab_size = cfg.vocab.size;
  opt.max_lines_per_corpus = cfg.vocab.max_lines_per_corpus;
  opt.seed = derive_seed(cfg.seed, "vocab");
  return tok::train_bpe(corpora, opt);
}

namespace {

std::size_t piece_limit(const ExperimentConfig& cfg) {
  // BOS/EOS take one position on each side.
  return std::min(cfg.vocab.max_pieces, cfg.model.max_positions - 1);
}

}  // namespace

Corpora load_corpora(const ExperimentConfig& cfg, const corpus::Manifest& manifest,
                     const corpus::LanguageRegistry& registry, const tok::Vocab& vocab) {
  const auto limit = piece_limit(cfg);
  const std::set<std::string> excluded(cfg.exclude_datasets.begin(), cfg.exclude_datasets.end());
  Corpora out;
  for (const auto& d : manifest.datasets) {
    if (excluded.count(d.id)) continue;
    auto ld = std::make_unique<LoadedDataset>();
    auto& ds = ld->data;
    ds.id = d.id;
    ds.kind = d.kind;
    ds.synthetic = d.synthetic;
    if (d.kind == corpus::DatasetKind::Mono) {
      ds.lang = registry.id(d.lang);
      for (auto& line : corpus::read_lines(manifest.resolve(d.path))) {
        auto seq = tok::encode(vocab, line, ds.lang);
        if (seq.size() > limit) continue;
        ds.mono.push_back(std::move(seq));
        ld->text.push_back(tok::normalize(line));
      }
    } else {
      ds.src_lang = registry.id(d.src_lang);
      ds.tgt_lang = registry.id(d.tgt_lang);
      for (auto& [a, b] : corpus::read_parallel(manifest.resolve(d.src_path), manifest.resolve(d.tgt_path))) {
        auto x = tok::encode(vocab, a, ds.src_lang);
        auto y = tok::encode(vocab, b, ds.tgt_lang);
        if (x.size() > limit || y.size() > limit) continue;
        ds.pairs.emplace_back(std::move(x), std::move(y));
        ld->pair_text.emplace_back(tok::normalize(a), tok::normalize(b));
      }
    }
    ds.validate();
    out.sets.push_back(std::move(ld));
  }
  return out;
}

void check_topology(const ExperimentConfig& cfg, const corpus::LanguageRegistry& registry,
                    const Corpora& corpora) {
  std::vector<std::string> problems;
  const int en = registry.english();
  std::set<int> with_english;
  for (const auto& s : corpora.sets) {
    const auto& d = s->data;
    if (!d.is_parallel() || d.synthetic) continue;
    for (int l : {d.src_lang, d.tgt_lang}) {
      if (registry.at(l).is_target) {
        problems.push_back("target language " + registry.at(l).name + " has real parallel data (" +
                           d.id + ")");
      }
    }
    if (d.src_lang == en) with_english.insert(d.tgt_lang);
    if (d.tgt_lang == en) with_english.insert(d.src_lang);
  }
  for (const auto& [t, ps] : cfg.pivots) {
    for (const auto& p : ps) {
      if (!with_english.count(registry.id(p))) {
        problems.push_back("pivot " + p + " of " + t + " has no real parallel data with English");
      }
    }
  }
  if (!problems.empty()) {
    std::string msg = "dataset topology: " + problems[0];
    for (std::size_t i = 1; i < problems.size(); ++i) msg += "; " + problems[i];
    fail(ErrorKind::Config, msg);
  }
}

std::vector<eval::Testset> load_testsets(const corpus::Manifest& manifest,
                                         const corpus::LanguageRegistry& registry,
                                         const std::string& split,
                                         const std::vector<std::string>& directions) {
  std::vector<eval::Testset> out;
  for (const auto& dir : directions) {
    const corpus::ManifestTestset* found = nullptr;
    for (const auto& t : manifest.testsets) {
      if (t.split == split && t.direction() == dir) found = &t;
    }
    if (!found) fail(ErrorKind::Data, "no " + split + " set for direction " + dir);
    eval::Testset ts;
    ts.direction = dir;
    ts.src_lang = registry.id(found->src_lang);
    ts.tgt_lang = registry.id(found->tgt_lang);
    const auto pairs = corpus::read_parallel(manifest.resolve(found->src_path), manifest.resolve(found->ref_path));
    for (const auto& [s, r] : pairs) {
      ts.sources.push_back(s);
      ts.references.push_back(r);
    }
    out.push_back(std::move(ts));
  }
  return out;
}

}  // namespace munmt::pipeline
