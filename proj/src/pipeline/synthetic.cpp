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

#include "pipeline/synthetic.hpp"

#include <cmath>
#include <numeric>

#include "common/digest.hpp"
#include "common/error.hpp"
#include "json.hpp"
#include "objectives/objectives.hpp"
#include "tokenizer/bpe.hpp"

namespace munmt::pipeline {

namespace {

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  Rng rng(seed);
  rng.shuffle(p.begin(), p.end());
  return p;
}

struct SourceItem {
  const LoadedDataset* set;
  std::size_t item;
};

struct Written {
  std::vector<std::string> src, tgt;
  nlohmann::json provenance = nlohmann::json::array();
};

// Decodes sources into lang in batches; pairs whose decode is empty are
// dropped. `decoded_is_source` puts the decode on the source side.
void back_translate(const tensor::ParamStore<float>& params, const model::ModelConfig& mcfg,
                    const tok::Vocab& vocab, const std::vector<SourceItem>& items, int lang,
                    std::size_t batch, int round, Written& out, SyntheticStats& stats) {
  for (std::size_t begin = 0; begin < items.size(); begin += batch) {
    const auto end = std::min(items.size(), begin + batch);
    std::vector<const tok::TokenSeq*> srcs;
    for (std::size_t i = begin; i < end; ++i) srcs.push_back(&items[i].set->data.mono[items[i].item]);
    const auto decoded = obj::translate(params, mcfg, srcs, lang);
    for (std::size_t i = begin; i < end; ++i) {
      const auto& d = decoded[i - begin];
      const auto text = d.body.ids.empty() ? std::string() : tok::decode(vocab, d.body);
      if (text.empty()) {
        ++stats.skipped;
        continue;
      }
      out.src.push_back(text);
      out.tgt.push_back(items[i].set->text[items[i].item]);
      out.provenance.push_back({{"round", round},
                                {"source_dataset", items[i].set->data.id},
                                {"line_index", items[i].item}});
      ++stats.pairs;
    }
  }
}

}  // namespace

std::vector<std::size_t> synthetic_selection(const corpus::Dataset& mono, const ExperimentConfig& cfg,
                                             int round) {
  const auto n = mono.size();
  const auto first = static_cast<std::size_t>(std::llround(cfg.synth.round1_mono_fraction * static_cast<double>(n)));
  const auto second = first * cfg.synth.round2_multiplier;
  if (first == 0 || first + second > n) {
    fail(ErrorKind::Data, "dataset " + mono.id + " has " + std::to_string(n) +
                              " lines, too few for synthetic rounds of " + std::to_string(first) +
                              " and " + std::to_string(second));
  }
  const auto perm = permutation(n, derive_seed(cfg.seed, "synth.select." + mono.id));
  if (round == 1) return {perm.begin(), perm.begin() + static_cast<long>(first)};
  return {perm.begin() + static_cast<long>(first), perm.begin() + static_cast<long>(first + second)};
}

corpus::Manifest generate_synthetic(const tensor::ParamStore<float>& params,
                                    const model::ModelConfig& mcfg, const tok::Vocab& vocab,
                                    const corpus::LanguageRegistry& registry,
                                    const Corpora& real, const ExperimentConfig& cfg, int round,
                                    const std::filesystem::path& dir, SyntheticStats* stats_out) {
  if (round != 1 && round != 2) fail(ErrorKind::Config, "synthetic round must be 1 or 2");
  std::filesystem::create_directories(dir);
  SyntheticStats stats;
  corpus::Manifest m;
  m.root = dir;
  const int en = registry.english();
  const auto& en_name = registry.at(en).name;
  const auto prefix = "synth.r" + std::to_string(round) + ".";

  auto emit = [&](const std::string& id, int src, int tgt, Written& w) {
    const auto src_file = id + "." + registry.at(src).name;
    const auto tgt_file = id + "." + registry.at(tgt).name;
    corpus::write_lines(dir / src_file, w.src);
    corpus::write_lines(dir / tgt_file, w.tgt);
    write_file_atomic(dir / (id + ".provenance.json"),
                      nlohmann::json{{"round", round}, {"pairs", w.provenance}}.dump(1) + "\n");
    m.datasets.push_back({id, corpus::DatasetKind::Parallel, "", registry.at(src).name,
                          registry.at(tgt).name, "", src_file, tgt_file, true});
  };

  // English slices for round 2, one disjoint block per target.
  std::vector<SourceItem> english;
  for (const auto& s : real.sets) {
    if (!s->data.is_parallel() && s->data.lang == en) {
      for (std::size_t i = 0; i < s->data.size(); ++i) english.push_back({s.get(), i});
    }
  }
  const auto english_perm = permutation(english.size(), derive_seed(cfg.seed, "synth.english"));

  const auto targets = registry.targets();
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    const int x = targets[ti];
    const auto& x_name = registry.at(x).name;
    std::vector<SourceItem> items;
    for (const auto& s : real.sets) {
      if (s->data.is_parallel() || s->data.lang != x) continue;
      for (auto i : synthetic_selection(s->data, cfg, round)) items.push_back({s.get(), i});
    }
    if (items.empty()) fail(ErrorKind::Data, "target " + x_name + " has no monolingual data");
    Written to_x;
    back_translate(params, mcfg, vocab, items, en, cfg.synth.decode_batch, round, to_x, stats);
    emit(prefix + en_name + "-" + x_name, en, x, to_x);

    if (round == 2) {
      const auto k = cfg.synth.english_lines_per_target;
      if ((ti + 1) * k > english.size()) {
        fail(ErrorKind::Data, "not enough English monolingual lines for " +
                                  std::to_string(targets.size()) + " targets x " + std::to_string(k));
      }
      std::vector<SourceItem> en_items;
      for (std::size_t j = ti * k; j < (ti + 1) * k; ++j) en_items.push_back(english[english_perm[j]]);
      Written from_x;
      back_translate(params, mcfg, vocab, en_items, x, cfg.synth.decode_batch, round, from_x, stats);
      emit(prefix + x_name + "-" + en_name, x, en, from_x);
    }
  }
  m.save(dir / "manifest.json");
  if (stats_out) *stats_out = stats;
  return m;
}

}  // namespace munmt::pipeline
