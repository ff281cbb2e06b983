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

#include "eval/evaluate.hpp"

#include <cstdio>

#include "common/digest.hpp"
#include "common/error.hpp"
#include "json.hpp"
#include "tokenizer/bpe.hpp"

namespace munmt::eval {

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string Report::to_tsv() const {
  std::string out = "direction\tscore\tp1\tp2\tp3\tp4\tbp\n";
  for (const auto& r : rows) {
    out += r.direction;
    out += '\t' + fixed(r.bleu.score);
    for (double p : r.bleu.precisions) out += '\t' + fixed(p);
    char bp[32];
    std::snprintf(bp, sizeof bp, "%.4f", r.bleu.bp);
    out += '\t';
    out += bp;
    out += '\n';
  }
  return out;
}

std::string Report::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    j.push_back({{"direction", r.direction},
                 {"sentences", r.sentences},
                 {"score", r.bleu.score},
                 {"precisions", r.bleu.precisions},
                 {"matches", r.bleu.matches},
                 {"totals", r.bleu.totals},
                 {"bp", r.bleu.bp},
                 {"hyp_len", r.bleu.hyp_len},
                 {"ref_len", r.bleu.ref_len}});
  }
  return nlohmann::json{{"results", j}}.dump(2) + "\n";
}

void Report::save(const std::filesystem::path& stem) const {
  auto tsv = stem;
  tsv += ".tsv";
  auto js = stem;
  js += ".json";
  write_file_atomic(tsv, to_tsv());
  write_file_atomic(js, to_json());
}

const DirectionResult* Report::find(const std::string& direction) const {
  for (const auto& r : rows) {
    if (r.direction == direction) return &r;
  }
  return nullptr;
}

Report evaluate(const std::vector<Testset>& sets, const Translator& translate, BleuMode mode) {
  Report report;
  for (const auto& set : sets) {
    if (set.sources.size() != set.references.size()) {
      fail(ErrorKind::Data, "testset " + set.direction + ": source/reference count mismatch");
    }
    const auto hyps = translate(set);
    if (hyps.size() != set.sources.size()) {
      fail(ErrorKind::Internal, "translator returned the wrong number of lines");
    }
    report.rows.push_back({set.direction, set.sources.size(), bleu(hyps, set.references, mode)});
  }
  return report;
}

std::vector<std::string> translate_lines(const tensor::ParamStore<float>& params,
                                         const model::ModelConfig& cfg, const tok::Vocab& vocab,
                                         const std::vector<std::string>& lines, int src_lang,
                                         int tgt_lang, std::size_t batch_size) {
  if (batch_size == 0) fail(ErrorKind::Config, "translation batch size must be >= 1");
  const auto max_src = static_cast<std::size_t>(cfg.max_positions) - 1;
  std::vector<std::string> out;
  out.reserve(lines.size());
  for (std::size_t begin = 0; begin < lines.size(); begin += batch_size) {
    const auto end = std::min(lines.size(), begin + batch_size);
    std::vector<tok::TokenSeq> seqs;
    std::vector<std::size_t> budgets;
    for (std::size_t i = begin; i < end; ++i) {
      auto s = tok::encode(vocab, lines[i], src_lang);
      if (s.ids.size() > max_src) s.ids.resize(max_src);
      budgets.push_back(model::decode_budget(cfg, s.ids.size()));
      seqs.push_back(std::move(s));
    }
    std::vector<const tok::TokenSeq*> ptrs;
    for (const auto& s : seqs) ptrs.push_back(&s);
    const auto decoded = model::greedy_decode(params, cfg, ptrs, tgt_lang, budgets);
    for (const auto& d : decoded) out.push_back(tok::decode(vocab, d.body));
  }
  return out;
}

Report evaluate_model(const tensor::ParamStore<float>& params, const model::ModelConfig& cfg,
                      const tok::Vocab& vocab, const std::vector<Testset>& sets, BleuMode mode) {
  return evaluate(
      sets,
      [&](const Testset& set) {
        return translate_lines(params, cfg, vocab, set.sources, set.src_lang, set.tgt_lang);
      },
      mode);
}

}  // namespace munmt::eval
