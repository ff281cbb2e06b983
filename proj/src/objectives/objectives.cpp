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

#include "objectives/objectives.hpp"

#include "common/error.hpp"

namespace munmt::obj {

MaskSpec sample_mask_spec(std::size_t len, Rng& rng) {
  if (len < 2) fail(ErrorKind::Data, "MASS needs a sequence of length >= 2");
  MaskSpec spec;
  spec.length = std::max<std::size_t>(1, len / 2);
  const double u = rng.uniform();
  if (u < 0.2) {
    spec.start = 0;
  } else if (u < 0.4) {
    spec.start = len / 2;
  } else {
    spec.start = rng.below(len - spec.length + 1);
  }
  return spec;
}

Masked apply_mask(const TokenSeq& x, const MaskSpec& spec) {
  if (spec.length < 1 || spec.start + spec.length > x.size()) {
    fail(ErrorKind::Internal, "mask span outside sequence");
  }
  Masked m;
  m.spec = spec;
  m.input = x;
  m.segment.lang = x.lang;
  for (std::size_t i = spec.start; i < spec.start + spec.length; ++i) {
    m.segment.ids.push_back(x.ids[i]);
    m.input.ids[i] = spec.mask_token;
  }
  return m;
}

Masked mass_mask(const TokenSeq& x, Rng& rng) {
  return apply_mask(x, sample_mask_spec(x.size(), rng));
}

int common_language(const std::vector<const TokenSeq*>& seqs) {
  if (seqs.empty()) fail(ErrorKind::Data, "empty batch");
  const int lang = seqs.front()->lang;
  for (const auto* s : seqs) {
    if (s->lang != lang) fail(ErrorKind::Internal, "batch mixes languages");
  }
  if (lang < 0) fail(ErrorKind::Internal, "batch has no language tag");
  return lang;
}

template <typename S>
Var cross_entropy_loss(Forward<S>& f, const std::vector<const TokenSeq*>& srcs,
                       const std::vector<const TokenSeq*>& tgts, int tgt_lang) {
  for (const auto* t : tgts) {
    if (t->ids.empty()) fail(ErrorKind::Data, "cross entropy on an empty target");
  }
  return f.seq2seq_loss(srcs, tgts, tgt_lang);
}

template <typename S>
Var mass_loss(Forward<S>& f, const std::vector<const TokenSeq*>& xs, Rng& rng) {
  const int lang = common_language(xs);
  std::vector<Masked> masked;
  masked.reserve(xs.size());
  for (const auto* x : xs) masked.push_back(mass_mask(*x, rng));
  std::vector<const TokenSeq*> inputs, segments;
  for (const auto& m : masked) {
    inputs.push_back(&m.input);
    segments.push_back(&m.segment);
  }
  return cross_entropy_loss(f, inputs, segments, lang);
}

template <typename S>
std::vector<model::Decoded> translate(const tensor::ParamStore<S>& params,
                                      const model::ModelConfig& cfg,
                                      const std::vector<const TokenSeq*>& srcs, int lang) {
  std::vector<std::size_t> budgets;
  budgets.reserve(srcs.size());
  for (const auto* s : srcs) budgets.push_back(model::decode_budget(cfg, s->size()));
  return model::greedy_decode(params, cfg, srcs, lang, budgets);
}

template <typename S>
TranslatedLoss back_translation_loss(Forward<S>& f, const std::vector<const TokenSeq*>& xs,
                                     int l_y) {
  const int lx = common_language(xs);
  if (l_y == lx) fail(ErrorKind::Internal, "back-translation into the source language");
  // Decoding runs outside the graph, so nothing upstream of y~ is recorded.
  const auto decoded = translate(f.params(), f.config(), xs, l_y);
  std::vector<const TokenSeq*> srcs, tgts;
  TranslatedLoss out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (decoded[i].body.ids.empty()) {
      ++out.skipped;
      continue;
    }
    srcs.push_back(&decoded[i].body);
    tgts.push_back(xs[i]);
  }
  out.used = srcs.size();
  if (!srcs.empty()) out.loss = cross_entropy_loss(f, srcs, tgts, lx);
  return out;
}

template <typename S>
TranslatedLoss cross_translation_loss(Forward<S>& f,
                                      const std::vector<const TokenSeq*>& xs,
                                      const std::vector<const TokenSeq*>& ys, int l_z) {
  if (xs.size() != ys.size()) fail(ErrorKind::Internal, "cross-translation pair count");
  const int lx = common_language(xs);
  const int ly = common_language(ys);
  if (l_z == lx || l_z == ly) {
    fail(ErrorKind::Internal, "cross-translation needs a third language");
  }
  const auto decoded = translate(f.params(), f.config(), xs, l_z);
  std::vector<const TokenSeq*> srcs, tgts;
  TranslatedLoss out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (decoded[i].body.ids.empty()) {
      ++out.skipped;
      continue;
    }
    srcs.push_back(&decoded[i].body);
    tgts.push_back(ys[i]);
  }
  out.used = srcs.size();
  if (!srcs.empty()) out.loss = cross_entropy_loss(f, srcs, tgts, ly);
  return out;
}

#define MUNMT_INSTANTIATE_OBJECTIVES(S)                                                  \
  template Var cross_entropy_loss<S>(Forward<S>&, const std::vector<const TokenSeq*>&,  \
                                     const std::vector<const TokenSeq*>&, int);         \
  template Var mass_loss<S>(Forward<S>&, const std::vector<const TokenSeq*>&, Rng&);    \
  template TranslatedLoss back_translation_loss<S>(                                     \
      Forward<S>&, const std::vector<const TokenSeq*>&, int);                           \
  template TranslatedLoss cross_translation_loss<S>(                                    \
      Forward<S>&, const std::vector<const TokenSeq*>&,                                 \
      const std::vector<const TokenSeq*>&, int);                                        \
  template std::vector<model::Decoded> translate<S>(                                    \
      const tensor::ParamStore<S>&, const model::ModelConfig&,                          \
      const std::vector<const TokenSeq*>&, int);

MUNMT_INSTANTIATE_OBJECTIVES(float)
MUNMT_INSTANTIATE_OBJECTIVES(double)

#undef MUNMT_INSTANTIATE_OBJECTIVES

}  // namespace munmt::obj
