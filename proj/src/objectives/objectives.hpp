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

#ifndef MUNMT_OBJECTIVES_OBJECTIVES_HPP
#define MUNMT_OBJECTIVES_OBJECTIVES_HPP

#include <optional>
#include <vector>

#include "common/rng.hpp"
#include "model/model.hpp"

namespace munmt::obj {

using model::Forward;
using tensor::Var;
using tok::TokenSeq;

struct MaskSpec {
  std::size_t start = 0;
  std::size_t length = 0;
  int mask_token = tok::kMask;
};

struct Masked {
  TokenSeq input;    // x with [start, start+length) replaced by MASK
  TokenSeq segment;  // the replaced tokens
  MaskSpec spec;
};

// Segment length floor(l/2) (at least 1). Start is 0 with probability 0.2,
// floor(l/2) with probability 0.2, otherwise uniform over 0..l-length.
MaskSpec sample_mask_spec(std::size_t len, Rng& rng);
Masked apply_mask(const TokenSeq& x, const MaskSpec& spec);
Masked mass_mask(const TokenSeq& x, Rng& rng);

// Mean token NLL of tgts given srcs (teacher forcing, PAD excluded).
template <typename S>
Var cross_entropy_loss(Forward<S>& f, const std::vector<const TokenSeq*>& srcs,
                       const std::vector<const TokenSeq*>& tgts, int tgt_lang);

// Masks every sequence and scores only the masked segments, conditioned on
// their language.
template <typename S>
Var mass_loss(Forward<S>& f, const std::vector<const TokenSeq*>& xs, Rng& rng);

// Losses that translate first. Items whose intermediate decode came out
// empty are skipped; loss is empty when nothing is left.
struct TranslatedLoss {
  std::optional<Var> loss;
  std::size_t used = 0;
  std::size_t skipped = 0;
};

// y~ = greedy(x -> l_y) as a constant, then CE(y~ -> x) in x's language.
template <typename S>
TranslatedLoss back_translation_loss(Forward<S>& f, const std::vector<const TokenSeq*>& xs,
                                     int l_y);

// z~ = greedy(x -> l_z) as a constant, then CE(z~ -> y) in y's language.
template <typename S>
TranslatedLoss cross_translation_loss(Forward<S>& f,
                                      const std::vector<const TokenSeq*>& xs,
                                      const std::vector<const TokenSeq*>& ys, int l_z);

// Language shared by every sequence; throws if they disagree or are unset.
int common_language(const std::vector<const TokenSeq*>& seqs);

// Greedy translation of a batch into lang with the default length budget.
template <typename S>
std::vector<model::Decoded> translate(const tensor::ParamStore<S>& params,
                                      const model::ModelConfig& cfg,
                                      const std::vector<const TokenSeq*>& srcs, int lang);

}  // namespace munmt::obj

#endif  // MUNMT_OBJECTIVES_OBJECTIVES_HPP
