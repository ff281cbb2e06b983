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

#ifndef MUNMT_MODEL_MODEL_HPP
#define MUNMT_MODEL_MODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tensor/graph.hpp"
#include "tensor/ops.hpp"
#include "tokenizer/vocab.hpp"

namespace munmt::model {

using tensor::Graph;
using tensor::ParamId;
using tensor::ParamStore;
using tensor::Var;

struct ModelConfig {
  std::size_t layers = 2;
  std::size_t hidden = 64;
  std::size_t ffn = 256;
  std::size_t heads = 4;
  std::size_t vocab_size = 0;
  std::size_t num_languages = 0;
  std::size_t max_positions = 128;

  // Throws Config listing every violated constraint.
  void validate() const;
  // Stable text form, used for checkpoint digests.
  std::string canonical() const;
  bool operator==(const ModelConfig&) const = default;
};

// Scaled-normal matrices (std = 1/sqrt(fan_in)), zero biases, unit layernorm
// gains. Every tensor draws from its own stream keyed by its name, so the
// result does not depend on creation order.
ParamStore<float> init_params(const ModelConfig& cfg, std::uint64_t seed);

// Parameter ids resolved once per store.
struct Linear {
  ParamId w = 0;
  ParamId b = 0;
};
struct Norm {
  ParamId gain = 0;
  ParamId bias = 0;
};
struct EncoderLayer {
  Norm ln1, ln2;
  Linear q, k, v, o;
  Linear ffn1, ffn2;
};
struct DecoderLayer {
  Norm ln1, ln2, ln3;
  Linear self_q, self_k, self_v;
  std::vector<Linear> self_o;  // one per language
  Linear cross_q, cross_k, cross_v;
  std::vector<Linear> cross_o;  // one per language
  Linear ffn1, ffn2;
};
struct Layout {
  ParamId tok_emb = 0;
  ParamId out_bias = 0;
  ParamId pos_emb = 0;
  ParamId lang_emb = 0;
  std::vector<EncoderLayer> enc;
  Norm enc_ln;
  std::vector<DecoderLayer> dec;
  Norm dec_ln;

  template <typename S>
  static Layout resolve(const ParamStore<S>& params, const ModelConfig& cfg);
};

// Padded id matrix [batch, len], row-major.
struct Batch {
  std::size_t batch = 0;
  std::size_t len = 0;
  std::vector<int> ids;
  std::vector<std::size_t> lengths;

  int at(std::size_t b, std::size_t t) const { return ids[b * len + t]; }
};

// Encoder input: body followed by EOS.
Batch source_batch(const std::vector<const tok::TokenSeq*>& seqs);
// Decoder input (BOS + body) and aligned targets (body + EOS, -1 on padding).
struct TeacherBatch {
  Batch input;
  std::vector<int> targets;
};
TeacherBatch teacher_batch(const std::vector<const tok::TokenSeq*>& seqs);

// Builds the model on one graph. Parameters enter the graph on first use,
// so anything a loss does not touch gets a zero gradient.
template <typename S>
class Forward {
 public:
  Forward(Graph<S>& graph, const ParamStore<S>& params, const ModelConfig& cfg);

  Graph<S>& graph() { return g_; }
  const ParamStore<S>& params() const { return params_; }
  const ModelConfig& config() const { return cfg_; }

  // [batch*len, hidden]. Takes no language argument.
  Var encode(const Batch& src);

  // Logits [batch*tgt_len, vocab] for every prefix position, conditioned on
  // tgt_lang through the language embedding and output projection banks.
  Var decode_logits(Var enc, const Batch& src, const Batch& tgt_in, int tgt_lang);

  // Mean token NLL of tgts given srcs, PAD excluded.
  Var seq2seq_loss(const std::vector<const tok::TokenSeq*>& srcs,
                   const std::vector<const tok::TokenSeq*>& tgts, int tgt_lang);

 private:
  Var p(ParamId id);
  Var linear(Var x, const Linear& l);
  Var norm(Var x, const Norm& n);
  Var embed(const Batch& b, bool with_lang, int lang);
  void check_batch(const Batch& b) const;

  Graph<S>& g_;
  const ParamStore<S>& params_;
  const ModelConfig& cfg_;
  Layout layout_;
  std::vector<Var> bound_;
};

extern template class Forward<float>;
extern template class Forward<double>;

struct Decoded {
  tok::TokenSeq body;
  bool finished = false;  // EOS emitted before max_len
};

// Greedy decoding with a key/value cache. Starts from BOS and appends the
// argmax (ties to the lowest id) until EOS or max_lens[i] tokens. Body
// excludes BOS/EOS; body.lang = tgt_lang.
template <typename S>
std::vector<Decoded> greedy_decode(const ParamStore<S>& params, const ModelConfig& cfg,
                                   const std::vector<const tok::TokenSeq*>& srcs,
                                   int tgt_lang, const std::vector<std::size_t>& max_lens);

// Per-step logits produced by the cached decoder while feeding the given
// prefix (BOS + prefix body), for cross-checking against decode_logits.
template <typename S>
std::vector<std::vector<S>> incremental_logits(const ParamStore<S>& params,
                                               const ModelConfig& cfg,
                                               const tok::TokenSeq& src,
                                               const tok::TokenSeq& prefix, int tgt_lang);

// Decode length budget used by translation callers.
std::size_t decode_budget(const ModelConfig& cfg, std::size_t src_len);

}  // namespace munmt::model

#endif  // MUNMT_MODEL_MODEL_HPP
