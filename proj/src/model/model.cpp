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

#include "model/model.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace munmt::model {

using tensor::Shape;
using tensor::Tensor;

void ModelConfig::validate() const {
  std::vector<std::string> problems;
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  };
  need(layers >= 1, "model.layers must be >= 1");
  need(hidden >= 1, "model.hidden must be >= 1");
  need(ffn >= 1, "model.ffn must be >= 1");
  need(heads >= 1, "model.heads must be >= 1");
  need(heads == 0 || hidden % heads == 0, "model.hidden must be divisible by model.heads");
  need(vocab_size > static_cast<std::size_t>(tok::kNumSpecials),
       "model.vocab_size must exceed the special pieces");
  need(num_languages >= 1, "model.num_languages must be >= 1");
  need(max_positions >= 2, "model.max_positions must be >= 2");
  if (!problems.empty()) {
    std::string msg = "invalid model config: ";
    for (std::size_t i = 0; i < problems.size(); ++i) {
      if (i) msg += "; ";
      msg += problems[i];
    }
    fail(ErrorKind::Config, msg);
  }
}

std::string ModelConfig::canonical() const {
  return "layers=" + std::to_string(layers) + " hidden=" + std::to_string(hidden) +
         " ffn=" + std::to_string(ffn) + " heads=" + std::to_string(heads) +
         " vocab=" + std::to_string(vocab_size) + " langs=" + std::to_string(num_languages) +
         " positions=" + std::to_string(max_positions);
}

namespace {

struct Builder {
  ParamStore<float>& store;
  std::uint64_t seed;

  void normal(const std::string& name, Shape shape, double stddev) {
    Rng rng(derive_seed(seed, name));
    Tensor<float> t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.normal() * stddev);
    store.add(name, std::move(t));
  }
  void constant(const std::string& name, Shape shape, float v) {
    store.add(name, Tensor<float>(std::move(shape), v));
  }
  void linear(const std::string& name, std::size_t in, std::size_t out) {
    normal(name + ".w", {in, out}, 1.0 / std::sqrt(static_cast<double>(in)));
    constant(name + ".b", {out}, 0.0f);
  }
  void norm(const std::string& name, std::size_t width) {
    constant(name + ".g", {width}, 1.0f);
    constant(name + ".b", {width}, 0.0f);
  }
};

std::string enc_name(std::size_t i) { return "enc." + std::to_string(i); }
std::string dec_name(std::size_t i) { return "dec." + std::to_string(i); }

}  // namespace

ParamStore<float> init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParamStore<float> store;
  Builder b{store, seed};
  const std::size_t h = cfg.hidden;
  const double emb_std = 1.0 / std::sqrt(static_cast<double>(h));
  b.normal("tok_emb", {cfg.vocab_size, h}, emb_std);
  b.constant("out_bias", {cfg.vocab_size}, 0.0f);
  b.normal("pos_emb", {cfg.max_positions, h}, emb_std);
  b.normal("lang_emb", {cfg.num_languages, h}, emb_std);
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    const auto n = enc_name(i);
    b.norm(n + ".ln1", h);
    for (const char* part : {".attn.q", ".attn.k", ".attn.v", ".attn.o"}) b.linear(n + part, h, h);
    b.norm(n + ".ln2", h);
    b.linear(n + ".ffn1", h, cfg.ffn);
    b.linear(n + ".ffn2", cfg.ffn, h);
  }
  b.norm("enc.ln", h);
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    const auto n = dec_name(i);
    b.norm(n + ".ln1", h);
    for (const char* part : {".self.q", ".self.k", ".self.v"}) b.linear(n + part, h, h);
    for (std::size_t l = 0; l < cfg.num_languages; ++l) {
      b.linear(n + ".self.o." + std::to_string(l), h, h);
    }
    b.norm(n + ".ln2", h);
    for (const char* part : {".cross.q", ".cross.k", ".cross.v"}) b.linear(n + part, h, h);
    for (std::size_t l = 0; l < cfg.num_languages; ++l) {
      b.linear(n + ".cross.o." + std::to_string(l), h, h);
    }
    b.norm(n + ".ln3", h);
    b.linear(n + ".ffn1", h, cfg.ffn);
    b.linear(n + ".ffn2", cfg.ffn, h);
  }
  b.norm("dec.ln", h);
  return store;
}

template <typename S>
Layout Layout::resolve(const ParamStore<S>& params, const ModelConfig& cfg) {
  auto lin = [&](const std::string& n) { return Linear{params.id(n + ".w"), params.id(n + ".b")}; };
  auto nrm = [&](const std::string& n) { return Norm{params.id(n + ".g"), params.id(n + ".b")}; };
  Layout L;
  L.tok_emb = params.id("tok_emb");
  L.out_bias = params.id("out_bias");
  L.pos_emb = params.id("pos_emb");
  L.lang_emb = params.id("lang_emb");
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    const auto n = enc_name(i);
    L.enc.push_back({nrm(n + ".ln1"), nrm(n + ".ln2"), lin(n + ".attn.q"), lin(n + ".attn.k"),
                     lin(n + ".attn.v"), lin(n + ".attn.o"), lin(n + ".ffn1"),
                     lin(n + ".ffn2")});
  }
  L.enc_ln = nrm("enc.ln");
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    const auto n = dec_name(i);
    DecoderLayer d;
    d.ln1 = nrm(n + ".ln1");
    d.ln2 = nrm(n + ".ln2");
    d.ln3 = nrm(n + ".ln3");
    d.self_q = lin(n + ".self.q");
    d.self_k = lin(n + ".self.k");
    d.self_v = lin(n + ".self.v");
    d.cross_q = lin(n + ".cross.q");
    d.cross_k = lin(n + ".cross.k");
    d.cross_v = lin(n + ".cross.v");
    for (std::size_t l = 0; l < cfg.num_languages; ++l) {
      d.self_o.push_back(lin(n + ".self.o." + std::to_string(l)));
      d.cross_o.push_back(lin(n + ".cross.o." + std::to_string(l)));
    }
    d.ffn1 = lin(n + ".ffn1");
    d.ffn2 = lin(n + ".ffn2");
    L.dec.push_back(std::move(d));
  }
  L.dec_ln = nrm("dec.ln");
  const auto& emb = params.value(L.tok_emb);
  if (emb.rank() != 2 || emb.dim(0) != cfg.vocab_size || emb.dim(1) != cfg.hidden) {
    fail(ErrorKind::Data, "parameters do not match model config (tok_emb " +
                              tensor::shape_str(emb.shape()) + ")");
  }
  return L;
}

template Layout Layout::resolve(const ParamStore<float>&, const ModelConfig&);
template Layout Layout::resolve(const ParamStore<double>&, const ModelConfig&);

namespace {

Batch pad_rows(const std::vector<std::vector<int>>& rows) {
  Batch b;
  b.batch = rows.size();
  for (const auto& r : rows) b.len = std::max(b.len, r.size());
  b.ids.assign(b.batch * b.len, tok::kPad);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), b.ids.begin() + static_cast<long>(i * b.len));
    b.lengths.push_back(rows[i].size());
  }
  return b;
}

}  // namespace

Batch source_batch(const std::vector<const tok::TokenSeq*>& seqs) {
  if (seqs.empty()) fail(ErrorKind::Data, "empty batch");
  std::vector<std::vector<int>> rows;
  rows.reserve(seqs.size());
  for (const auto* s : seqs) {
    auto r = s->ids;
    r.push_back(tok::kEos);
    rows.push_back(std::move(r));
  }
  return pad_rows(rows);
}

TeacherBatch teacher_batch(const std::vector<const tok::TokenSeq*>& seqs) {
  if (seqs.empty()) fail(ErrorKind::Data, "empty batch");
  std::vector<std::vector<int>> rows;
  std::vector<std::vector<int>> outs;
  for (const auto* s : seqs) {
    std::vector<int> in{tok::kBos};
    in.insert(in.end(), s->ids.begin(), s->ids.end());
    std::vector<int> out(s->ids.begin(), s->ids.end());
    out.push_back(tok::kEos);
    rows.push_back(std::move(in));
    outs.push_back(std::move(out));
  }
  TeacherBatch tb;
  tb.input = pad_rows(rows);
  tb.targets.assign(tb.input.batch * tb.input.len, -1);
  for (std::size_t i = 0; i < outs.size(); ++i) {
    std::copy(outs[i].begin(), outs[i].end(),
              tb.targets.begin() + static_cast<long>(i * tb.input.len));
  }
  return tb;
}

template <typename S>
Forward<S>::Forward(Graph<S>& graph, const ParamStore<S>& params, const ModelConfig& cfg)
    : g_(graph),
      params_(params),
      cfg_(cfg),
      layout_(Layout::resolve(params, cfg)),
      bound_(params.size()) {}

template <typename S>
Var Forward<S>::p(ParamId id) {
  if (!bound_[id].valid()) bound_[id] = g_.parameter(id, params_.value(id));
  return bound_[id];
}

template <typename S>
Var Forward<S>::linear(Var x, const Linear& l) {
  return tensor::add_bias(g_, tensor::matmul(g_, x, p(l.w)), p(l.b));
}

template <typename S>
Var Forward<S>::norm(Var x, const Norm& n) {
  return tensor::layer_norm(g_, x, p(n.gain), p(n.bias));
}

template <typename S>
void Forward<S>::check_batch(const Batch& b) const {
  if (b.len > cfg_.max_positions) {
    fail(ErrorKind::Data, "sequence length " + std::to_string(b.len) + " exceeds max_positions " +
                              std::to_string(cfg_.max_positions));
  }
  for (int id : b.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= cfg_.vocab_size) {
      fail(ErrorKind::Data, "token id " + std::to_string(id) + " outside vocabulary");
    }
  }
}

template <typename S>
Var Forward<S>::embed(const Batch& b, bool with_lang, int lang) {
  check_batch(b);
  std::vector<int> pos(b.batch * b.len);
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<int>(i % b.len);
  Var x = tensor::add(g_, tensor::embedding(g_, p(layout_.tok_emb), std::span<const int>(b.ids)),
                      tensor::embedding(g_, p(layout_.pos_emb), std::span<const int>(pos)));
  if (with_lang) {
    std::vector<int> langs(b.batch * b.len, lang);
    x = tensor::add(g_, x, tensor::embedding(g_, p(layout_.lang_emb), std::span<const int>(langs)));
  }
  return x;
}

template <typename S>
Var Forward<S>::encode(const Batch& src) {
  Var x = embed(src, false, 0);
  tensor::AttentionShape shape{src.batch, src.len, src.len, cfg_.heads, false, src.lengths};
  for (const auto& L : layout_.enc) {
    Var a = norm(x, L.ln1);
    Var att = tensor::attention(g_, linear(a, L.q), linear(a, L.k), linear(a, L.v), shape);
    x = tensor::add(g_, x, linear(att, L.o));
    Var f = norm(x, L.ln2);
    x = tensor::add(g_, x, linear(tensor::relu(g_, linear(f, L.ffn1)), L.ffn2));
  }
  return norm(x, layout_.enc_ln);
}

template <typename S>
Var Forward<S>::decode_logits(Var enc, const Batch& src, const Batch& tgt_in, int tgt_lang) {
  if (tgt_lang < 0 || static_cast<std::size_t>(tgt_lang) >= cfg_.num_languages) {
    fail(ErrorKind::Data, "unknown target language id " + std::to_string(tgt_lang));
  }
  if (tgt_in.batch != src.batch) fail(ErrorKind::Internal, "source/target batch mismatch");
  const auto lang = static_cast<std::size_t>(tgt_lang);
  Var x = embed(tgt_in, true, tgt_lang);
  tensor::AttentionShape self{tgt_in.batch, tgt_in.len, tgt_in.len, cfg_.heads, true,
                              tgt_in.lengths};
  tensor::AttentionShape cross{tgt_in.batch, tgt_in.len, src.len, cfg_.heads, false,
                               src.lengths};
  for (const auto& L : layout_.dec) {
    Var a = norm(x, L.ln1);
    Var att = tensor::attention(g_, linear(a, L.self_q), linear(a, L.self_k),
                                linear(a, L.self_v), self);
    x = tensor::add(g_, x, linear(att, L.self_o[lang]));
    Var c = norm(x, L.ln2);
    Var catt = tensor::attention(g_, linear(c, L.cross_q), linear(enc, L.cross_k),
                                 linear(enc, L.cross_v), cross);
    x = tensor::add(g_, x, linear(catt, L.cross_o[lang]));
    Var f = norm(x, L.ln3);
    x = tensor::add(g_, x, linear(tensor::relu(g_, linear(f, L.ffn1)), L.ffn2));
  }
  Var h = norm(x, layout_.dec_ln);
  return tensor::add_bias(g_, tensor::matmul_nt(g_, h, p(layout_.tok_emb)), p(layout_.out_bias));
}

template <typename S>
Var Forward<S>::seq2seq_loss(const std::vector<const tok::TokenSeq*>& srcs,
                             const std::vector<const tok::TokenSeq*>& tgts, int tgt_lang) {
  if (srcs.size() != tgts.size()) fail(ErrorKind::Internal, "source/target count mismatch");
  const Batch src = source_batch(srcs);
  const TeacherBatch tb = teacher_batch(tgts);
  Var enc = encode(src);
  Var logits = decode_logits(enc, src, tb.input, tgt_lang);
  return tensor::cross_entropy(g_, logits, std::span<const int>(tb.targets));
}

template class Forward<float>;
template class Forward<double>;

std::size_t decode_budget(const ModelConfig& cfg, std::size_t src_len) {
  return std::min(cfg.max_positions - 1, 2 * src_len + 8);
}

}  // namespace munmt::model
