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

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

#include "common/error.hpp"
#include "model/model.hpp"

namespace munmt::model {

namespace {

using tensor::Tensor;

// Incremental decoder state for a batch of sources. Mirrors the arithmetic
// of Forward::decode_logits one position at a time.
template <typename S>
class Cached {
 public:
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;

  Cached(const ParamStore<S>& params, const ModelConfig& cfg,
         const std::vector<const tok::TokenSeq*>& srcs, int tgt_lang, std::size_t max_steps)
      : params_(params),
        cfg_(cfg),
        layout_(Layout::resolve(params, cfg)),
        lang_(static_cast<std::size_t>(tgt_lang)),
        max_steps_(max_steps) {
    if (tgt_lang < 0 || static_cast<std::size_t>(tgt_lang) >= cfg.num_languages) {
      fail(ErrorKind::Data, "unknown target language id " + std::to_string(tgt_lang));
    }
    const Batch src = source_batch(srcs);
    Graph<S> g(false);
    Forward<S> fwd(g, params, cfg);
    const Tensor<S>& enc = g.value(fwd.encode(src));
    batch_ = src.batch;
    src_len_ = src.len;
    src_lengths_ = src.lengths;
    const std::size_t h = cfg.hidden;
    Eigen::Map<const Mat> E(enc.data(), static_cast<long>(enc.rows()), static_cast<long>(h));
    for (const auto& L : layout_.dec) {
      cross_k_.push_back(apply(E, L.cross_k));
      cross_v_.push_back(apply(E, L.cross_v));
      self_k_.emplace_back(Mat::Zero(static_cast<long>(batch_ * max_steps_), static_cast<long>(h)));
      self_v_.emplace_back(Mat::Zero(static_cast<long>(batch_ * max_steps_), static_cast<long>(h)));
    }
  }

  std::size_t batch() const { return batch_; }

  // Feeds tokens[b] at position t (t < max_steps) and returns logits [batch, vocab].
  Mat step(const std::vector<int>& tokens, std::size_t t) {
    const long B = static_cast<long>(batch_);
    const long h = static_cast<long>(cfg_.hidden);
    if (t >= max_steps_ || t >= cfg_.max_positions) fail(ErrorKind::Internal, "decode step past budget");
    const auto& tok = params_.value(layout_.tok_emb);
    const auto& pos = params_.value(layout_.pos_emb);
    const auto& lemb = params_.value(layout_.lang_emb);
    Mat x(B, h);
    for (long b = 0; b < B; ++b) {
      const auto id = static_cast<std::size_t>(tokens[static_cast<std::size_t>(b)]);
      for (long c = 0; c < h; ++c) {
        const auto cc = static_cast<std::size_t>(c);
        x(b, c) = (tok.at(id, cc) + pos.at(t, cc)) + lemb.at(lang_, cc);
      }
    }
    for (std::size_t l = 0; l < layout_.dec.size(); ++l) {
      const auto& L = layout_.dec[l];
      Mat a = norm(x, L.ln1);
      Mat q = apply(a, L.self_q);
      Mat k = apply(a, L.self_k);
      Mat v = apply(a, L.self_v);
      for (long b = 0; b < B; ++b) {
        self_k_[l].row(b * static_cast<long>(max_steps_) + static_cast<long>(t)) = k.row(b);
        self_v_[l].row(b * static_cast<long>(max_steps_) + static_cast<long>(t)) = v.row(b);
      }
      Mat att(B, h);
      for (long b = 0; b < B; ++b) {
        attend(q.row(b), self_k_[l], self_v_[l], static_cast<std::size_t>(b) * max_steps_, t + 1,
               att.row(b));
      }
      x += apply(att, L.self_o[lang_]);
      Mat c = norm(x, L.ln2);
      Mat cq = apply(c, L.cross_q);
      Mat catt(B, h);
      for (long b = 0; b < B; ++b) {
        const auto bb = static_cast<std::size_t>(b);
        attend(cq.row(b), cross_k_[l], cross_v_[l], bb * src_len_,
               std::min(src_lengths_[bb], src_len_), catt.row(b));
      }
      x += apply(catt, L.cross_o[lang_]);
      Mat f = norm(x, L.ln3);
      Mat hid = apply(f, L.ffn1).cwiseMax(S(0));
      x += apply(hid, L.ffn2);
    }
    Mat fin = norm(x, layout_.dec_ln);
    Eigen::Map<const Mat> E(tok.data(), static_cast<long>(cfg_.vocab_size), h);
    const auto& ob = params_.value(layout_.out_bias);
    Eigen::Map<const RowVec> bias(ob.data(), static_cast<long>(cfg_.vocab_size));
    Mat logits = fin * E.transpose();
    logits.rowwise() += bias;
    return logits;
  }

 private:
  template <typename In>
  Mat apply(const In& x, const Linear& l) const {
    const auto& w = params_.value(l.w);
    const auto& bv = params_.value(l.b);
    Eigen::Map<const Mat> W(w.data(), static_cast<long>(w.dim(0)), static_cast<long>(w.dim(1)));
    Eigen::Map<const RowVec> bias(bv.data(), static_cast<long>(bv.size()));
    Mat out = x * W;
    out.rowwise() += bias;
    return out;
  }

  Mat norm(const Mat& x, const Norm& n) const {
    const auto& g = params_.value(n.gain);
    const auto& bb = params_.value(n.bias);
    const long cols = x.cols();
    Mat out(x.rows(), cols);
    const S eps = S(1e-5);
    for (long r = 0; r < x.rows(); ++r) {
      S mean = 0;
      for (long c = 0; c < cols; ++c) mean += x(r, c);
      mean /= static_cast<S>(cols);
      S var = 0;
      for (long c = 0; c < cols; ++c) var += (x(r, c) - mean) * (x(r, c) - mean);
      var /= static_cast<S>(cols);
      const S inv = S(1) / std::sqrt(var + eps);
      for (long c = 0; c < cols; ++c) {
        const auto cc = static_cast<std::size_t>(c);
        out(r, c) = (x(r, c) - mean) * inv * g[cc] + bb[cc];
      }
    }
    return out;
  }

  // One query row against keys/values rows [offset, offset + n).
  template <typename Q, typename O>
  void attend(const Q& q, const Mat& K, const Mat& V, std::size_t offset, std::size_t n,
              O&& out) const {
    const std::size_t H = cfg_.heads;
    const std::size_t dh = cfg_.hidden / H;
    const S sc = S(1) / std::sqrt(static_cast<S>(dh));
    out.setZero();
    if (n == 0) return;
    std::vector<S> p(n);
    for (std::size_t hd = 0; hd < H; ++hd) {
      S mx = -std::numeric_limits<S>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        S dot = 0;
        for (std::size_t c = 0; c < dh; ++c) {
          dot += q(static_cast<long>(hd * dh + c)) *
                 K(static_cast<long>(offset + j), static_cast<long>(hd * dh + c));
        }
        p[j] = dot * sc;
        mx = std::max(mx, p[j]);
      }
      S total = 0;
      for (std::size_t j = 0; j < n; ++j) {
        p[j] = std::exp(p[j] - mx);
        total += p[j];
      }
      for (std::size_t j = 0; j < n; ++j) {
        p[j] /= total;
        for (std::size_t c = 0; c < dh; ++c) {
          out(static_cast<long>(hd * dh + c)) +=
              p[j] * V(static_cast<long>(offset + j), static_cast<long>(hd * dh + c));
        }
      }
    }
  }

  const ParamStore<S>& params_;
  const ModelConfig& cfg_;
  Layout layout_;
  std::size_t lang_;
  std::size_t max_steps_;
  std::size_t batch_ = 0;
  std::size_t src_len_ = 0;
  std::vector<std::size_t> src_lengths_;
  std::vector<Mat> cross_k_, cross_v_, self_k_, self_v_;
};

}  // namespace

template <typename S>
std::vector<Decoded> greedy_decode(const ParamStore<S>& params, const ModelConfig& cfg,
                                   const std::vector<const tok::TokenSeq*>& srcs,
                                   int tgt_lang, const std::vector<std::size_t>& max_lens) {
  if (srcs.empty()) return {};
  if (max_lens.size() != srcs.size()) fail(ErrorKind::Internal, "greedy_decode: max_lens size");
  std::vector<std::size_t> limits(max_lens);
  std::size_t steps = 0;
  for (auto& m : limits) {
    if (m < 1) fail(ErrorKind::Internal, "greedy_decode: max_len must be >= 1");
    m = std::min(m, cfg.max_positions);
    steps = std::max(steps, m);
  }
  Cached<S> dec(params, cfg, srcs, tgt_lang, steps);
  const std::size_t B = srcs.size();
  std::vector<Decoded> out(B);
  for (auto& d : out) d.body.lang = tgt_lang;
  std::vector<bool> done(B, false);
  std::vector<int> cur(B, tok::kBos);
  std::size_t remaining = B;
  for (std::size_t t = 0; t < steps && remaining > 0; ++t) {
    const auto logits = dec.step(cur, t);
    for (std::size_t b = 0; b < B; ++b) {
      if (done[b]) continue;
      const auto row = static_cast<long>(b);
      int best = 0;
      S best_v = logits(row, 0);
      for (long c = 1; c < logits.cols(); ++c) {
        if (logits(row, c) > best_v) {
          best_v = logits(row, c);
          best = static_cast<int>(c);
        }
      }
      if (best == tok::kEos) {
        out[b].finished = true;
      } else {
        out[b].body.ids.push_back(best);
      }
      cur[b] = best;
      if (out[b].finished || out[b].body.ids.size() >= limits[b]) {
        done[b] = true;
        --remaining;
      }
    }
  }
  return out;
}

template <typename S>
std::vector<std::vector<S>> incremental_logits(const ParamStore<S>& params,
                                               const ModelConfig& cfg,
                                               const tok::TokenSeq& src,
                                               const tok::TokenSeq& prefix, int tgt_lang) {
  const std::size_t steps = prefix.size() + 1;
  Cached<S> dec(params, cfg, {&src}, tgt_lang, steps);
  std::vector<std::vector<S>> out;
  for (std::size_t t = 0; t < steps; ++t) {
    const int token = t == 0 ? tok::kBos : prefix.ids[t - 1];
    const auto logits = dec.step({token}, t);
    out.emplace_back(logits.data(), logits.data() + logits.cols());
  }
  return out;
}

template std::vector<Decoded> greedy_decode(const ParamStore<float>&, const ModelConfig&,
                                            const std::vector<const tok::TokenSeq*>&, int,
                                            const std::vector<std::size_t>&);
template std::vector<Decoded> greedy_decode(const ParamStore<double>&, const ModelConfig&,
                                            const std::vector<const tok::TokenSeq*>&, int,
                                            const std::vector<std::size_t>&);
template std::vector<std::vector<float>> incremental_logits(const ParamStore<float>&,
                                                            const ModelConfig&,
                                                            const tok::TokenSeq&,
                                                            const tok::TokenSeq&, int);
template std::vector<std::vector<double>> incremental_logits(const ParamStore<double>&,
                                                             const ModelConfig&,
                                                             const tok::TokenSeq&,
                                                             const tok::TokenSeq&, int);

}  // namespace munmt::model
