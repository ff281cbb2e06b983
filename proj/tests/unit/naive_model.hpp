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

// Straight-line evaluation of the architecture for one unpadded pair, written
// without the tensor library. Test-only oracle.

#ifndef MUNMT_TESTS_NAIVE_MODEL_HPP
#define MUNMT_TESTS_NAIVE_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "model/model.hpp"

namespace munmt::testing {

using model::ModelConfig;
using tensor::ParamStore;
using tensor::Tensor;

using Mat = std::vector<std::vector<double>>;

struct Naive {
  const ParamStore<double>& p;
  const ModelConfig& cfg;

  const Tensor<double>& w(const std::string& n) const { return p[n]; }

  Mat linear(const Mat& x, const std::string& n) const {
    const auto& W = w(n + ".w");
    const auto& b = w(n + ".b");
    Mat out(x.size(), std::vector<double>(W.dim(1)));
    for (std::size_t r = 0; r < x.size(); ++r)
      for (std::size_t o = 0; o < W.dim(1); ++o) {
        double s = b[o];
        for (std::size_t i = 0; i < W.dim(0); ++i) s += x[r][i] * W.at(i, o);
        out[r][o] = s;
      }
    return out;
  }
  Mat norm(const Mat& x, const std::string& n) const {
    const auto& g = w(n + ".g");
    const auto& b = w(n + ".b");
    Mat out = x;
    for (std::size_t r = 0; r < x.size(); ++r) {
      double m = 0, v = 0;
      for (double e : x[r]) m += e;
      m /= x[r].size();
      for (double e : x[r]) v += (e - m) * (e - m);
      v /= x[r].size();
      for (std::size_t c = 0; c < x[r].size(); ++c) out[r][c] = (x[r][c] - m) / std::sqrt(v + 1e-5) * g[c] + b[c];
    }
    return out;
  }
  Mat attend(const Mat& q, const Mat& k, const Mat& v, bool causal) const {
    const std::size_t H = cfg.heads, dh = cfg.hidden / H;
    Mat out(q.size(), std::vector<double>(cfg.hidden, 0.0));
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t i = 0; i < q.size(); ++i) {
        const std::size_t n = causal ? i + 1 : k.size();
        std::vector<double> s(n);
        double mx = -1e300, tot = 0;
        for (std::size_t j = 0; j < n; ++j) {
          s[j] = 0;
          for (std::size_t c = 0; c < dh; ++c) s[j] += q[i][h * dh + c] * k[j][h * dh + c];
          s[j] /= std::sqrt(double(dh));
          mx = std::max(mx, s[j]);
        }
        for (auto& e : s) tot += (e = std::exp(e - mx));
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t c = 0; c < dh; ++c) out[i][h * dh + c] += s[j] / tot * v[j][h * dh + c];
      }
    return out;
  }
  static Mat plus(Mat a, const Mat& b) {
    for (std::size_t r = 0; r < a.size(); ++r)
      for (std::size_t c = 0; c < a[r].size(); ++c) a[r][c] += b[r][c];
    return a;
  }
  Mat ffn(const Mat& x, const std::string& n) const {
    Mat h = linear(x, n + ".ffn1");
    for (auto& r : h)
      for (auto& e : r) e = std::max(0.0, e);
    return linear(h, n + ".ffn2");
  }
  Mat embed(const std::vector<int>& ids, int lang) const {
    Mat x(ids.size(), std::vector<double>(cfg.hidden));
    for (std::size_t t = 0; t < ids.size(); ++t)
      for (std::size_t c = 0; c < cfg.hidden; ++c) {
        x[t][c] = w("tok_emb").at(ids[t], c) + w("pos_emb").at(t, c);
        if (lang >= 0) x[t][c] += w("lang_emb").at(lang, c);
      }
    return x;
  }
  Mat run(const std::vector<int>& src, const std::vector<int>& tgt_in, int lang) const {
    Mat x = embed(src, -1);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      const std::string n = "enc." + std::to_string(l);
      Mat a = norm(x, n + ".ln1");
      x = plus(x, linear(attend(linear(a, n + ".attn.q"), linear(a, n + ".attn.k"),
                                linear(a, n + ".attn.v"), false),
                         n + ".attn.o"));
      x = plus(x, ffn(norm(x, n + ".ln2"), n));
    }
    const Mat enc = norm(x, "enc.ln");
    Mat y = embed(tgt_in, lang);
    const std::string L = std::to_string(lang);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      const std::string n = "dec." + std::to_string(l);
      Mat a = norm(y, n + ".ln1");
      y = plus(y, linear(attend(linear(a, n + ".self.q"), linear(a, n + ".self.k"),
                                linear(a, n + ".self.v"), true),
                         n + ".self.o." + L));
      Mat c = norm(y, n + ".ln2");
      y = plus(y, linear(attend(linear(c, n + ".cross.q"), linear(enc, n + ".cross.k"),
                                linear(enc, n + ".cross.v"), false),
                         n + ".cross.o." + L));
      y = plus(y, ffn(norm(y, n + ".ln3"), n));
    }
    Mat h = norm(y, "dec.ln");
    const auto& E = w("tok_emb");
    Mat logits(h.size(), std::vector<double>(cfg.vocab_size));
    for (std::size_t t = 0; t < h.size(); ++t)
      for (std::size_t v = 0; v < cfg.vocab_size; ++v) {
        double s = w("out_bias")[v];
        for (std::size_t c = 0; c < cfg.hidden; ++c) s += h[t][c] * E.at(v, c);
        logits[t][v] = s;
      }
    return logits;
  }
};


// Mean per-token NLL of target given the logits rows, via log-softmax.
inline double naive_nll(const Mat& logits, const std::vector<int>& target) {
  double total = 0;
  for (std::size_t t = 0; t < target.size(); ++t) {
    double mx = *std::max_element(logits[t].begin(), logits[t].end());
    double z = 0;
    for (double v : logits[t]) z += std::exp(v - mx);
    total += -(logits[t][target[t]] - mx - std::log(z));
  }
  return total / static_cast<double>(target.size());
}

}  // namespace munmt::testing

#endif  // MUNMT_TESTS_NAIVE_MODEL_HPP
