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

#include "tensor/ops.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <string>

namespace munmt::tensor {

namespace {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MatMap = Eigen::Map<Mat<S>>;
template <typename S>
using CMatMap = Eigen::Map<const Mat<S>>;

template <typename S>
CMatMap<S> as_mat(const Tensor<S>& t) {
  return CMatMap<S>(t.data(), static_cast<Eigen::Index>(t.rows()),
                    static_cast<Eigen::Index>(t.cols()));
}

template <typename S>
MatMap<S> as_mat(Tensor<S>& t) {
  return MatMap<S>(t.data(), static_cast<Eigen::Index>(t.rows()),
                   static_cast<Eigen::Index>(t.cols()));
}

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) fail(ErrorKind::Internal, std::string(op) + ": " + detail);
}

template <typename S>
void require_same(const Tensor<S>& a, const Tensor<S>& b, const char* op) {
  require(a.shape() == b.shape(), op,
          "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace

template <typename S>
Var add(Graph<S>& g, Var a, Var b) {
  const auto& va = g.value(a);
  const auto& vb = g.value(b);
  require_same(va, vb, "add");
  Tensor<S> out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
  return g.emit(std::move(out), {a, b}, [a, b](Graph<S>& gr, const Tensor<S>& d) {
    gr.accumulate(a, d);
    gr.accumulate(b, d);
  });
}

template <typename S>
Var sub(Graph<S>& g, Var a, Var b) {
  const auto& va = g.value(a);
  const auto& vb = g.value(b);
  require_same(va, vb, "sub");
  Tensor<S> out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] - vb[i];
  return g.emit(std::move(out), {a, b}, [a, b](Graph<S>& gr, const Tensor<S>& d) {
    gr.accumulate(a, d);
    if (auto* gb = gr.grad_buffer(b)) {
      for (std::size_t i = 0; i < d.size(); ++i) (*gb)[i] -= d[i];
    }
  });
}

template <typename S>
Var mul(Graph<S>& g, Var a, Var b) {
  const auto& va = g.value(a);
  const auto& vb = g.value(b);
  require_same(va, vb, "mul");
  Tensor<S> out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
  return g.emit(std::move(out), {a, b}, [a, b](Graph<S>& gr, const Tensor<S>& d) {
    const auto& xa = gr.value(a);
    const auto& xb = gr.value(b);
    if (auto* ga = gr.grad_buffer(a)) {
      for (std::size_t i = 0; i < d.size(); ++i) (*ga)[i] += d[i] * xb[i];
    }
    if (auto* gb = gr.grad_buffer(b)) {
      for (std::size_t i = 0; i < d.size(); ++i) (*gb)[i] += d[i] * xa[i];
    }
  });
}

template <typename S>
Var scale(Graph<S>& g, Var a, S factor) {
  const auto& va = g.value(a);
  Tensor<S> out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * factor;
  return g.emit(std::move(out), {a}, [a, factor](Graph<S>& gr, const Tensor<S>& d) {
    if (auto* ga = gr.grad_buffer(a)) {
      for (std::size_t i = 0; i < d.size(); ++i) (*ga)[i] += d[i] * factor;
    }
  });
}

template <typename S>
Var add_bias(Graph<S>& g, Var x, Var bias) {
  const auto& vx = g.value(x);
  const auto& vb = g.value(bias);
  require(vb.size() == vx.cols(), "add_bias",
          "bias length " + std::to_string(vb.size()) + " vs cols " +
              std::to_string(vx.cols()));
  Tensor<S> out = vx;
  as_mat(out).rowwise() +=
      Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(vb.data(),
                                                            static_cast<Eigen::Index>(vb.size()));
  return g.emit(std::move(out), {x, bias}, [x, bias](Graph<S>& gr, const Tensor<S>& d) {
    gr.accumulate(x, d);
    if (auto* gb = gr.grad_buffer(bias)) {
      // Plain row loop: Eigen's column reduction order depends on the
      // buffer alignment, which would make results vary between runs.
      const std::size_t cols = gb->size();
      S* dst = gb->data();
      for (std::size_t r = 0, rows = d.rows(); r < rows; ++r) {
        const S* row = d.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) dst[c] += row[c];
      }
    }
  });
}

template <typename S>
Var matmul(Graph<S>& g, Var a, Var b) {
  const auto& va = g.value(a);
  const auto& vb = g.value(b);
  require(va.cols() == vb.rows(), "matmul",
          shape_str(va.shape()) + " x " + shape_str(vb.shape()));
  Tensor<S> out(Shape{va.rows(), vb.cols()});
  as_mat(out).noalias() = as_mat(va) * as_mat(vb);
  return g.emit(std::move(out), {a, b}, [a, b](Graph<S>& gr, const Tensor<S>& d) {
    if (auto* ga = gr.grad_buffer(a)) {
      as_mat(*ga).noalias() += as_mat(d) * as_mat(gr.value(b)).transpose();
    }
    if (auto* gb = gr.grad_buffer(b)) {
      as_mat(*gb).noalias() += as_mat(gr.value(a)).transpose() * as_mat(d);
    }
  });
}

template <typename S>
Var matmul_nt(Graph<S>& g, Var a, Var b) {
  const auto& va = g.value(a);
  const auto& vb = g.value(b);
  require(va.cols() == vb.cols(), "matmul_nt",
          shape_str(va.shape()) + " x " + shape_str(vb.shape()) + "^T");
  Tensor<S> out(Shape{va.rows(), vb.rows()});
  as_mat(out).noalias() = as_mat(va) * as_mat(vb).transpose();
  return g.emit(std::move(out), {a, b}, [a, b](Graph<S>& gr, const Tensor<S>& d) {
    if (auto* ga = gr.grad_buffer(a)) {
      as_mat(*ga).noalias() += as_mat(d) * as_mat(gr.value(b));
    }
    if (auto* gb = gr.grad_buffer(b)) {
      as_mat(*gb).noalias() += as_mat(d).transpose() * as_mat(gr.value(a));
    }
  });
}

template <typename S>
Var relu(Graph<S>& g, Var x) {
  const auto& vx = g.value(x);
  Tensor<S> out(vx.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = vx[i] > S(0) ? vx[i] : S(0);
  return g.emit(std::move(out), {x}, [x](Graph<S>& gr, const Tensor<S>& d) {
    const auto& in = gr.value(x);
    if (auto* gx = gr.grad_buffer(x)) {
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (in[i] > S(0)) (*gx)[i] += d[i];
      }
    }
  });
}

template <typename S>
Var layer_norm(Graph<S>& g, Var x, Var gain, Var bias, S eps) {
  const auto& vx = g.value(x);
  const auto& vg = g.value(gain);
  const auto& vb = g.value(bias);
  const std::size_t rows = vx.rows();
  const std::size_t cols = vx.cols();
  require(vg.size() == cols && vb.size() == cols, "layer_norm", "gain/bias length");
  Tensor<S> out(vx.shape());
  Tensor<S> xhat(vx.shape());
  std::vector<S> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const S* row = vx.data() + r * cols;
    S mean = 0;
    for (std::size_t c = 0; c < cols; ++c) mean += row[c];
    mean /= static_cast<S>(cols);
    S var = 0;
    for (std::size_t c = 0; c < cols; ++c) var += (row[c] - mean) * (row[c] - mean);
    var /= static_cast<S>(cols);
    const S inv = S(1) / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (std::size_t c = 0; c < cols; ++c) {
      const S h = (row[c] - mean) * inv;
      xhat[r * cols + c] = h;
      out[r * cols + c] = h * vg[c] + vb[c];
    }
  }
  return g.emit(
      std::move(out), {x, gain, bias},
      [x, gain, bias, rows, cols, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](Graph<S>& gr, const Tensor<S>& d) {
        const auto& vgain = gr.value(gain);
        if (auto* gg = gr.grad_buffer(gain)) {
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
              (*gg)[c] += d[r * cols + c] * xhat[r * cols + c];
            }
          }
        }
        if (auto* gb = gr.grad_buffer(bias)) {
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) (*gb)[c] += d[r * cols + c];
          }
        }
        if (auto* gx = gr.grad_buffer(x)) {
          std::vector<S> dxhat(cols);
          for (std::size_t r = 0; r < rows; ++r) {
            S mean_d = 0;
            S mean_dx = 0;
            for (std::size_t c = 0; c < cols; ++c) {
              dxhat[c] = d[r * cols + c] * vgain[c];
              mean_d += dxhat[c];
              mean_dx += dxhat[c] * xhat[r * cols + c];
            }
            mean_d /= static_cast<S>(cols);
            mean_dx /= static_cast<S>(cols);
            for (std::size_t c = 0; c < cols; ++c) {
              (*gx)[r * cols + c] +=
                  inv_std[r] * (dxhat[c] - mean_d - xhat[r * cols + c] * mean_dx);
            }
          }
        }
      });
}

template <typename S>
Var softmax(Graph<S>& g, Var x) {
  const auto& vx = g.value(x);
  const std::size_t rows = vx.rows();
  const std::size_t cols = vx.cols();
  Tensor<S> out(vx.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const S* in = vx.data() + r * cols;
    S* o = out.data() + r * cols;
    S mx = in[0];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, in[c]);
    S total = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      o[c] = std::exp(in[c] - mx);
      total += o[c];
    }
    for (std::size_t c = 0; c < cols; ++c) o[c] /= total;
  }
  Tensor<S> saved = out;
  return g.emit(std::move(out), {x},
                [x, rows, cols, y = std::move(saved)](Graph<S>& gr, const Tensor<S>& d) {
                  if (auto* gx = gr.grad_buffer(x)) {
                    for (std::size_t r = 0; r < rows; ++r) {
                      S dot = 0;
                      for (std::size_t c = 0; c < cols; ++c) {
                        dot += d[r * cols + c] * y[r * cols + c];
                      }
                      for (std::size_t c = 0; c < cols; ++c) {
                        (*gx)[r * cols + c] += y[r * cols + c] * (d[r * cols + c] - dot);
                      }
                    }
                  }
                });
}

template <typename S>
Var sum(Graph<S>& g, Var x) {
  const auto& vx = g.value(x);
  S total = 0;
  for (std::size_t i = 0; i < vx.size(); ++i) total += vx[i];
  return g.emit(Tensor<S>::scalar(total), {x}, [x](Graph<S>& gr, const Tensor<S>& d) {
    if (auto* gx = gr.grad_buffer(x)) {
      const S dv = d[0];
      for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += dv;
    }
  });
}

template <typename S>
Var embedding(Graph<S>& g, Var table, std::span<const int> ids) {
  const auto& vt = g.value(table);
  const std::size_t cols = vt.cols();
  const std::size_t rows = vt.rows();
  Tensor<S> out(Shape{ids.size(), cols});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    require(id >= 0 && static_cast<std::size_t>(id) < rows, "embedding",
            "id " + std::to_string(id) + " out of range " + std::to_string(rows));
    std::copy_n(vt.data() + static_cast<std::size_t>(id) * cols, cols,
                out.data() + i * cols);
  }
  std::vector<int> saved(ids.begin(), ids.end());
  return g.emit(std::move(out), {table},
                [table, cols, ids = std::move(saved)](Graph<S>& gr, const Tensor<S>& d) {
                  if (auto* gt = gr.grad_buffer(table)) {
                    for (std::size_t i = 0; i < ids.size(); ++i) {
                      S* dst = gt->data() + static_cast<std::size_t>(ids[i]) * cols;
                      const S* src = d.data() + i * cols;
                      for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
                    }
                  }
                });
}

template <typename S>
Var attention(Graph<S>& g, Var q, Var k, Var v, const AttentionShape& shape) {
  const auto& vq = g.value(q);
  const auto& vk = g.value(k);
  const auto& vv = g.value(v);
  const std::size_t B = shape.batch;
  const std::size_t Tq = shape.q_len;
  const std::size_t Tk = shape.k_len;
  const std::size_t H = shape.heads;
  const std::size_t D = vq.cols();
  require(H > 0 && D % H == 0, "attention", "width not divisible by heads");
  require(vq.rows() == B * Tq && vk.rows() == B * Tk && vv.rows() == B * Tk &&
              vk.cols() == D && vv.cols() == D,
          "attention", "q/k/v shapes inconsistent with batch layout");
  require(shape.key_lengths.size() == B, "attention", "key_lengths size");
  const std::size_t dh = D / H;
  const S sc = S(1) / std::sqrt(static_cast<S>(dh));

  auto visible = [&shape, Tk](std::size_t b, std::size_t i) {
    std::size_t n = std::min(shape.key_lengths[b], Tk);
    if (shape.causal) n = std::min(n, i + 1);
    return n;
  };

  Tensor<S> out(Shape{B * Tq, D});
  std::vector<S> probs(B * H * Tq * Tk, S(0));
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t i = 0; i < Tq; ++i) {
        const std::size_t n = visible(b, i);
        if (n == 0) continue;
        S* p = probs.data() + ((b * H + h) * Tq + i) * Tk;
        const S* qi = vq.data() + (b * Tq + i) * D + h * dh;
        S mx = -std::numeric_limits<S>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
          const S* kj = vk.data() + (b * Tk + j) * D + h * dh;
          S dot = 0;
          for (std::size_t c = 0; c < dh; ++c) dot += qi[c] * kj[c];
          p[j] = dot * sc;
          mx = std::max(mx, p[j]);
        }
        S total = 0;
        for (std::size_t j = 0; j < n; ++j) {
          p[j] = std::exp(p[j] - mx);
          total += p[j];
        }
        S* o = out.data() + (b * Tq + i) * D + h * dh;
        for (std::size_t j = 0; j < n; ++j) {
          p[j] /= total;
          const S* vj = vv.data() + (b * Tk + j) * D + h * dh;
          for (std::size_t c = 0; c < dh; ++c) o[c] += p[j] * vj[c];
        }
      }
    }
  }

  return g.emit(
      std::move(out), {q, k, v},
      [q, k, v, shape, B, Tq, Tk, H, D, dh, sc,
       probs = std::move(probs)](Graph<S>& gr, const Tensor<S>& d) {
        auto visible = [&shape, Tk](std::size_t b, std::size_t i) {
          std::size_t n = std::min(shape.key_lengths[b], Tk);
          if (shape.causal) n = std::min(n, i + 1);
          return n;
        };
        const auto& xq = gr.value(q);
        const auto& xk = gr.value(k);
        const auto& xv = gr.value(v);
        auto* gq = gr.grad_buffer(q);
        auto* gk = gr.grad_buffer(k);
        auto* gv = gr.grad_buffer(v);
        std::vector<S> dp(Tk);
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t h = 0; h < H; ++h) {
            for (std::size_t i = 0; i < Tq; ++i) {
              const std::size_t n = visible(b, i);
              if (n == 0) continue;
              const S* p = probs.data() + ((b * H + h) * Tq + i) * Tk;
              const S* di = d.data() + (b * Tq + i) * D + h * dh;
              S dot = 0;
              for (std::size_t j = 0; j < n; ++j) {
                const S* vj = xv.data() + (b * Tk + j) * D + h * dh;
                S acc = 0;
                for (std::size_t c = 0; c < dh; ++c) acc += di[c] * vj[c];
                dp[j] = acc;
                dot += acc * p[j];
                if (gv) {
                  S* gvj = gv->data() + (b * Tk + j) * D + h * dh;
                  for (std::size_t c = 0; c < dh; ++c) gvj[c] += p[j] * di[c];
                }
              }
              const S* qi = xq.data() + (b * Tq + i) * D + h * dh;
              S* gqi = gq ? gq->data() + (b * Tq + i) * D + h * dh : nullptr;
              for (std::size_t j = 0; j < n; ++j) {
                const S ds = p[j] * (dp[j] - dot) * sc;
                const S* kj = xk.data() + (b * Tk + j) * D + h * dh;
                if (gqi) {
                  for (std::size_t c = 0; c < dh; ++c) gqi[c] += ds * kj[c];
                }
                if (gk) {
                  S* gkj = gk->data() + (b * Tk + j) * D + h * dh;
                  for (std::size_t c = 0; c < dh; ++c) gkj[c] += ds * qi[c];
                }
              }
            }
          }
        }
      });
}

template <typename S>
Var cross_entropy(Graph<S>& g, Var logits, std::span<const int> targets) {
  const auto& vl = g.value(logits);
  const std::size_t rows = vl.rows();
  const std::size_t cols = vl.cols();
  require(targets.size() == rows, "cross_entropy", "target count mismatch");
  std::size_t counted = 0;
  for (int t : targets) {
    if (t < 0) continue;
    require(static_cast<std::size_t>(t) < cols, "cross_entropy", "target out of range");
    ++counted;
  }
  if (counted == 0) fail(ErrorKind::Data, "cross_entropy: empty target");
  Tensor<S> probs(vl.shape());
  S total = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] < 0) continue;
    const S* in = vl.data() + r * cols;
    S* p = probs.data() + r * cols;
    S mx = in[0];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, in[c]);
    S z = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      p[c] = std::exp(in[c] - mx);
      z += p[c];
    }
    for (std::size_t c = 0; c < cols; ++c) p[c] /= z;
    total += std::log(z) + mx - in[targets[r]];
  }
  const S inv_count = S(1) / static_cast<S>(counted);
  std::vector<int> saved(targets.begin(), targets.end());
  return g.emit(Tensor<S>::scalar(total * inv_count), {logits},
                [logits, rows, cols, inv_count, probs = std::move(probs),
                 targets = std::move(saved)](Graph<S>& gr, const Tensor<S>& d) {
                  auto* gl = gr.grad_buffer(logits);
                  if (!gl) return;
                  const S w = d[0] * inv_count;
                  for (std::size_t r = 0; r < rows; ++r) {
                    if (targets[r] < 0) continue;
                    S* dst = gl->data() + r * cols;
                    const S* p = probs.data() + r * cols;
                    for (std::size_t c = 0; c < cols; ++c) dst[c] += w * p[c];
                    dst[targets[r]] -= w;
                  }
                });
}

#define MUNMT_INSTANTIATE_OPS(S)                                              \
  template Var add<S>(Graph<S>&, Var, Var);                                  \
  template Var sub<S>(Graph<S>&, Var, Var);                                  \
  template Var mul<S>(Graph<S>&, Var, Var);                                  \
  template Var scale<S>(Graph<S>&, Var, S);                                  \
  template Var add_bias<S>(Graph<S>&, Var, Var);                             \
  template Var matmul<S>(Graph<S>&, Var, Var);                               \
  template Var matmul_nt<S>(Graph<S>&, Var, Var);                            \
  template Var relu<S>(Graph<S>&, Var);                                      \
  template Var layer_norm<S>(Graph<S>&, Var, Var, Var, S);                   \
  template Var softmax<S>(Graph<S>&, Var);                                   \
  template Var sum<S>(Graph<S>&, Var);                                       \
  template Var embedding<S>(Graph<S>&, Var, std::span<const int>);           \
  template Var attention<S>(Graph<S>&, Var, Var, Var, const AttentionShape&); \
  template Var cross_entropy<S>(Graph<S>&, Var, std::span<const int>);

MUNMT_INSTANTIATE_OPS(float)
MUNMT_INSTANTIATE_OPS(double)

#undef MUNMT_INSTANTIATE_OPS

}  // namespace munmt::tensor
