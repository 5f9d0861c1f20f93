// SPDX-License-Identifier: Apache-2.0
#pragma once

// Reverse-mode automatic differentiation over dense tensors.
//
// A Tape owns a growing list of nodes; every op appends a node whose inputs
// are earlier nodes, so creation order is already a topological order and
// backward() is a single reverse sweep visiting each node once. Gradients
// accumulate by summation, which makes DAGs with shared subexpressions work
// without special casing.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "groklab/common.hpp"
#include "groklab/gemm.hpp"
#include "groklab/tensor.hpp"

namespace groklab {

template <typename T>
class Tape {
 public:
  using Id = int32_t;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// When set, every op output is scanned and a NumericError names the op
  /// that produced the first non-finite value.
  bool check_finite_outputs = true;

  Id leaf(Tensor<T> value, bool requires_grad) {
    return push(std::move(value), requires_grad, "leaf", {}, nullptr);
  }

  const Tensor<T>& value(Id id) const { return nodes_[id].value; }
  const Tensor<T>& grad(Id id) const { return nodes_[id].grad; }
  bool requires_grad(Id id) const { return nodes_[id].requires_grad; }
  size_t size() const { return nodes_.size(); }

  // ---------------------------------------------------------------- matmul
  Id matmul(Id a, Id b) {
    const Tensor<T>& av = val(a);
    const Tensor<T>& bv = val(b);
    if (av.ndim() != 2 || bv.ndim() != 2 || av.shape[1] != bv.shape[0]) {
      throw ShapeError("matmul: incompatible shapes " + shape_str(av.shape) +
                       " x " + shape_str(bv.shape));
    }
    int m = av.shape[0], k = av.shape[1], n = bv.shape[1];
    Tensor<T> out = Tensor<T>::zeros({m, n});
    detail::gemm_nn(m, n, k, T(1), av.data.data(), bv.data.data(), T(0),
                    out.data.data());
    return push(std::move(out), any_grad({a, b}), "matmul", {a, b},
                [this, a, b, m, k, n](const Tensor<T>& g) {
                  if (wants(a)) {
                    detail::gemm_nt(m, k, n, T(1), g.data.data(),
                                    val(b).data.data(), T(1),
                                    grad_buf(a).data.data());
                  }
                  if (wants(b)) {
                    detail::gemm_tn(k, n, m, T(1), val(a).data.data(),
                                    g.data.data(), T(1),
                                    grad_buf(b).data.data());
                  }
                });
  }

  // ------------------------------------------------------------- pointwise
  Id add(Id a, Id b) {
    const Tensor<T>& av = val(a);
    const Tensor<T>& bv = val(b);
    if (!av.same_shape(bv)) throw ShapeError("add: shape mismatch");
    Tensor<T> out = av;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
    return push(std::move(out), any_grad({a, b}), "add", {a, b},
                [this, a, b](const Tensor<T>& g) {
                  if (wants(a)) axpy(grad_buf(a), g, T(1));
                  if (wants(b)) axpy(grad_buf(b), g, T(1));
                });
  }

  Id sub(Id a, Id b) {
    const Tensor<T>& av = val(a);
    const Tensor<T>& bv = val(b);
    if (!av.same_shape(bv)) throw ShapeError("sub: shape mismatch");
    Tensor<T> out = av;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= bv.data[i];
    return push(std::move(out), any_grad({a, b}), "sub", {a, b},
                [this, a, b](const Tensor<T>& g) {
                  if (wants(a)) axpy(grad_buf(a), g, T(1));
                  if (wants(b)) axpy(grad_buf(b), g, T(-1));
                });
  }

  Id mul(Id a, Id b) {
    const Tensor<T>& av = val(a);
    const Tensor<T>& bv = val(b);
    if (!av.same_shape(bv)) throw ShapeError("mul: shape mismatch");
    Tensor<T> out = av;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv.data[i];
    return push(std::move(out), any_grad({a, b}), "mul", {a, b},
                [this, a, b](const Tensor<T>& g) {
                  if (wants(a)) {
                    Tensor<T>& ga = grad_buf(a);
                    const Tensor<T>& bv2 = val(b);
                    for (size_t i = 0; i < g.data.size(); ++i)
                      ga.data[i] += g.data[i] * bv2.data[i];
                  }
                  if (wants(b)) {
                    Tensor<T>& gb = grad_buf(b);
                    const Tensor<T>& av2 = val(a);
                    for (size_t i = 0; i < g.data.size(); ++i)
                      gb.data[i] += g.data[i] * av2.data[i];
                  }
                });
  }

  Id scale(Id a, T c) {
    Tensor<T> out = val(a);
    for (T& v : out.data) v *= c;
    return push(std::move(out), any_grad({a}), "scale", {a},
                [this, a, c](const Tensor<T>& g) {
                  if (wants(a)) axpy(grad_buf(a), g, c);
                });
  }

  Id relu(Id a) {
    Tensor<T> out = val(a);
    for (T& v : out.data) v = v > T(0) ? v : T(0);
    Id out_id = push(std::move(out), any_grad({a}), "relu", {a}, nullptr);
    nodes_[out_id].backward = [this, a, out_id](const Tensor<T>& g) {
      if (!wants(a)) return;
      Tensor<T>& ga = grad_buf(a);
      const Tensor<T>& ov = val(out_id);
      for (size_t i = 0; i < g.data.size(); ++i)
        if (ov.data[i] > T(0)) ga.data[i] += g.data[i];
    };
    return out_id;
  }

  Id sum(Id a) {
    T s = T(0);
    for (T v : val(a).data) s += v;
    return push(Tensor<T>({1}, {s}), any_grad({a}), "sum", {a},
                [this, a](const Tensor<T>& g) {
                  if (!wants(a)) return;
                  Tensor<T>& ga = grad_buf(a);
                  for (T& v : ga.data) v += g.data[0];
                });
  }

  // ------------------------------------------------------ row-wise helpers

  /// out[i] = a[i] + b[i % cycle_rows]. Used for adding the positional table
  /// (seq_len x d) to a (batch*seq_len x d) activation.
  Id add_rows_cycle(Id a, Id b) {
    const Tensor<T>& av = val(a);
    const Tensor<T>& bv = val(b);
    int cyc = bv.shape[0], d = bv.cols();
    if (av.cols() != d || av.shape[0] % cyc != 0) {
      throw ShapeError("add_rows_cycle: shape mismatch");
    }
    Tensor<T> out = av;
    int m = av.shape[0];
    for (int i = 0; i < m; ++i) {
      const T* src = &bv.data[static_cast<size_t>(i % cyc) * d];
      T* dst = &out.data[static_cast<size_t>(i) * d];
      for (int j = 0; j < d; ++j) dst[j] += src[j];
    }
    return push(std::move(out), any_grad({a, b}), "add_rows_cycle", {a, b},
                [this, a, b, cyc, d, m](const Tensor<T>& g) {
                  if (wants(a)) axpy(grad_buf(a), g, T(1));
                  if (wants(b)) {
                    Tensor<T>& gb = grad_buf(b);
                    for (int i = 0; i < m; ++i) {
                      const T* src = &g.data[static_cast<size_t>(i) * d];
                      T* dst = &gb.data[static_cast<size_t>(i % cyc) * d];
                      for (int j = 0; j < d; ++j) dst[j] += src[j];
                    }
                  }
                });
  }

  /// Bias broadcast over rows: out[i][j] = a[i][j] + b[j].
  Id add_bias(Id a, Id b) {
    const Tensor<T>& av = val(a);
    const Tensor<T>& bv = val(b);
    int n = av.cols();
    if (bv.numel() != n) throw ShapeError("add_bias: bias length mismatch");
    Tensor<T> out = av;
    int m = av.shape[0];
    for (int i = 0; i < m; ++i) {
      T* dst = &out.data[static_cast<size_t>(i) * n];
      for (int j = 0; j < n; ++j) dst[j] += bv.data[j];
    }
    return push(std::move(out), any_grad({a, b}), "add_bias", {a, b},
                [this, a, b, m, n](const Tensor<T>& g) {
                  if (wants(a)) axpy(grad_buf(a), g, T(1));
                  if (wants(b)) {
                    Tensor<T>& gb = grad_buf(b);
                    for (int i = 0; i < m; ++i) {
                      const T* src = &g.data[static_cast<size_t>(i) * n];
                      for (int j = 0; j < n; ++j) gb.data[j] += src[j];
                    }
                  }
                });
  }

  /// Embedding lookup: out[i] = table[indices[i]]. Backward scatter-adds,
  /// so repeated indices accumulate.
  Id gather_rows(Id table, std::vector<int> indices) {
    const Tensor<T>& tv = val(table);
    int v = tv.shape[0], d = tv.cols();
    for (int ix : indices) {
      if (ix < 0 || ix >= v) {
        throw IndexError("gather_rows: index " + std::to_string(ix) +
                         " out of range [0," + std::to_string(v) + ")");
      }
    }
    int m = static_cast<int>(indices.size());
    Tensor<T> out = Tensor<T>::zeros({m, d});
    for (int i = 0; i < m; ++i) {
      const T* src = &tv.data[static_cast<size_t>(indices[i]) * d];
      std::copy(src, src + d, &out.data[static_cast<size_t>(i) * d]);
    }
    return push(std::move(out), any_grad({table}), "gather_rows", {table},
                [this, table, idx = std::move(indices), d](const Tensor<T>& g) {
                  if (!wants(table)) return;
                  Tensor<T>& gt = grad_buf(table);
                  for (size_t i = 0; i < idx.size(); ++i) {
                    const T* src = &g.data[i * d];
                    T* dst = &gt.data[static_cast<size_t>(idx[i]) * d];
                    for (int j = 0; j < d; ++j) dst[j] += src[j];
                  }
                });
  }

  /// Rows offset, offset+stride, offset+2*stride, ... of a.
  Id take_every(Id a, int offset, int stride) {
    const Tensor<T>& av = val(a);
    int m = av.shape[0], d = av.cols();
    if (offset < 0 || offset >= stride || m % stride != 0) {
      throw ShapeError("take_every: bad offset/stride");
    }
    int out_rows = m / stride;
    Tensor<T> out = Tensor<T>::zeros({out_rows, d});
    for (int i = 0; i < out_rows; ++i) {
      const T* src = &av.data[static_cast<size_t>(i * stride + offset) * d];
      std::copy(src, src + d, &out.data[static_cast<size_t>(i) * d]);
    }
    return push(std::move(out), any_grad({a}), "take_every", {a},
                [this, a, offset, stride, out_rows, d](const Tensor<T>& g) {
                  if (!wants(a)) return;
                  Tensor<T>& ga = grad_buf(a);
                  for (int i = 0; i < out_rows; ++i) {
                    const T* src = &g.data[static_cast<size_t>(i) * d];
                    T* dst =
                        &ga.data[static_cast<size_t>(i * stride + offset) * d];
                    for (int j = 0; j < d; ++j) dst[j] += src[j];
                  }
                });
  }

  Id concat_cols(const std::vector<Id>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: empty input");
    int m = val(parts[0]).shape[0];
    int total = 0;
    std::vector<int> widths;
    for (Id p : parts) {
      if (val(p).shape[0] != m) throw ShapeError("concat_cols: row mismatch");
      widths.push_back(val(p).cols());
      total += widths.back();
    }
    Tensor<T> out = Tensor<T>::zeros({m, total});
    int col = 0;
    for (size_t pi = 0; pi < parts.size(); ++pi) {
      const Tensor<T>& pv = val(parts[pi]);
      int w = widths[pi];
      for (int i = 0; i < m; ++i) {
        std::copy(&pv.data[static_cast<size_t>(i) * w],
                  &pv.data[static_cast<size_t>(i) * w] + w,
                  &out.data[static_cast<size_t>(i) * total + col]);
      }
      col += w;
    }
    return push(std::move(out), any_grad(parts), "concat_cols", parts,
                [this, parts, widths, m, total](const Tensor<T>& g) {
                  int col = 0;
                  for (size_t pi = 0; pi < parts.size(); ++pi) {
                    int w = widths[pi];
                    if (wants(parts[pi])) {
                      Tensor<T>& gp = grad_buf(parts[pi]);
                      for (int i = 0; i < m; ++i) {
                        const T* src =
                            &g.data[static_cast<size_t>(i) * total + col];
                        T* dst = &gp.data[static_cast<size_t>(i) * w];
                        for (int j = 0; j < w; ++j) dst[j] += src[j];
                      }
                    }
                    col += w;
                  }
                });
  }

  // ---------------------------------------------------------- normalizers

  /// Row-wise x / max(||x||_2, eps). Rows with norm below eps pass through
  /// scaled by 1/eps (zero stays zero), with a matching pass-through
  /// gradient on that branch.
  Id l2_normalize_rows(Id a, T eps = T(1e-12)) {
    const Tensor<T>& av = val(a);
    int m = av.shape[0], d = av.cols();
    Tensor<T> out = Tensor<T>::zeros({m, d});
    std::vector<T> inv_norm(m);
    std::vector<uint8_t> small(m);
    for (int i = 0; i < m; ++i) {
      const T* x = &av.data[static_cast<size_t>(i) * d];
      T ss = T(0);
      for (int j = 0; j < d; ++j) ss += x[j] * x[j];
      T r = std::sqrt(ss);
      small[i] = r <= eps;
      T denom = small[i] ? eps : r;
      inv_norm[i] = T(1) / denom;
      T* y = &out.data[static_cast<size_t>(i) * d];
      for (int j = 0; j < d; ++j) y[j] = x[j] * inv_norm[i];
    }
    Id out_id = push(std::move(out), any_grad({a}), "l2_normalize_rows", {a},
                     nullptr);
    nodes_[out_id].backward = [this, a, out_id, inv = std::move(inv_norm),
                               sm = std::move(small), m,
                               d](const Tensor<T>& g) {
      if (!wants(a)) return;
      Tensor<T>& ga = grad_buf(a);
      const Tensor<T>& yv = val(out_id);
      for (int i = 0; i < m; ++i) {
        const T* gy = &g.data[static_cast<size_t>(i) * d];
        T* gx = &ga.data[static_cast<size_t>(i) * d];
        if (sm[i]) {
          for (int j = 0; j < d; ++j) gx[j] += gy[j] * inv[i];
          continue;
        }
        const T* y = &yv.data[static_cast<size_t>(i) * d];
        T dot = T(0);
        for (int j = 0; j < d; ++j) dot += y[j] * gy[j];
        for (int j = 0; j < d; ++j) gx[j] += (gy[j] - y[j] * dot) * inv[i];
      }
    };
    return out_id;
  }

  /// Column-wise variant, for normalizing unembedding class vectors.
  Id l2_normalize_cols(Id a, T eps = T(1e-12)) {
    const Tensor<T>& av = val(a);
    int m = av.shape[0], n = av.cols();
    Tensor<T> out = av;
    std::vector<T> inv_norm(n);
    std::vector<uint8_t> small(n);
    for (int j = 0; j < n; ++j) {
      T ss = T(0);
      for (int i = 0; i < m; ++i) ss += av(i, j) * av(i, j);
      T r = std::sqrt(ss);
      small[j] = r <= eps;
      inv_norm[j] = T(1) / (small[j] ? eps : r);
      for (int i = 0; i < m; ++i) out(i, j) = av(i, j) * inv_norm[j];
    }
    Id out_id =
        push(std::move(out), any_grad({a}), "l2_normalize_cols", {a}, nullptr);
    nodes_[out_id].backward = [this, a, out_id, inv = std::move(inv_norm),
                               sm = std::move(small), m,
                               n](const Tensor<T>& g) {
      if (!wants(a)) return;
      Tensor<T>& ga = grad_buf(a);
      const Tensor<T>& yv = val(out_id);
      for (int j = 0; j < n; ++j) {
        if (sm[j]) {
          for (int i = 0; i < m; ++i) ga(i, j) += g(i, j) * inv[j];
          continue;
        }
        T dot = T(0);
        for (int i = 0; i < m; ++i) dot += yv(i, j) * g(i, j);
        for (int i = 0; i < m; ++i)
          ga(i, j) += (g(i, j) - yv(i, j) * dot) * inv[j];
      }
    };
    return out_id;
  }

  /// Row-wise LayerNorm with affine parameters.
  Id layer_norm_rows(Id a, Id gamma, Id beta, T eps = T(1e-5)) {
    const Tensor<T>& av = val(a);
    int m = av.shape[0], d = av.cols();
    if (val(gamma).numel() != d || val(beta).numel() != d) {
      throw ShapeError("layer_norm_rows: affine parameter length mismatch");
    }
    Tensor<T> out = Tensor<T>::zeros({m, d});
    Tensor<T> xhat = Tensor<T>::zeros({m, d});
    std::vector<T> inv_std(m);
    const Tensor<T>& gv = val(gamma);
    const Tensor<T>& bv = val(beta);
    for (int i = 0; i < m; ++i) {
      const T* x = &av.data[static_cast<size_t>(i) * d];
      T mean = T(0);
      for (int j = 0; j < d; ++j) mean += x[j];
      mean /= T(d);
      T var = T(0);
      for (int j = 0; j < d; ++j) var += (x[j] - mean) * (x[j] - mean);
      var /= T(d);
      inv_std[i] = T(1) / std::sqrt(var + eps);
      T* xh = &xhat.data[static_cast<size_t>(i) * d];
      T* y = &out.data[static_cast<size_t>(i) * d];
      for (int j = 0; j < d; ++j) {
        xh[j] = (x[j] - mean) * inv_std[i];
        y[j] = xh[j] * gv.data[j] + bv.data[j];
      }
    }
    return push(
        std::move(out), any_grad({a, gamma, beta}), "layer_norm_rows",
        {a, gamma, beta},
        [this, a, gamma, beta, xh = std::move(xhat), inv = std::move(inv_std),
         m, d](const Tensor<T>& g) {
          const Tensor<T>& gv = val(gamma);
          for (int i = 0; i < m; ++i) {
            const T* gy = &g.data[static_cast<size_t>(i) * d];
            const T* x_hat = &xh.data[static_cast<size_t>(i) * d];
            if (wants(gamma)) {
              Tensor<T>& gg = grad_buf(gamma);
              for (int j = 0; j < d; ++j) gg.data[j] += gy[j] * x_hat[j];
            }
            if (wants(beta)) {
              Tensor<T>& gb = grad_buf(beta);
              for (int j = 0; j < d; ++j) gb.data[j] += gy[j];
            }
            if (wants(a)) {
              T mean_dyh = T(0), mean_dyh_xhat = T(0);
              // dyh = gy * gamma
              for (int j = 0; j < d; ++j) {
                T dyh = gy[j] * gv.data[j];
                mean_dyh += dyh;
                mean_dyh_xhat += dyh * x_hat[j];
              }
              mean_dyh /= T(d);
              mean_dyh_xhat /= T(d);
              Tensor<T>& ga = grad_buf(a);
              T* gx = &ga.data[static_cast<size_t>(i) * d];
              for (int j = 0; j < d; ++j) {
                T dyh = gy[j] * gv.data[j];
                gx[j] += (dyh - mean_dyh - x_hat[j] * mean_dyh_xhat) * inv[i];
              }
            }
          }
        });
  }

  /// Row-wise RMSNorm with scale parameter.
  Id rms_norm_rows(Id a, Id gamma, T eps = T(1e-5)) {
    const Tensor<T>& av = val(a);
    int m = av.shape[0], d = av.cols();
    if (val(gamma).numel() != d) {
      throw ShapeError("rms_norm_rows: gamma length mismatch");
    }
    Tensor<T> out = Tensor<T>::zeros({m, d});
    std::vector<T> inv_rms(m);
    const Tensor<T>& gv = val(gamma);
    for (int i = 0; i < m; ++i) {
      const T* x = &av.data[static_cast<size_t>(i) * d];
      T ms = T(0);
      for (int j = 0; j < d; ++j) ms += x[j] * x[j];
      ms /= T(d);
      inv_rms[i] = T(1) / std::sqrt(ms + eps);
      T* y = &out.data[static_cast<size_t>(i) * d];
      for (int j = 0; j < d; ++j) y[j] = x[j] * inv_rms[i] * gv.data[j];
    }
    return push(
        std::move(out), any_grad({a, gamma}), "rms_norm_rows", {a, gamma},
        [this, a, gamma, inv = std::move(inv_rms), m, d](const Tensor<T>& g) {
          const Tensor<T>& av2 = val(a);
          const Tensor<T>& gv = val(gamma);
          for (int i = 0; i < m; ++i) {
            const T* gy = &g.data[static_cast<size_t>(i) * d];
            const T* x = &av2.data[static_cast<size_t>(i) * d];
            if (wants(gamma)) {
              Tensor<T>& gg = grad_buf(gamma);
              for (int j = 0; j < d; ++j) gg.data[j] += gy[j] * x[j] * inv[i];
            }
            if (wants(a)) {
              T dot = T(0);
              for (int j = 0; j < d; ++j) dot += gy[j] * gv.data[j] * x[j];
              T c = dot * inv[i] * inv[i] * inv[i] / T(d);
              Tensor<T>& ga = grad_buf(a);
              T* gx = &ga.data[static_cast<size_t>(i) * d];
              for (int j = 0; j < d; ++j)
                gx[j] += gy[j] * gv.data[j] * inv[i] - x[j] * c;
            }
          }
        });
  }

  /// Row-wise softmax with max-subtraction.
  Id softmax_rows(Id a) {
    const Tensor<T>& av = val(a);
    int m = av.shape[0], d = av.cols();
    Tensor<T> out = Tensor<T>::zeros({m, d});
    for (int i = 0; i < m; ++i) {
      const T* x = &av.data[static_cast<size_t>(i) * d];
      T* y = &out.data[static_cast<size_t>(i) * d];
      T mx = x[0];
      for (int j = 1; j < d; ++j) mx = std::max(mx, x[j]);
      T s = T(0);
      for (int j = 0; j < d; ++j) {
        y[j] = std::exp(x[j] - mx);
        s += y[j];
      }
      for (int j = 0; j < d; ++j) y[j] /= s;
    }
    Id out_id = push(std::move(out), any_grad({a}), "softmax_rows", {a},
                     nullptr);
    nodes_[out_id].backward = [this, a, out_id, m, d](const Tensor<T>& g) {
      if (!wants(a)) return;
      Tensor<T>& ga = grad_buf(a);
      const Tensor<T>& yv = val(out_id);
      for (int i = 0; i < m; ++i) {
        const T* y = &yv.data[static_cast<size_t>(i) * d];
        const T* gy = &g.data[static_cast<size_t>(i) * d];
        T dot = T(0);
        for (int j = 0; j < d; ++j) dot += y[j] * gy[j];
        T* gx = &ga.data[static_cast<size_t>(i) * d];
        for (int j = 0; j < d; ++j) gx[j] += y[j] * (gy[j] - dot);
      }
    };
    return out_id;
  }

  // ------------------------------------------------------------- attention

  /// Grouped dot products for single-query attention: q is (B x dh), k is
  /// (B*s x dh) with the s key rows of example b contiguous. Output (B x s),
  /// out[b][t] = scale * <q[b], k[b*s+t]>.
  Id attn_scores(Id q, Id k, int s, T scale) {
    const Tensor<T>& qv = val(q);
    const Tensor<T>& kv = val(k);
    int batch = qv.shape[0], dh = qv.cols();
    if (kv.shape[0] != batch * s || kv.cols() != dh) {
      throw ShapeError("attn_scores: shape mismatch");
    }
    Tensor<T> out = Tensor<T>::zeros({batch, s});
    for (int b = 0; b < batch; ++b) {
      const T* qb = &qv.data[static_cast<size_t>(b) * dh];
      for (int t = 0; t < s; ++t) {
        const T* kt = &kv.data[static_cast<size_t>(b * s + t) * dh];
        T dot = T(0);
        for (int j = 0; j < dh; ++j) dot += qb[j] * kt[j];
        out(b, t) = dot * scale;
      }
    }
    return push(std::move(out), any_grad({q, k}), "attn_scores", {q, k},
                [this, q, k, s, scale, batch, dh](const Tensor<T>& g) {
                  const Tensor<T>& qv2 = val(q);
                  const Tensor<T>& kv2 = val(k);
                  for (int b = 0; b < batch; ++b) {
                    const T* qb = &qv2.data[static_cast<size_t>(b) * dh];
                    for (int t = 0; t < s; ++t) {
                      T gw = g(b, t) * scale;
                      const T* kt =
                          &kv2.data[static_cast<size_t>(b * s + t) * dh];
                      if (wants(q)) {
                        T* gq = &grad_buf(q).data[static_cast<size_t>(b) * dh];
                        for (int j = 0; j < dh; ++j) gq[j] += gw * kt[j];
                      }
                      if (wants(k)) {
                        T* gk = &grad_buf(k)
                                     .data[static_cast<size_t>(b * s + t) * dh];
                        for (int j = 0; j < dh; ++j) gk[j] += gw * qb[j];
                      }
                    }
                  }
                });
  }

  /// out[b] = sum_t w[b][t] * v[b*s+t]; the value-mixing half of attention.
  Id attn_mix(Id w, Id v, int s) {
    const Tensor<T>& wv = val(w);
    const Tensor<T>& vv = val(v);
    int batch = wv.shape[0], dh = vv.cols();
    if (wv.cols() != s || vv.shape[0] != batch * s) {
      throw ShapeError("attn_mix: shape mismatch");
    }
    Tensor<T> out = Tensor<T>::zeros({batch, dh});
    for (int b = 0; b < batch; ++b) {
      T* ob = &out.data[static_cast<size_t>(b) * dh];
      for (int t = 0; t < s; ++t) {
        T wt = wv(b, t);
        const T* vt = &vv.data[static_cast<size_t>(b * s + t) * dh];
        for (int j = 0; j < dh; ++j) ob[j] += wt * vt[j];
      }
    }
    return push(std::move(out), any_grad({w, v}), "attn_mix", {w, v},
                [this, w, v, s, batch, dh](const Tensor<T>& g) {
                  const Tensor<T>& wv2 = val(w);
                  const Tensor<T>& vv2 = val(v);
                  for (int b = 0; b < batch; ++b) {
                    const T* gb = &g.data[static_cast<size_t>(b) * dh];
                    for (int t = 0; t < s; ++t) {
                      const T* vt =
                          &vv2.data[static_cast<size_t>(b * s + t) * dh];
                      if (wants(w)) {
                        T dot = T(0);
                        for (int j = 0; j < dh; ++j) dot += gb[j] * vt[j];
                        grad_buf(w)(b, t) += dot;
                      }
                      if (wants(v)) {
                        T wt = wv2(b, t);
                        T* gv = &grad_buf(v)
                                     .data[static_cast<size_t>(b * s + t) * dh];
                        for (int j = 0; j < dh; ++j) gv[j] += wt * gb[j];
                      }
                    }
                  }
                });
  }

  // ------------------------------------------------------------------ loss

  /// Mean cross-entropy over rows with log-sum-exp stabilization.
  Id cross_entropy_mean(Id logits, std::vector<int> labels) {
    const Tensor<T>& lv = val(logits);
    int m = lv.shape[0], vocab = lv.cols();
    if (static_cast<int>(labels.size()) != m) {
      throw ShapeError("cross_entropy_mean: label count mismatch");
    }
    for (int y : labels) {
      if (y < 0 || y >= vocab) {
        throw IndexError("cross_entropy_mean: label " + std::to_string(y) +
                         " out of range [0," + std::to_string(vocab) + ")");
      }
    }
    T total = T(0);
    for (int i = 0; i < m; ++i) {
      const T* x = &lv.data[static_cast<size_t>(i) * vocab];
      T mx = x[0];
      for (int j = 1; j < vocab; ++j) mx = std::max(mx, x[j]);
      T s = T(0);
      for (int j = 0; j < vocab; ++j) s += std::exp(x[j] - mx);
      total += (std::log(s) + mx) - x[labels[i]];
    }
    total /= T(m);
    return push(
        Tensor<T>({1}, {total}), any_grad({logits}), "cross_entropy_mean",
        {logits},
        [this, logits, lab = std::move(labels), m, vocab](const Tensor<T>& g) {
          if (!wants(logits)) return;
          T gout = g.data[0] / T(m);
          Tensor<T>& gl = grad_buf(logits);
          const Tensor<T>& lv2 = val(logits);
          for (int i = 0; i < m; ++i) {
            const T* x = &lv2.data[static_cast<size_t>(i) * vocab];
            T mx = x[0];
            for (int j = 1; j < vocab; ++j) mx = std::max(mx, x[j]);
            T s = T(0);
            for (int j = 0; j < vocab; ++j) s += std::exp(x[j] - mx);
            T* gx = &gl.data[static_cast<size_t>(i) * vocab];
            for (int j = 0; j < vocab; ++j)
              gx[j] += gout * std::exp(x[j] - mx) / s;
            gx[lab[i]] -= gout;
          }
        });
  }

  // -------------------------------------------------------------- backward

  /// Reverse sweep from a scalar output. Each node is visited exactly once,
  /// in reverse creation order.
  void backward(Id loss) {
    if (val(loss).numel() != 1) {
      throw ShapeError("backward: output must be scalar");
    }
    if (!nodes_[loss].requires_grad) {
      throw ShapeError("backward: output does not require grad");
    }
    for (Node& n : nodes_) {
      if (n.requires_grad) n.grad = Tensor<T>::zeros(n.value.shape);
    }
    nodes_[loss].grad.data[0] = T(1);
    for (Id i = static_cast<Id>(nodes_.size()) - 1; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.requires_grad || !n.backward) continue;
      if (i > loss) continue;  // nodes created after the loss get no signal
      n.backward(n.grad);
    }
    if (check_finite_outputs) {
      for (const Node& n : nodes_) {
        if (n.requires_grad && n.grad.numel() > 0) {
          check_finite<T>(n.grad.data, (std::string("grad:") + n.op).c_str());
        }
      }
    }
  }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    std::function<void(const Tensor<T>&)> backward;
    bool requires_grad = false;
    const char* op = "";
  };

  std::vector<Node> nodes_;

  const Tensor<T>& val(Id id) const { return nodes_[id].value; }
  bool wants(Id id) const { return nodes_[id].requires_grad; }
  Tensor<T>& grad_buf(Id id) { return nodes_[id].grad; }

  bool any_grad(const std::vector<Id>& ids) const {
    for (Id id : ids)
      if (nodes_[id].requires_grad) return true;
    return false;
  }

  static void axpy(Tensor<T>& acc, const Tensor<T>& g, T c) {
    for (size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += c * g.data[i];
  }

  Id push(Tensor<T> value, bool requires_grad, const char* op,
          const std::vector<Id>& /*parents*/,
          std::function<void(const Tensor<T>&)> backward) {
    if (check_finite_outputs) check_finite<T>(value.data, op);
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.op = op;
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size()) - 1;
  }
};

}  // namespace groklab
