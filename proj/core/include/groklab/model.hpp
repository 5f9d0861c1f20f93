// SPDX-License-Identifier: Apache-2.0
#pragma once

// One-layer transformer with a switchboard over four architectural axes:
// normalization (LayerNorm / RMSNorm / spherical projection), unembedding
// (standard linear / temperature-scaled cosine), attention routing
// (learned / uniform) and embedding initialization (random / Fourier).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "groklab/common.hpp"
#include "groklab/rng.hpp"
#include "groklab/tape.hpp"
#include "groklab/tensor.hpp"

namespace groklab {

enum class NormMode { LayerNorm, RmsNorm, Spherical };
enum class UnembedMode { Standard, BoundedCosine };
enum class AttentionMode { Learned, Uniform };

struct ModelConfig {
  int vocab_size = 114;
  int seq_len = 3;
  int d_model = 128;
  int n_heads = 4;
  int d_head = 32;
  int d_mlp = 512;
  NormMode norm_mode = NormMode::LayerNorm;
  UnembedMode unembed_mode = UnembedMode::Standard;
  double tau = 10.0;
  AttentionMode attention_mode = AttentionMode::Learned;
  bool fourier_init = false;
  std::vector<int> fourier_freqs = {1, 2, 3, 4, 5};
  uint64_t init_seed = 0;

  int norm_sites() const {
    return norm_mode == NormMode::Spherical ? 0 : 3;
  }
  bool has_beta() const { return norm_mode == NormMode::LayerNorm; }

  void validate() const {
    if (vocab_size < 2 || seq_len < 1 || d_model < 1 || n_heads < 1 ||
        d_head < 1 || d_mlp < 1) {
      throw ConfigError("model config: non-positive dimension");
    }
    if (n_heads * d_head != d_model) {
      throw ConfigError("model config: n_heads * d_head != d_model");
    }
    if (norm_mode == NormMode::Spherical &&
        unembed_mode != UnembedMode::BoundedCosine) {
      throw ConfigError(
          "model config: spherical norm mode requires the bounded cosine "
          "unembedding");
    }
    if (fourier_init &&
        2 * static_cast<int>(fourier_freqs.size()) > d_model) {
      throw ConfigError("model config: 2*|fourier_freqs| exceeds d_model");
    }
    if (tau <= 0.0) throw ConfigError("model config: tau must be positive");
  }
};

template <typename T>
struct Params {
  Tensor<T> token_embed;              // vocab x d_model
  Tensor<T> pos_embed;                // seq_len x d_model
  std::vector<Tensor<T>> w_q, w_k, w_v;  // per head, d_model x d_head
  Tensor<T> w_o;                      // d_model x d_model
  Tensor<T> w_in;                     // d_model x d_mlp
  Tensor<T> b_in;                     // d_mlp
  Tensor<T> w_out;                    // d_mlp x d_model
  Tensor<T> b_out;                    // d_model
  std::vector<Tensor<T>> norm_gamma;  // per norm site (LayerNorm/RMSNorm)
  std::vector<Tensor<T>> norm_beta;   // per norm site (LayerNorm only)
  Tensor<T> w_unembed;                // d_model x vocab

  /// Visits every tensor with a stable name; the same order is used by the
  /// optimizer state and the checkpoint writer.
  template <typename Fn>
  void for_each(Fn&& fn) {
    fn("token_embed", token_embed);
    fn("pos_embed", pos_embed);
    for (size_t h = 0; h < w_q.size(); ++h) {
      fn(("w_q." + std::to_string(h)).c_str(), w_q[h]);
      fn(("w_k." + std::to_string(h)).c_str(), w_k[h]);
      fn(("w_v." + std::to_string(h)).c_str(), w_v[h]);
    }
    fn("w_o", w_o);
    fn("w_in", w_in);
    fn("b_in", b_in);
    fn("w_out", w_out);
    fn("b_out", b_out);
    for (size_t s = 0; s < norm_gamma.size(); ++s) {
      fn(("norm_gamma." + std::to_string(s)).c_str(), norm_gamma[s]);
    }
    for (size_t s = 0; s < norm_beta.size(); ++s) {
      fn(("norm_beta." + std::to_string(s)).c_str(), norm_beta[s]);
    }
    fn("w_unembed", w_unembed);
  }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    const_cast<Params*>(this)->for_each(
        [&](const char* name, Tensor<T>& t) { fn(name, t); });
  }

  template <typename U>
  Params<U> cast() const {
    Params<U> out;
    out.token_embed = token_embed.template cast<U>();
    out.pos_embed = pos_embed.template cast<U>();
    for (const auto& t : w_q) out.w_q.push_back(t.template cast<U>());
    for (const auto& t : w_k) out.w_k.push_back(t.template cast<U>());
    for (const auto& t : w_v) out.w_v.push_back(t.template cast<U>());
    out.w_o = w_o.template cast<U>();
    out.w_in = w_in.template cast<U>();
    out.b_in = b_in.template cast<U>();
    out.w_out = w_out.template cast<U>();
    out.b_out = b_out.template cast<U>();
    for (const auto& t : norm_gamma)
      out.norm_gamma.push_back(t.template cast<U>());
    for (const auto& t : norm_beta)
      out.norm_beta.push_back(t.template cast<U>());
    out.w_unembed = w_unembed.template cast<U>();
    return out;
  }
};

inline constexpr double kInitStd = 0.02;

/// Seeded initialization: all weights i.i.d. normal(0, 0.02^2), biases and
/// beta zero, gamma one. With fourier_init, embedding dims (2j, 2j+1) of
/// each numeric token x are overwritten with 0.02*cos(2*pi*k_j*x/p) and
/// 0.02*sin(2*pi*k_j*x/p); the operator token row keeps its random init.
template <typename T>
Params<T> init_params(const ModelConfig& cfg) {
  cfg.validate();
  SplitMix64 rng(cfg.init_seed);
  Params<T> p;
  p.token_embed = Tensor<T>::randn({cfg.vocab_size, cfg.d_model}, rng, kInitStd);
  p.pos_embed = Tensor<T>::randn({cfg.seq_len, cfg.d_model}, rng, kInitStd);
  for (int h = 0; h < cfg.n_heads; ++h) {
    p.w_q.push_back(Tensor<T>::randn({cfg.d_model, cfg.d_head}, rng, kInitStd));
    p.w_k.push_back(Tensor<T>::randn({cfg.d_model, cfg.d_head}, rng, kInitStd));
    p.w_v.push_back(Tensor<T>::randn({cfg.d_model, cfg.d_head}, rng, kInitStd));
  }
  p.w_o = Tensor<T>::randn({cfg.d_model, cfg.d_model}, rng, kInitStd);
  p.w_in = Tensor<T>::randn({cfg.d_model, cfg.d_mlp}, rng, kInitStd);
  p.b_in = Tensor<T>::zeros({cfg.d_mlp});
  p.w_out = Tensor<T>::randn({cfg.d_mlp, cfg.d_model}, rng, kInitStd);
  p.b_out = Tensor<T>::zeros({cfg.d_model});
  for (int s = 0; s < cfg.norm_sites(); ++s) {
    p.norm_gamma.push_back(Tensor<T>::full({cfg.d_model}, T(1)));
    if (cfg.has_beta()) p.norm_beta.push_back(Tensor<T>::zeros({cfg.d_model}));
  }
  p.w_unembed = Tensor<T>::randn({cfg.d_model, cfg.vocab_size}, rng, kInitStd);

  if (cfg.fourier_init) {
    int modulus = cfg.vocab_size - 1;  // numeric tokens 0..p-1
    for (int x = 0; x < modulus; ++x) {
      for (size_t j = 0; j < cfg.fourier_freqs.size(); ++j) {
        double phase = 2.0 * std::numbers::pi * cfg.fourier_freqs[j] * x /
                       static_cast<double>(modulus);
        p.token_embed(x, static_cast<int>(2 * j)) =
            static_cast<T>(kInitStd * std::cos(phase));
        p.token_embed(x, static_cast<int>(2 * j + 1)) =
            static_cast<T>(kInitStd * std::sin(phase));
      }
    }
  }
  return p;
}

/// Tape ids for staged parameters, mirroring Params.
template <typename T>
struct ParamIds {
  using Id = typename Tape<T>::Id;
  Id token_embed, pos_embed;
  std::vector<Id> w_q, w_k, w_v;
  Id w_o, w_in, b_in, w_out, b_out;
  std::vector<Id> norm_gamma, norm_beta;
  Id w_unembed;
};

template <typename T>
ParamIds<T> stage_params(Tape<T>& tape, const Params<T>& p,
                         bool requires_grad) {
  ParamIds<T> ids;
  ids.token_embed = tape.leaf(p.token_embed, requires_grad);
  ids.pos_embed = tape.leaf(p.pos_embed, requires_grad);
  for (size_t h = 0; h < p.w_q.size(); ++h) {
    ids.w_q.push_back(tape.leaf(p.w_q[h], requires_grad));
    ids.w_k.push_back(tape.leaf(p.w_k[h], requires_grad));
    ids.w_v.push_back(tape.leaf(p.w_v[h], requires_grad));
  }
  ids.w_o = tape.leaf(p.w_o, requires_grad);
  ids.w_in = tape.leaf(p.w_in, requires_grad);
  ids.b_in = tape.leaf(p.b_in, requires_grad);
  ids.w_out = tape.leaf(p.w_out, requires_grad);
  ids.b_out = tape.leaf(p.b_out, requires_grad);
  for (const auto& g : p.norm_gamma)
    ids.norm_gamma.push_back(tape.leaf(g, requires_grad));
  for (const auto& b : p.norm_beta)
    ids.norm_beta.push_back(tape.leaf(b, requires_grad));
  ids.w_unembed = tape.leaf(p.w_unembed, requires_grad);
  return ids;
}

template <typename T>
struct ForwardResult {
  using Id = typename Tape<T>::Id;
  Id logits;      // batch x vocab
  Id h_final;     // batch x d_model, hidden state read by the unembedding
  Id mlp_hidden;  // batch x d_mlp, post-ReLU activations at the last position
  Id attn_weights_head0;  // batch x seq_len, for inspection
};

/// Forward pass over a batch of token sequences (3 ids per example).
/// Only the final ("=") position feeds the unembedding, and with a single
/// layer the non-final residual positions are never consumed downstream, so
/// the block is evaluated at the prediction position only; keys and values
/// still cover all positions.
template <typename T>
ForwardResult<T> forward(Tape<T>& tape, const ParamIds<T>& w,
                         const ModelConfig& cfg,
                         const std::vector<int>& tokens) {
  using Id = typename Tape<T>::Id;
  const int s = cfg.seq_len;
  if (tokens.size() % static_cast<size_t>(s) != 0 || tokens.empty()) {
    throw ShapeError("forward: token stream not a multiple of seq_len");
  }
  const int batch = static_cast<int>(tokens.size()) / s;

  Id x0_all = tape.add_rows_cycle(tape.gather_rows(w.token_embed, tokens),
                                  w.pos_embed);
  Id x0_final = tape.take_every(x0_all, s - 1, s);

  const bool spherical = cfg.norm_mode == NormMode::Spherical;
  auto norm_site = [&](Id x, int site) -> Id {
    if (spherical) return tape.l2_normalize_rows(x);
    if (cfg.norm_mode == NormMode::LayerNorm) {
      return tape.layer_norm_rows(x, w.norm_gamma[site], w.norm_beta[site]);
    }
    return tape.rms_norm_rows(x, w.norm_gamma[site]);
  };

  // Attention input: pre-norm of x0 (baselines) or the projected stream.
  Id a_all = spherical ? tape.l2_normalize_rows(x0_all) : norm_site(x0_all, 0);
  Id a_final = tape.take_every(a_all, s - 1, s);

  T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(cfg.d_head)));
  std::vector<Id> head_out;
  Id attn_weights0 = -1;
  for (int h = 0; h < cfg.n_heads; ++h) {
    Id v = tape.matmul(a_all, w.w_v[h]);
    Id scores;
    if (cfg.attention_mode == AttentionMode::Uniform) {
      // Pre-softmax scores overridden to zero: no gradient path to Q/K and
      // the final-position weights become exactly uniform.
      scores = tape.leaf(Tensor<T>::zeros({batch, s}), false);
    } else {
      Id q = tape.matmul(a_final, w.w_q[h]);
      Id k = tape.matmul(a_all, w.w_k[h]);
      scores = tape.attn_scores(q, k, s, scale);
    }
    Id weights = tape.softmax_rows(scores);
    if (h == 0) attn_weights0 = weights;
    head_out.push_back(tape.attn_mix(weights, v, s));
  }
  Id attn_out = tape.matmul(tape.concat_cols(head_out), w.w_o);

  Id h_mid, mlp_in;
  if (spherical) {
    Id h_in_final = tape.take_every(a_all, s - 1, s);
    h_mid = tape.l2_normalize_rows(tape.add(h_in_final, attn_out));
    mlp_in = h_mid;
  } else {
    h_mid = tape.add(x0_final, attn_out);  // x1
    mlp_in = norm_site(h_mid, 1);
  }

  Id hidden = tape.relu(tape.add_bias(tape.matmul(mlp_in, w.w_in), w.b_in));
  Id mlp_out = tape.add_bias(tape.matmul(hidden, w.w_out), w.b_out);
  Id post_mlp = tape.add(h_mid, mlp_out);  // x2 or pre-projection h_l

  Id h_final = spherical ? tape.l2_normalize_rows(post_mlp)
                         : norm_site(post_mlp, 2);

  Id logits;
  if (cfg.unembed_mode == UnembedMode::Standard) {
    logits = tape.matmul(h_final, w.w_unembed);
  } else {
    logits = tape.scale(tape.matmul(tape.l2_normalize_rows(h_final),
                                    tape.l2_normalize_cols(w.w_unembed)),
                        static_cast<T>(cfg.tau));
  }

  ForwardResult<T> r;
  r.logits = logits;
  r.h_final = h_final;
  r.mlp_hidden = hidden;
  r.attn_weights_head0 = attn_weights0;
  return r;
}

/// Post-ReLU MLP activations at the final position, bitwise consistent with
/// forward (it is the same graph).
template <typename T>
Tensor<T> mlp_activations(const Params<T>& params, const ModelConfig& cfg,
                          const std::vector<int>& tokens) {
  Tape<T> tape;
  auto ids = stage_params(tape, params, false);
  auto r = forward(tape, ids, cfg, tokens);
  return tape.value(r.mlp_hidden);
}

}  // namespace groklab
