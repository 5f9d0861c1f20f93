// SPDX-License-Identifier: Apache-2.0
#pragma once

// Full-batch AdamW training loop with evaluation cadence, grok-epoch
// detection, metrics CSV / summary JSON persistence and checkpointing.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "groklab/checkpoint.hpp"
#include "groklab/common.hpp"
#include "groklab/model.hpp"
#include "groklab/tasks.hpp"

namespace groklab {

struct TrainConfig {
  double learning_rate = 1e-4;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int max_epochs = 1000;
  int eval_every = 100;
  double grok_threshold = 0.99;
  uint64_t train_seed = 0;
  /// When set, training stops at the first evaluation with
  /// test accuracy >= this value (the run is still recorded normally).
  std::optional<double> stop_at_test_acc;

  void validate() const {
    if (learning_rate <= 0) throw ConfigError("train config: lr must be > 0");
    if (weight_decay < 0) throw ConfigError("train config: negative decay");
    if (beta1 <= 0 || beta1 >= 1 || beta2 <= 0 || beta2 >= 1) {
      throw ConfigError("train config: betas must lie in (0,1)");
    }
    if (eval_every < 1) throw ConfigError("train config: eval_every < 1");
    if (grok_threshold <= 0 || grok_threshold > 1) {
      throw ConfigError("train config: grok_threshold outside (0,1]");
    }
    if (max_epochs < 0) throw ConfigError("train config: negative max_epochs");
  }
};

struct EvalPoint {
  int epoch;
  double train_loss, test_loss;
  double train_acc, test_acc;
  double res_norm;   // mean L2 norm of the final hidden state (test split)
  double max_logit;  // max |logit| over the test split
};

struct RunRecord {
  std::vector<EvalPoint> points;
  std::optional<int> grok_epoch;
  double peak_test_acc = 0.0;
  bool diverged = false;
  double wall_time_seconds = 0.0;
};

/// Decoupled-weight-decay Adam. Decay applies to every parameter tensor.
template <typename T>
class AdamW {
 public:
  explicit AdamW(const TrainConfig& cfg) : cfg_(cfg) {}

  /// theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + lambda * theta),
  /// with bias-corrected first and second moments; t counts from 1.
  void step(Params<T>& params, Params<T>& grads, int t) {
    if (t < 1) throw ConfigError("adamw: step index must be >= 1");
    if (state_m_.empty()) init_state(params);
    double bc1 = 1.0 - std::pow(cfg_.beta1, t);
    double bc2 = 1.0 - std::pow(cfg_.beta2, t);
    size_t slot = 0;
    std::vector<Tensor<T>*> grad_list;
    grads.for_each([&](const char*, Tensor<T>& g) { grad_list.push_back(&g); });
    params.for_each([&](const char* name, Tensor<T>& p) {
      Tensor<T>& g = *grad_list[slot];
      Tensor<T>& m = state_m_[slot];
      Tensor<T>& v = state_v_[slot];
      ++slot;
      if (!p.same_shape(g)) {
        throw ShapeError(std::string("adamw: grad shape mismatch for ") + name);
      }
      check_finite<T>(g.data, name);
      const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
      const T lr = static_cast<T>(cfg_.learning_rate);
      const T eps = static_cast<T>(cfg_.adam_eps);
      const T wd = static_cast<T>(cfg_.weight_decay);
      for (size_t i = 0; i < p.data.size(); ++i) {
        m.data[i] = b1 * m.data[i] + (T(1) - b1) * g.data[i];
        v.data[i] = b2 * v.data[i] + (T(1) - b2) * g.data[i] * g.data[i];
        T m_hat = m.data[i] / static_cast<T>(bc1);
        T v_hat = v.data[i] / static_cast<T>(bc2);
        p.data[i] -= lr * (m_hat / (std::sqrt(v_hat) + eps) + wd * p.data[i]);
      }
    });
  }

 private:
  void init_state(Params<T>& params) {
    params.for_each([&](const char*, Tensor<T>& p) {
      state_m_.push_back(Tensor<T>::zeros(p.shape));
      state_v_.push_back(Tensor<T>::zeros(p.shape));
    });
  }

  TrainConfig cfg_;
  std::vector<Tensor<T>> state_m_, state_v_;
};

struct SplitMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
  double res_norm = 0.0;
  double max_logit = 0.0;
};

/// Loss and accuracy over one split (no gradients). Argmax ties break
/// toward the lowest class id.
template <typename T>
SplitMetrics evaluate(const Params<T>& params, const ModelConfig& cfg,
                      const TaskDataset& ds, const std::vector<int>& idx) {
  if (idx.empty()) throw ConfigError("evaluate: empty split");
  std::vector<int> tokens, labels;
  collect_split(ds, idx, tokens, labels);
  Tape<T> tape;
  auto ids = stage_params(tape, params, false);
  auto r = forward(tape, ids, cfg, tokens);
  auto loss_id = tape.cross_entropy_mean(r.logits, labels);

  const Tensor<T>& logits = tape.value(r.logits);
  int batch = logits.shape[0], vocab = logits.cols();
  int correct = 0;
  double max_abs_logit = 0.0;
  for (int i = 0; i < batch; ++i) {
    const T* row = &logits.data[static_cast<size_t>(i) * vocab];
    int best = 0;
    for (int j = 1; j < vocab; ++j)
      if (row[j] > row[best]) best = j;
    if (best == labels[static_cast<size_t>(i)]) ++correct;
    for (int j = 0; j < vocab; ++j)
      max_abs_logit = std::max(max_abs_logit,
                               std::abs(static_cast<double>(row[j])));
  }

  const Tensor<T>& h = tape.value(r.h_final);
  int d = h.cols();
  double norm_sum = 0.0;
  for (int i = 0; i < batch; ++i) {
    double ss = 0.0;
    for (int j = 0; j < d; ++j) {
      double v = static_cast<double>(h(i, j));
      ss += v * v;
    }
    norm_sum += std::sqrt(ss);
  }

  SplitMetrics m;
  m.loss = static_cast<double>(tape.value(loss_id).data[0]);
  m.accuracy = static_cast<double>(correct) / batch;
  m.res_norm = norm_sum / batch;
  m.max_logit = max_abs_logit;
  return m;
}

inline std::string format_metric(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_metrics_csv(const std::string& path,
                              const std::vector<EvalPoint>& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write metrics csv: " + path);
  out << "epoch,train_loss,test_loss,train_acc,test_acc,res_norm,max_logit\n";
  for (const auto& p : points) {
    out << p.epoch << ',' << format_metric(p.train_loss) << ','
        << format_metric(p.test_loss) << ',' << format_metric(p.train_acc)
        << ',' << format_metric(p.test_acc) << ','
        << format_metric(p.res_norm) << ',' << format_metric(p.max_logit)
        << '\n';
  }
}

/// One gradient step per epoch over the full training split. Evaluates at
/// epoch 0, every eval_every epochs and at the final epoch. A non-finite
/// loss or gradient truncates the record with the divergence flag set.
/// When out_dir is non-empty, writes metrics.csv, checkpoint_final.ckpt and
/// (at the grok epoch) checkpoint_grok.ckpt there.
template <typename T>
RunRecord train(const ModelConfig& model_cfg, const TaskDataset& ds,
                const TrainConfig& train_cfg, const std::string& out_dir = "",
                Params<T>* final_params = nullptr) {
  model_cfg.validate();
  train_cfg.validate();
  if (model_cfg.vocab_size != ds.vocab_size) {
    throw ConfigError("train: model vocab_size does not match dataset");
  }
  auto t_start = std::chrono::steady_clock::now();
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  Params<T> params = init_params<T>(model_cfg);
  AdamW<T> opt(train_cfg);
  RunRecord rec;

  std::vector<int> tokens, labels;
  collect_split(ds, ds.train_idx, tokens, labels);

  bool grok_checkpointed = false;
  auto do_eval = [&](int epoch) {
    SplitMetrics tr = evaluate(params, model_cfg, ds, ds.train_idx);
    SplitMetrics te = evaluate(params, model_cfg, ds, ds.test_idx);
    EvalPoint pt{epoch, tr.loss, te.loss, tr.accuracy, te.accuracy,
                 te.res_norm, te.max_logit};
    rec.points.push_back(pt);
    rec.peak_test_acc = std::max(rec.peak_test_acc, te.accuracy);
    if (!rec.grok_epoch && te.accuracy >= train_cfg.grok_threshold) {
      rec.grok_epoch = epoch;
      if (!out_dir.empty() && !grok_checkpointed) {
        save_checkpoint(out_dir + "/checkpoint_grok.ckpt", params);
        grok_checkpointed = true;
      }
    }
    return te.accuracy;
  };

  do_eval(0);
  bool stop = train_cfg.stop_at_test_acc &&
              rec.points.back().test_acc >= *train_cfg.stop_at_test_acc;

  for (int epoch = 1; epoch <= train_cfg.max_epochs && !stop; ++epoch) {
    try {
      Tape<T> tape;
      auto ids = stage_params(tape, params, true);
      auto r = forward(tape, ids, model_cfg, tokens);
      auto loss = tape.cross_entropy_mean(r.logits, labels);
      tape.backward(loss);

      Params<T> grads;
      grads.token_embed = tape.grad(ids.token_embed);
      grads.pos_embed = tape.grad(ids.pos_embed);
      for (size_t h = 0; h < ids.w_q.size(); ++h) {
        grads.w_q.push_back(tape.grad(ids.w_q[h]));
        grads.w_k.push_back(tape.grad(ids.w_k[h]));
        grads.w_v.push_back(tape.grad(ids.w_v[h]));
      }
      grads.w_o = tape.grad(ids.w_o);
      grads.w_in = tape.grad(ids.w_in);
      grads.b_in = tape.grad(ids.b_in);
      grads.w_out = tape.grad(ids.w_out);
      grads.b_out = tape.grad(ids.b_out);
      for (auto id : ids.norm_gamma) grads.norm_gamma.push_back(tape.grad(id));
      for (auto id : ids.norm_beta) grads.norm_beta.push_back(tape.grad(id));
      grads.w_unembed = tape.grad(ids.w_unembed);

      opt.step(params, grads, epoch);
    } catch (const NumericError&) {
      rec.diverged = true;
      break;
    }

    if (epoch % train_cfg.eval_every == 0 || epoch == train_cfg.max_epochs) {
      double acc;
      try {
        acc = do_eval(epoch);
      } catch (const NumericError&) {
        rec.diverged = true;
        break;
      }
      if (train_cfg.stop_at_test_acc && acc >= *train_cfg.stop_at_test_acc) {
        stop = true;
      }
    }
  }

  rec.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();

  if (!out_dir.empty()) {
    write_metrics_csv(out_dir + "/metrics.csv", rec.points);
    save_checkpoint(out_dir + "/checkpoint_final.ckpt", params);
  }
  if (final_params) *final_params = params;
  return rec;
}

}  // namespace groklab
